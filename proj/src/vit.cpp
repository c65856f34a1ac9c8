#include "hv/vit.hpp"

#include "hv/attention.hpp"

namespace hv::vit {

using ad::Var;

void VitConfig::validate() const {
    if (embed_dim <= 0 || num_heads <= 0 || num_layers < 0)
        throw ConfigError("vit: embed_dim/num_heads/num_layers out of range");
    if (embed_dim % num_heads != 0)
        throw ConfigError("vit: embed_dim must be divisible by num_heads");
    if (embed_dim % 2 != 0)
        throw ConfigError("vit: embed_dim must be even for the positional encoding");
    if (patch_size != terrain::kPatchSize)
        throw ConfigError("vit: patch_size must be 16");
}

Matrix positional_encoding(int length, int dim) {
    if (dim % 2 != 0) throw ModelError("vit: positional encoding needs an even dim");
    Matrix pe(length, dim);
    for (int i = 0; 2 * i < dim; ++i) {
        const double freq = std::pow(10000.0, 2.0 * i / dim);
        for (int pos = 0; pos < length; ++pos) {
            pe.at(pos, 2 * i) = std::sin(pos / freq);
            pe.at(pos, 2 * i + 1) = std::cos(pos / freq);
        }
    }
    return pe;
}

Matrix flatten_patches(const terrain::PatchGrid& grid) {
    const int L = static_cast<int>(grid.patches.size());
    const int ps = grid.patch_size;
    if (L == 0) throw ModelError("vit: empty patch grid");
    Matrix flat(L, ps * ps);
    double mu = 0.0;
    for (int l = 0; l < L; ++l) {
        const Matrix& tile = grid.patches[l];
        if (tile.rows != ps || tile.cols != ps)
            throw ModelError("vit: patch is not " + std::to_string(ps) + "x" +
                             std::to_string(ps));
        for (int r = 0; r < ps; ++r)
            for (int c = 0; c < ps; ++c) {
                const double v = tile.at(r, c);
                flat.at(l, r * ps + c) = v;
                mu += v;
            }
    }
    mu /= static_cast<double>(flat.size());
    double var = 0.0;
    for (double v : flat.a) var += (v - mu) * (v - mu);
    var /= static_cast<double>(flat.size());
    const double sd = std::sqrt(var);
    const double inv = sd > 1e-12 ? 1.0 / sd : 0.0; // constant terrain -> all zeros
    for (double& v : flat.a) v = (v - mu) * inv;
    return flat;
}

void register_params(ParamStore& store, const VitConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    const int d = cfg.embed_dim;
    const int pd = cfg.patch_size * cfg.patch_size;
    auto xavier = [&](const std::string& name, int fin, int fout) {
        Rng rng(derive_seed(seed, name));
        store.add(name, Matrix::xavier(fin, fout, rng), !cfg.freeze);
    };
    auto vec = [&](const std::string& name, int n, double fill) {
        store.add(name, Matrix::full(1, n, fill), !cfg.freeze);
    };
    xavier("vit.proj.weight", pd, d);
    vec("vit.proj.bias", d, 0.0);
    for (int l = 0; l < cfg.num_layers; ++l) {
        const std::string p = "vit.enc" + std::to_string(l) + ".";
        vec(p + "ln1.gain", d, 1.0);
        vec(p + "ln1.shift", d, 0.0);
        xavier(p + "attn.wq", d, d);
        xavier(p + "attn.wk", d, d);
        xavier(p + "attn.wv", d, d);
        xavier(p + "attn.wo", d, d);
        vec(p + "ln2.gain", d, 1.0);
        vec(p + "ln2.shift", d, 0.0);
        xavier(p + "ffn.w1", d, cfg.ffn());
        vec(p + "ffn.b1", cfg.ffn(), 0.0);
        xavier(p + "ffn.w2", cfg.ffn(), d);
        vec(p + "ffn.b2", d, 0.0);
    }
}

Var embed_patches(Var flat_patches, Var weight, Var bias) {
    if (flat_patches.cols() != weight.rows())
        throw ModelError("vit: patch vector length " + std::to_string(flat_patches.cols()) +
                         " does not match projection rows " + std::to_string(weight.rows()));
    return ad::add_row(ad::matmul(flat_patches, weight), bias);
}

Var transformer_encode(Var tokens, const BoundParams& p, const VitConfig& cfg) {
    const int L = tokens.rows();
    attn::AttentionSpec spec;
    spec.groups = 1;
    spec.seq_len = L;
    spec.heads = cfg.num_heads;
    spec.exact_fallback = true; // encoder attention is full/dense
    for (int l = 0; l < cfg.num_layers; ++l) {
        const std::string pre = "vit.enc" + std::to_string(l) + ".";
        Var x1 = ad::layer_norm(tokens, p[pre + "ln1.gain"], p[pre + "ln1.shift"]);
        Var q = ad::matmul(x1, p[pre + "attn.wq"]);
        Var k = ad::matmul(x1, p[pre + "attn.wk"]);
        Var v = ad::matmul(x1, p[pre + "attn.wv"]);
        Var att = attn::attention(q, k, v, spec);
        tokens = ad::add(tokens, ad::matmul(att, p[pre + "attn.wo"]));
        Var x2 = ad::layer_norm(tokens, p[pre + "ln2.gain"], p[pre + "ln2.shift"]);
        Var h = ad::relu(ad::add_row(ad::matmul(x2, p[pre + "ffn.w1"]), p[pre + "ffn.b1"]));
        Var f = ad::add_row(ad::matmul(h, p[pre + "ffn.w2"]), p[pre + "ffn.b2"]);
        tokens = ad::add(tokens, f);
    }
    return tokens;
}

Var encode_tokens(ad::Tape& tape, const Matrix& flat_patches, const BoundParams& p,
                  const VitConfig& cfg) {
    Var patches = tape.input(flat_patches);
    Var tok = embed_patches(patches, p["vit.proj.weight"], p["vit.proj.bias"]);
    Var pos = tape.input(positional_encoding(flat_patches.rows, cfg.embed_dim));
    return transformer_encode(ad::add(tok, pos), p, cfg);
}

Var elevation_adjacency(Var tokens, const std::vector<int>& station_patches,
                        double temperature) {
    if (station_patches.empty()) throw ModelError("vit: no station patch indices");
    for (int idx : station_patches)
        if (idx < 0 || idx >= tokens.rows())
            throw ModelError("vit: station patch index " + std::to_string(idx) +
                             " out of range for " + std::to_string(tokens.rows()) + " tokens");
    if (temperature <= 0.0) throw ModelError("vit: temperature must be positive");
    Var s = ad::gather_rows(tokens, station_patches);
    Var gram = ad::scale(ad::matmul_nt(s, s), 1.0 / temperature);
    return ad::row_softmax_op(gram);
}

} // namespace hv::vit
