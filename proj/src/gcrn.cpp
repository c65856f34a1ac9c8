#include "hv/gcrn.hpp"

namespace hv::gcrn {

using ad::Var;

void GcrnConfig::validate() const {
    if (hidden_dim < 1) throw ConfigError("gcrn: hidden_dim must be >= 1");
    if (num_layers < 1) throw ConfigError("gcrn: num_layers must be >= 1");
    if (conv_layers < 1) throw ConfigError("gcrn: conv_layers must be >= 1");
}

Var graph_conv(Var a_hat, Var z, Var weight, Var bias, int n, Activation act,
               int conv_layers) {
    if (z.cols() != weight.rows())
        throw ModelError("gcrn: graph_conv feature dim " + std::to_string(z.cols()) +
                         " does not match weight rows " + std::to_string(weight.rows()));
    Var mixed = z;
    for (int i = 0; i < conv_layers; ++i) mixed = ad::adj_mix(a_hat, mixed, n);
    Var out = ad::add_row(ad::matmul(mixed, weight), bias);
    switch (act) {
        case Activation::Identity: return out;
        case Activation::Sigmoid: return ad::sigmoid_op(out);
        case Activation::Tanh: return ad::tanh_op(out);
        case Activation::Relu: return ad::relu(out);
    }
    return out;
}

Var gcrn_cell_step(Var x, Var h_prev, Var a_hat, const CellVars& cell, int n,
                   int conv_layers) {
    if (x.rows() != h_prev.rows())
        throw ModelError("gcrn: input/state row mismatch");
    Var z = ad::concat_cols(x, h_prev);
    Var r = ad::sigmoid_op(
        graph_conv(a_hat, z, cell.reset.weight, cell.reset.bias, n, Activation::Identity,
                   conv_layers));
    Var u = ad::sigmoid_op(
        graph_conv(a_hat, z, cell.update.weight, cell.update.bias, n, Activation::Identity,
                   conv_layers));
    Var z2 = ad::concat_cols(x, ad::hadamard(r, h_prev));
    Var c = ad::tanh_op(
        graph_conv(a_hat, z2, cell.candidate.weight, cell.candidate.bias, n,
                   Activation::Identity, conv_layers));
    return ad::gru_blend(u, h_prev, c);
}

void register_stack(ParamStore& store, const std::string& prefix, const GcrnConfig& cfg,
                    int input_dim, std::uint64_t seed) {
    cfg.validate();
    const int h = cfg.hidden_dim;
    for (int l = 0; l < cfg.num_layers; ++l) {
        const int in_dim = (l == 0 ? input_dim : h) + h;
        const std::string base = prefix + std::to_string(l) + ".";
        for (const char* gate : {"reset", "update", "candidate"}) {
            const std::string wname = base + gate + ".weight";
            Rng rng(derive_seed(seed, wname));
            store.add(wname, Matrix::xavier(in_dim, h, rng));
            store.add(base + gate + ".bias", Matrix::zeros(1, h));
        }
    }
}

CellVars stack_cell(const BoundParams& p, const std::string& prefix, int layer) {
    const std::string base = prefix + std::to_string(layer) + ".";
    return CellVars{
        GateVars{p[base + "reset.weight"], p[base + "reset.bias"]},
        GateVars{p[base + "update.weight"], p[base + "update.bias"]},
        GateVars{p[base + "candidate.weight"], p[base + "candidate.bias"]},
    };
}

EncodeResult encode(ad::Tape& tape, const std::vector<ad::Var>& inputs, Var a_hat,
                    const BoundParams& p, const std::string& prefix, const GcrnConfig& cfg,
                    int n) {
    if (inputs.empty()) throw ModelError("gcrn: encoder needs at least one input step");
    const int rows = inputs[0].rows();
    EncodeResult res;
    res.hidden.resize(cfg.num_layers);
    std::vector<Var> state(cfg.num_layers);
    for (int l = 0; l < cfg.num_layers; ++l)
        state[l] = tape.input(Matrix::zeros(rows, cfg.hidden_dim));
    for (size_t t = 0; t < inputs.size(); ++t) {
        Var x = inputs[t];
        for (int l = 0; l < cfg.num_layers; ++l) {
            state[l] = gcrn_cell_step(x, state[l], a_hat, stack_cell(p, prefix, l), n,
                                      cfg.conv_layers);
            res.hidden[l].push_back(state[l]);
            x = state[l];
        }
    }
    res.final_state = state;
    return res;
}

Var probsparse_attention(Var q, Var k, Var v, const AttentionConfig& cfg, int groups,
                         int seq_len) {
    attn::AttentionSpec spec;
    spec.groups = groups;
    spec.seq_len = seq_len;
    spec.heads = cfg.num_heads;
    spec.sampling_factor = cfg.sampling_factor;
    spec.exact_fallback = cfg.exact_fallback;
    return attn::attention(q, k, v, spec);
}

AugmentedState augmented_state(const std::vector<ad::Var>& hidden_seq, Var h_final,
                               const BoundParams& p, const AttentionConfig& cfg) {
    if (hidden_seq.empty()) throw ModelError("gcrn: empty hidden sequence");
    const int T = static_cast<int>(hidden_seq.size());
    const int rows = hidden_seq[0].rows();
    if (h_final.rows() != rows) throw ModelError("gcrn: final state row mismatch");
    Var all = ad::vconcat(hidden_seq);
    Var q = ad::matmul(all, p["attn.wq"]);
    Var k = ad::matmul(all, p["attn.wk"]);
    Var v = ad::matmul(all, p["attn.wv"]);
    Var o = ad::matmul(probsparse_attention(q, k, v, cfg, rows, T), p["attn.wo"]);
    Var context = ad::slice_rows(o, (T - 1) * rows, T * rows);
    Var augmented = ad::concat_cols(h_final, context);
    Var init = ad::add_row(ad::matmul(augmented, p["head.init.weight"]),
                           p["head.init.bias"]);
    return AugmentedState{augmented, init};
}

std::vector<Var> decode(const std::vector<Var>& init_states, Var first_input, Var a_hat,
                        const BoundParams& p, const GcrnConfig& cfg, int n,
                        const DecodeOptions& opts) {
    if (opts.horizon < 1) throw ModelError("gcrn: decode horizon must be >= 1");
    if (opts.sampling_prob < 0.0 || opts.sampling_prob > 1.0)
        throw ModelError("gcrn: sampling_prob must lie in [0, 1]");
    if (opts.sampling_prob > 0.0 &&
        (opts.ground_truth == nullptr ||
         static_cast<int>(opts.ground_truth->size()) < opts.horizon || opts.rng == nullptr))
        throw ModelError("gcrn: scheduled sampling needs ground truth and an rng");
    std::vector<Var> state = init_states;
    std::vector<Var> preds;
    preds.reserve(opts.horizon);
    Var input = first_input;
    for (int step = 0; step < opts.horizon; ++step) {
        if (step > 0) {
            const bool use_truth = opts.sampling_prob > 0.0 &&
                                   opts.rng->uniform() < opts.sampling_prob;
            input = use_truth ? (*opts.ground_truth)[step - 1] : preds.back();
        }
        Var x = input;
        for (size_t l = 0; l < state.size(); ++l) {
            state[l] = gcrn_cell_step(x, state[l], a_hat,
                                      stack_cell(p, "gcrn.dec", static_cast<int>(l)), n,
                                      cfg.conv_layers);
            x = state[l];
        }
        preds.push_back(ad::add_row(ad::matmul(x, p["head.out.weight"]),
                                    p["head.out.bias"]));
    }
    return preds;
}

} // namespace hv::gcrn
