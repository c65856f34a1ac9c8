#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "hv/vit.hpp"

using namespace hv;
using namespace hv::vit;
using hvtest::fd_check;
using hvtest::random_matrix;

namespace {

terrain::PatchGrid grid_of(int rows, int cols, Rng& rng) {
    terrain::ElevationRaster r;
    r.heights = Matrix::uniform(rows, cols, rng, 80.0, 120.0);
    return terrain::patchify(r);
}

VitConfig tiny_cfg(int d = 8, int layers = 1, int heads = 2) {
    VitConfig cfg;
    cfg.embed_dim = d;
    cfg.num_layers = layers;
    cfg.num_heads = heads;
    return cfg;
}

} // namespace

TEST_CASE("embed_patches: zero projection gives zero tokens; shapes hold") {
    Rng rng(51);
    auto grid = grid_of(32, 48, rng); // L = 6
    Matrix flat = flatten_patches(grid);
    CHECK(flat.rows == 6);
    CHECK(flat.cols == 256);

    ad::Tape tape;
    auto tokens = embed_patches(tape.input(flat), tape.input(Matrix::zeros(256, 64)),
                                tape.input(Matrix::zeros(1, 64)));
    CHECK(tokens.rows() == 6);
    CHECK(tokens.cols() == 64);
    for (double v : tokens.value().a) CHECK(v == 0.0);
}

TEST_CASE("embed_patches: identity projection returns the standardized patches") {
    Rng rng(53);
    auto grid = grid_of(32, 32, rng);
    Matrix flat = flatten_patches(grid);

    // Standardization: grid-wide mean 0, std 1.
    double mu = 0.0;
    for (double v : flat.a) mu += v;
    mu /= static_cast<double>(flat.size());
    CHECK(std::fabs(mu) < 1e-9);

    ad::Tape tape;
    auto tokens = embed_patches(tape.input(flat), tape.input(Matrix::identity(256)),
                                tape.input(Matrix::zeros(1, 256)));
    CHECK(bit_equal(tokens.value(), flat));

    Matrix bad(4, 100); // wrong patch vector length
    CHECK_THROWS_AS(embed_patches(tape.input(bad), tape.input(Matrix::identity(256)),
                                  tape.input(Matrix::zeros(1, 256))),
                    ModelError);
}

TEST_CASE("positional_encoding: exact values and range") {
    Matrix pe = positional_encoding(5, 8);
    for (int j = 0; j < 8; j += 2) CHECK(pe.at(0, j) == 0.0);
    for (int j = 1; j < 8; j += 2) CHECK(pe.at(0, j) == 1.0);
    // pos=1, i=0: (sin 1, cos 1), evaluated directly
    CHECK(pe.at(1, 0) == doctest::Approx(0.8414709848).epsilon(1e-9));
    CHECK(pe.at(1, 1) == doctest::Approx(0.5403023059).epsilon(1e-9));
    for (double v : pe.a) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
    CHECK_THROWS_AS(positional_encoding(4, 7), ModelError);
}

TEST_CASE("transformer_encode: deterministic and permutation-equivariant") {
    Rng rng(55);
    VitConfig cfg = tiny_cfg();
    ParamStore store;
    register_params(store, cfg, 99);

    Matrix flat = random_matrix(6, 256, rng);
    Matrix pe = positional_encoding(6, cfg.embed_dim);

    auto run = [&](const Matrix& patches, const Matrix& pos) {
        ad::Tape tape;
        BoundParams p = bind_params(tape, store);
        auto tok = embed_patches(tape.input(patches), p["vit.proj.weight"],
                                 p["vit.proj.bias"]);
        return transformer_encode(ad::add(tok, tape.input(pos)), p, cfg).value();
    };

    Matrix out1 = run(flat, pe);
    Matrix out2 = run(flat, pe);
    CHECK(bit_equal(out1, out2)); // fixed params + input => identical output

    // Permute patches AND their positional encodings together.
    std::vector<int> perm{3, 0, 5, 1, 4, 2};
    Matrix flat_p(6, 256), pe_p(6, cfg.embed_dim);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 256; ++j) flat_p.at(i, j) = flat.at(perm[i], j);
        for (int j = 0; j < cfg.embed_dim; ++j) pe_p.at(i, j) = pe.at(perm[i], j);
    }
    Matrix out_p = run(flat_p, pe_p);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < cfg.embed_dim; ++j)
            CHECK(out_p.at(i, j) == doctest::Approx(out1.at(perm[i], j)).epsilon(1e-9));
}

TEST_CASE("elevation_adjacency: singleton, identical tokens, brute-force oracle") {
    Rng rng(57);
    {
        ad::Tape tape;
        auto tok = tape.input(random_matrix(4, 8, rng));
        auto a = elevation_adjacency(tok, {2}, 2.0);
        CHECK(a.value().rows == 1);
        CHECK(a.value().a[0] == 1.0);
    }
    {
        ad::Tape tape;
        auto tok = tape.input(random_matrix(4, 8, rng));
        auto a = elevation_adjacency(tok, {1, 1}, 3.0); // same patch twice
        for (double v : a.value().a) CHECK(v == doctest::Approx(0.5));
    }
    {
        const double temp = std::sqrt(8.0);
        ad::Tape tape;
        Matrix tokens = random_matrix(6, 8, rng);
        auto a = elevation_adjacency(tape.input(tokens), {0, 3, 5}, temp);
        // Brute-force oracle over the station Gram matrix.
        double gram[3][3];
        const int pick[3] = {0, 3, 5};
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 8; ++k)
                    s += tokens.at(pick[i], k) * tokens.at(pick[j], k);
                gram[i][j] = s / temp;
            }
        for (int i = 0; i < 3; ++i) {
            double z = 0.0;
            for (int j = 0; j < 3; ++j) z += std::exp(gram[i][j]);
            for (int j = 0; j < 3; ++j)
                CHECK(a.value().at(i, j) ==
                      doctest::Approx(std::exp(gram[i][j]) / z).epsilon(1e-9));
        }
    }
    {
        ad::Tape tape;
        auto tok = tape.input(random_matrix(4, 8, rng));
        CHECK_THROWS_AS(elevation_adjacency(tok, {4}, 2.0), ModelError);
    }
}

TEST_CASE("elevation_adjacency is row-stochastic for random pipelines") {
    Rng rng(59);
    VitConfig cfg = tiny_cfg(8, 2, 2);
    ParamStore store;
    register_params(store, cfg, 1234);
    auto grid = grid_of(48, 48, rng);
    Matrix flat = flatten_patches(grid);

    ad::Tape tape;
    BoundParams p = bind_params(tape, store);
    auto tokens = encode_tokens(tape, flat, p, cfg);
    auto a = elevation_adjacency(tokens, {0, 4, 8, 2}, cfg.temperature());
    const Matrix& av = a.value();
    for (int i = 0; i < av.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < av.cols; ++j) {
            CHECK(av.at(i, j) > 0.0);
            s += av.at(i, j);
        }
        CHECK(std::fabs(s - 1.0) < 1e-6);
    }
}

TEST_CASE("vit pipeline gradient wrt projection weights matches finite differences") {
    Rng rng(61);
    VitConfig cfg = tiny_cfg(8, 1, 2);
    ParamStore store;
    register_params(store, cfg, 77);
    auto grid = grid_of(32, 32, rng); // L = 4
    Matrix flat = flatten_patches(grid);
    Matrix pe = positional_encoding(4, cfg.embed_dim);
    Matrix w = random_matrix(3, 3, rng);

    // Leaves: projection weight and bias; the rest of the encoder stays at
    // its registered values (bound as inputs inside the builder).
    auto build = [&](ad::Tape& tape, const std::vector<ad::Var>& leaves) {
        BoundParams p;
        p.store = &store;
        for (const auto& e : store.entries) {
            if (e.name == "vit.proj.weight")
                p.vars.push_back(leaves[0]);
            else if (e.name == "vit.proj.bias")
                p.vars.push_back(leaves[1]);
            else
                p.vars.push_back(tape.input(e.value));
        }
        auto tok = embed_patches(tape.input(flat), leaves[0], leaves[1]);
        auto enc = transformer_encode(ad::add(tok, tape.input(pe)), p, cfg);
        auto a = elevation_adjacency(enc, {0, 1, 3}, cfg.temperature());
        return ad::mean_all(ad::hadamard(a, tape.input(w)));
    };
    auto res = fd_check({store.value("vit.proj.weight"), store.value("vit.proj.bias")},
                        build, 1e-5);
    CHECK(res.coords_checked == 256u * 8 + 8);
    CHECK(res.max_rel_err < 1e-4);
}
