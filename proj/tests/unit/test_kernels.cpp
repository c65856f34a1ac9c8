#include <doctest.h>

#include "helpers.hpp"
#include "hv/kernels.hpp"

using namespace hv;
namespace k = hv::kernels;
using hvtest::random_matrix;

namespace {

// Independent j-inner-loop oracle, deliberately a different summation
// structure than the kernels.
Matrix naive_matmul(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int kk = 0; kk < a.cols; ++kk) s += a.at(i, kk) * b.at(kk, j);
            out.at(i, j) = s;
        }
    return out;
}

} // namespace

TEST_CASE("matmul variants match a naive oracle") {
    Rng rng(42);
    Matrix a = random_matrix(7, 5, rng);
    Matrix b = random_matrix(5, 9, rng);
    Matrix out;
    k::matmul(a, b, out);
    CHECK(max_abs_diff(out, naive_matmul(a, b)) < 1e-12);

    Matrix bt = random_matrix(9, 5, rng);
    k::matmul_nt(a, bt, out);
    Matrix bt_t(5, 9);
    for (int i = 0; i < 9; ++i)
        for (int j = 0; j < 5; ++j) bt_t.at(j, i) = bt.at(i, j);
    CHECK(max_abs_diff(out, naive_matmul(a, bt_t)) < 1e-12);

    Matrix at = random_matrix(5, 7, rng);
    k::matmul_tn(at, b, out);
    Matrix at_t(7, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 7; ++j) at_t.at(j, i) = at.at(i, j);
    CHECK(max_abs_diff(out, naive_matmul(at_t, b)) < 1e-12);
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
    Rng rng(7);
    // Odd sizes on purpose; also large enough to cross the parallel cutoff.
    Matrix a = random_matrix(129, 67, rng);
    Matrix b = random_matrix(67, 83, rng);
    Matrix p, s;
    k::matmul(a, b, p);
    k::serial::matmul(a, b, s);
    CHECK(bit_equal(p, s));

    Matrix q = random_matrix(83, 67, rng);
    k::matmul_nt(a, q, p);
    k::serial::matmul_nt(a, q, s);
    CHECK(bit_equal(p, s));

    Matrix r = random_matrix(129, 51, rng);
    k::matmul_tn(a, r, p);
    k::serial::matmul_tn(a, r, s);
    CHECK(bit_equal(p, s));

    Matrix adj = random_matrix(6, 6, rng, 0.0, 1.0);
    Matrix z = random_matrix(6 * 33, 40, rng);
    k::adj_mix(adj, z, 6, p);
    k::serial::adj_mix(adj, z, 6, s);
    CHECK(bit_equal(p, s));

    Matrix x = random_matrix(700, 64, rng, -5.0, 5.0);
    k::row_softmax(x, p);
    k::serial::row_softmax(x, s);
    CHECK(bit_equal(p, s));
}

TEST_CASE("adj_mix applies the adjacency per sample block") {
    Rng rng(3);
    const int n = 4, batches = 3, d = 5;
    Matrix adj = random_matrix(n, n, rng);
    Matrix z = random_matrix(batches * n, d, rng);
    Matrix out;
    k::adj_mix(adj, z, n, out);
    for (int b = 0; b < batches; ++b) {
        Matrix zb(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) zb.at(i, j) = z.at(b * n + i, j);
        Matrix expected = naive_matmul(adj, zb);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j)
                CHECK(out.at(b * n + i, j) ==
                      doctest::Approx(expected.at(i, j)).epsilon(1e-12));
    }
}

TEST_CASE("adj_mix_t equals multiplying by the transpose") {
    Rng rng(11);
    const int n = 3;
    Matrix adj = random_matrix(n, n, rng);
    Matrix adj_t(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) adj_t.at(j, i) = adj.at(i, j);
    Matrix z = random_matrix(2 * n, 4, rng);
    Matrix a, b;
    k::adj_mix_t(adj, z, n, a);
    k::adj_mix(adj_t, z, n, b);
    CHECK(max_abs_diff(a, b) < 1e-14);
}

TEST_CASE("row_softmax rows sum to one") {
    Rng rng(5);
    Matrix x = random_matrix(40, 13, rng, -30.0, 30.0);
    Matrix y;
    k::row_softmax(x, y);
    for (int i = 0; i < y.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < y.cols; ++j) {
            CHECK(y.at(i, j) > 0.0);
            s += y.at(i, j);
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("kernel shape mismatches throw") {
    Matrix a(2, 3), b(4, 2), out;
    CHECK_THROWS_AS(k::matmul(a, b, out), ModelError);
    Matrix adj(3, 3), z(7, 2);
    CHECK_THROWS_AS(k::adj_mix(adj, z, 3, out), ModelError);
}
