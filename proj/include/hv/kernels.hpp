#pragma once

#include "hv/matrix.hpp"

namespace hv::kernels {

// Dense compute kernels, OpenMP-parallel over output rows/elements.
// Each output element is accumulated by exactly one thread in the same
// summation order as the serial versions below, so parallel and serial
// results are bit-identical at any thread count.

/// out = a * b
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a * b^T
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
/// out = a^T * b
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);

/// Batched adjacency application. z has R = (R/n) * n rows grouped by
/// sample; for every sample block, out_block = adj * z_block.
/// adj is (n x n), z is (R x d).
void adj_mix(const Matrix& adj, const Matrix& z, int n, Matrix& out);
/// Same with adj transposed (backward pass for z).
void adj_mix_t(const Matrix& adj, const Matrix& z, int n, Matrix& out);
/// acc += sum over sample blocks of g_block * z_block^T (backward for adj).
void adj_mix_outer_acc(const Matrix& g, const Matrix& z, int n, Matrix& acc);

/// Row-wise softmax (max-shifted).
void row_softmax(const Matrix& in, Matrix& out);

void relu(const Matrix& in, Matrix& out);
void tanh_(const Matrix& in, Matrix& out);
void sigmoid(const Matrix& in, Matrix& out);
void hadamard(const Matrix& a, const Matrix& b, Matrix& out);
/// y += alpha * x
void axpy(double alpha, const Matrix& x, Matrix& y);
/// out = a + bias broadcast over rows; bias is (1 x cols).
void add_row_broadcast(const Matrix& a, const Matrix& bias, Matrix& out);
/// out(1 x cols) = column sums of a.
void col_sum(const Matrix& a, Matrix& out);

namespace serial {
// Reference implementations, plain triple loops. Kept for the kernel
// equivalence tests and the serial-vs-parallel benchmark.
void matmul(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out);
void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out);
void adj_mix(const Matrix& adj, const Matrix& z, int n, Matrix& out);
void row_softmax(const Matrix& in, Matrix& out);
} // namespace serial

} // namespace hv::kernels
