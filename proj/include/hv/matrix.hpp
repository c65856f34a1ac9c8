#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "hv/common.hpp"

namespace hv {

/// Dense row-major matrix of doubles. The one value type every module
/// shares; vectors are 1xN or Nx1 matrices.
struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Matrix() = default;
    Matrix(int r, int c, double fill = 0.0)
        : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

    double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

    double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
    const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }

    size_t size() const { return a.size(); }
    bool empty() const { return a.empty(); }
    bool same_shape(const Matrix& o) const { return rows == o.rows && cols == o.cols; }

    static Matrix zeros(int r, int c) { return Matrix(r, c, 0.0); }
    static Matrix full(int r, int c, double v) { return Matrix(r, c, v); }
    static Matrix identity(int n);
    /// Entries uniform in [lo, hi).
    static Matrix uniform(int r, int c, Rng& rng, double lo, double hi);
    /// Xavier/Glorot uniform for a (fan_in x fan_out) weight.
    static Matrix xavier(int fan_in, int fan_out, Rng& rng);
};

bool all_finite(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool bit_equal(const Matrix& a, const Matrix& b);

std::string shape_str(const Matrix& m);

} // namespace hv
