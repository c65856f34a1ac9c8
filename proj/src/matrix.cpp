#include "hv/matrix.hpp"

#include <cmath>
#include <cstring>

namespace hv {

double Rng::normal(double mu, double sigma) {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    return mu + sigma * z;
}

Matrix Matrix::identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
    return m;
}

Matrix Matrix::uniform(int r, int c, Rng& rng, double lo, double hi) {
    Matrix m(r, c);
    for (double& v : m.a) v = rng.uniform(lo, hi);
    return m;
}

Matrix Matrix::xavier(int fan_in, int fan_out, Rng& rng) {
    double limit = std::sqrt(6.0 / (fan_in + fan_out));
    return uniform(fan_in, fan_out, rng, -limit, limit);
}

bool all_finite(const Matrix& m) {
    for (double v : m.a)
        if (!std::isfinite(v)) return false;
    return true;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return std::numeric_limits<double>::infinity();
    double d = 0.0;
    for (size_t i = 0; i < a.a.size(); ++i) d = std::max(d, std::fabs(a.a[i] - b.a[i]));
    return d;
}

bool bit_equal(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.a.data(), b.a.data(), a.a.size() * sizeof(double)) == 0;
}

std::string shape_str(const Matrix& m) {
    return "(" + std::to_string(m.rows) + "x" + std::to_string(m.cols) + ")";
}

} // namespace hv
