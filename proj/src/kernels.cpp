#include "hv/kernels.hpp"

#include <cmath>

namespace hv::kernels {

namespace {
void require(bool ok, const char* what) {
    if (!ok) throw ModelError(std::string("kernels: ") + what);
}
// Parallelizing tiny matrices costs more than it saves.
constexpr long kParallelCutoff = 16 * 1024;
} // namespace

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.cols == b.rows, "matmul shape mismatch");
    out = Matrix::zeros(a.rows, b.cols);
    const long work = static_cast<long>(a.rows) * a.cols * b.cols;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int i = 0; i < a.rows; ++i) {
        double* o = out.row(i);
        const double* ai = a.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) o[j] += aik * bk[j];
        }
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.cols == b.cols, "matmul_nt shape mismatch");
    out = Matrix::zeros(a.rows, b.rows);
    const long work = static_cast<long>(a.rows) * a.cols * b.rows;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int i = 0; i < a.rows; ++i) {
        double* o = out.row(i);
        const double* ai = a.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            o[j] = s;
        }
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.rows == b.rows, "matmul_tn shape mismatch");
    out = Matrix::zeros(a.cols, b.cols);
    const long work = static_cast<long>(a.rows) * a.cols * b.cols;
    // Parallel over output rows (= a columns); k loop stays innermost-ordered.
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int i = 0; i < a.cols; ++i) {
        double* o = out.row(i);
        for (int k = 0; k < a.rows; ++k) {
            const double aki = a.at(k, i);
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) o[j] += aki * bk[j];
        }
    }
}

void adj_mix(const Matrix& adj, const Matrix& z, int n, Matrix& out) {
    require(adj.rows == n && adj.cols == n, "adj_mix: adjacency not n x n");
    require(z.rows % n == 0, "adj_mix: rows not a multiple of n");
    out = Matrix::zeros(z.rows, z.cols);
    const int batches = z.rows / n;
    const long work = static_cast<long>(z.rows) * n * z.cols;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int b = 0; b < batches; ++b) {
        const int base = b * n;
        for (int i = 0; i < n; ++i) {
            double* o = out.row(base + i);
            const double* arow = adj.row(i);
            for (int k = 0; k < n; ++k) {
                const double w = arow[k];
                const double* zk = z.row(base + k);
                for (int j = 0; j < z.cols; ++j) o[j] += w * zk[j];
            }
        }
    }
}

void adj_mix_t(const Matrix& adj, const Matrix& z, int n, Matrix& out) {
    require(adj.rows == n && adj.cols == n, "adj_mix_t: adjacency not n x n");
    require(z.rows % n == 0, "adj_mix_t: rows not a multiple of n");
    out = Matrix::zeros(z.rows, z.cols);
    const int batches = z.rows / n;
    const long work = static_cast<long>(z.rows) * n * z.cols;
#pragma omp parallel for schedule(static) if (work > kParallelCutoff)
    for (int b = 0; b < batches; ++b) {
        const int base = b * n;
        for (int i = 0; i < n; ++i) {
            double* o = out.row(base + i);
            for (int k = 0; k < n; ++k) {
                const double w = adj.at(k, i);
                const double* zk = z.row(base + k);
                for (int j = 0; j < z.cols; ++j) o[j] += w * zk[j];
            }
        }
    }
}

void adj_mix_outer_acc(const Matrix& g, const Matrix& z, int n, Matrix& acc) {
    require(g.rows == z.rows && g.cols == z.cols, "adj_mix_outer shape mismatch");
    require(acc.rows == n && acc.cols == n, "adj_mix_outer acc not n x n");
    const int batches = g.rows / n;
    // Parallel over adjacency entries; the batch sum per entry stays serial
    // and ordered.
#pragma omp parallel for schedule(static) if (static_cast<long>(n) * n * g.cols * batches > kParallelCutoff)
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < n; ++k) {
            double s = 0.0;
            for (int b = 0; b < batches; ++b) {
                const double* gi = g.row(b * n + i);
                const double* zk = z.row(b * n + k);
                for (int j = 0; j < g.cols; ++j) s += gi[j] * zk[j];
            }
            acc.at(i, k) += s;
        }
    }
}

void row_softmax(const Matrix& in, Matrix& out) {
    out = Matrix(in.rows, in.cols);
#pragma omp parallel for schedule(static) if (in.size() > static_cast<size_t>(kParallelCutoff))
    for (int i = 0; i < in.rows; ++i) {
        const double* x = in.row(i);
        double* y = out.row(i);
        double mx = x[0];
        for (int j = 1; j < in.cols; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (int j = 0; j < in.cols; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
        }
        const double inv = 1.0 / z;
        for (int j = 0; j < in.cols; ++j) y[j] *= inv;
    }
}

#define HV_ELEMENTWISE(name, expr)                                                   \
    void name(const Matrix& in, Matrix& out) {                                       \
        out = Matrix(in.rows, in.cols);                                              \
        const long total = static_cast<long>(in.size());                             \
        _Pragma("omp parallel for schedule(static) if (total > kParallelCutoff)")    \
        for (long t = 0; t < total; ++t) {                                           \
            const double x = in.a[t];                                                \
            out.a[t] = (expr);                                                       \
        }                                                                            \
    }

HV_ELEMENTWISE(relu, x > 0.0 ? x : 0.0)
HV_ELEMENTWISE(tanh_, std::tanh(x))
HV_ELEMENTWISE(sigmoid, 1.0 / (1.0 + std::exp(-x)))
#undef HV_ELEMENTWISE

void hadamard(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.same_shape(b), "hadamard shape mismatch");
    out = Matrix(a.rows, a.cols);
    const long total = static_cast<long>(a.size());
#pragma omp parallel for schedule(static) if (total > kParallelCutoff)
    for (long t = 0; t < total; ++t) out.a[t] = a.a[t] * b.a[t];
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
    require(x.same_shape(y), "axpy shape mismatch");
    const long total = static_cast<long>(x.size());
#pragma omp parallel for schedule(static) if (total > kParallelCutoff)
    for (long t = 0; t < total; ++t) y.a[t] += alpha * x.a[t];
}

void add_row_broadcast(const Matrix& a, const Matrix& bias, Matrix& out) {
    require(bias.rows == 1 && bias.cols == a.cols, "bias shape mismatch");
    out = Matrix(a.rows, a.cols);
#pragma omp parallel for schedule(static) if (a.size() > static_cast<size_t>(kParallelCutoff))
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* o = out.row(i);
        for (int j = 0; j < a.cols; ++j) o[j] = ai[j] + bias.a[j];
    }
}

void col_sum(const Matrix& a, Matrix& out) {
    out = Matrix::zeros(1, a.cols);
    for (int i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        for (int j = 0; j < a.cols; ++j) out.a[j] += ai[j];
    }
}

namespace serial {

void matmul(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.cols == b.rows, "matmul shape mismatch");
    out = Matrix::zeros(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i) {
        double* o = out.row(i);
        const double* ai = a.row(i);
        for (int k = 0; k < a.cols; ++k) {
            const double aik = ai[k];
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) o[j] += aik * bk[j];
        }
    }
}

void matmul_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.cols == b.cols, "matmul_nt shape mismatch");
    out = Matrix::zeros(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i) {
        double* o = out.row(i);
        const double* ai = a.row(i);
        for (int j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (int k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            o[j] = s;
        }
    }
}

void matmul_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    require(a.rows == b.rows, "matmul_tn shape mismatch");
    out = Matrix::zeros(a.cols, b.cols);
    for (int i = 0; i < a.cols; ++i) {
        double* o = out.row(i);
        for (int k = 0; k < a.rows; ++k) {
            const double aki = a.at(k, i);
            const double* bk = b.row(k);
            for (int j = 0; j < b.cols; ++j) o[j] += aki * bk[j];
        }
    }
}

void adj_mix(const Matrix& adj, const Matrix& z, int n, Matrix& out) {
    require(adj.rows == n && adj.cols == n, "adj_mix: adjacency not n x n");
    require(z.rows % n == 0, "adj_mix: rows not a multiple of n");
    out = Matrix::zeros(z.rows, z.cols);
    const int batches = z.rows / n;
    for (int b = 0; b < batches; ++b) {
        const int base = b * n;
        for (int i = 0; i < n; ++i) {
            double* o = out.row(base + i);
            const double* arow = adj.row(i);
            for (int k = 0; k < n; ++k) {
                const double w = arow[k];
                const double* zk = z.row(base + k);
                for (int j = 0; j < z.cols; ++j) o[j] += w * zk[j];
            }
        }
    }
}

void row_softmax(const Matrix& in, Matrix& out) {
    out = Matrix(in.rows, in.cols);
    for (int i = 0; i < in.rows; ++i) {
        const double* x = in.row(i);
        double* y = out.row(i);
        double mx = x[0];
        for (int j = 1; j < in.cols; ++j) mx = std::max(mx, x[j]);
        double z = 0.0;
        for (int j = 0; j < in.cols; ++j) {
            y[j] = std::exp(x[j] - mx);
            z += y[j];
        }
        const double inv = 1.0 / z;
        for (int j = 0; j < in.cols; ++j) y[j] *= inv;
    }
}

} // namespace serial

} // namespace hv::kernels
