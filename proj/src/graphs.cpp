#include "hv/graphs.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace hv::graphs {

using ad::Var;

void GraphConfig::validate() const {
    if (embedding_dim < 1) throw ConfigError("graphs: embedding_dim must be >= 1");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("graphs: alpha must lie in [0, 1]");
}

void register_params(ParamStore& store, const GraphConfig& cfg, int stations,
                     std::uint64_t seed) {
    cfg.validate();
    if (stations < 1) throw ConfigError("graphs: station count must be >= 1");
    {
        Rng rng(derive_seed(seed, "graph.e1"));
        store.add("graph.e1", Matrix::uniform(stations, cfg.embedding_dim, rng, -0.5, 0.5));
    }
    {
        Rng rng(derive_seed(seed, "graph.e2"));
        store.add("graph.e2", Matrix::uniform(stations, cfg.embedding_dim, rng, -0.5, 0.5));
    }
    if (cfg.alpha_learnable) {
        const double a = std::min(std::max(cfg.alpha, 1e-6), 1.0 - 1e-6);
        Matrix raw(1, 1);
        raw.a[0] = std::log(a / (1.0 - a)); // sigmoid(raw) == alpha at init
        store.add("graph.alpha_raw", std::move(raw));
    }
}

Var adaptive_adjacency(Var e1, Var e2) {
    if (e1.rows() != e2.rows() || e1.cols() != e2.cols())
        throw ModelError("graphs: node embedding shapes differ");
    return ad::row_softmax_op(ad::relu(ad::matmul_nt(e1, e2)));
}

namespace {
void check_pair(const Var& a, const Var& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != a.cols())
        throw ModelError("graphs: hybrid adjacency operands must be equal n x n matrices");
}
} // namespace

Var hybrid_adjacency(Var a_adaptive, Var a_elevation, double alpha) {
    check_pair(a_adaptive, a_elevation);
    if (alpha < 0.0 || alpha > 1.0)
        throw ModelError("graphs: alpha must lie in [0, 1]");
    return ad::add_scaled(a_adaptive, alpha, a_elevation, 1.0 - alpha);
}

Var hybrid_adjacency(Var a_adaptive, Var a_elevation, Var alpha_raw) {
    check_pair(a_adaptive, a_elevation);
    Var alpha = ad::sigmoid_op(alpha_raw);
    return ad::add(ad::scale_by(a_adaptive, alpha),
                   ad::scale_by(a_elevation, ad::one_minus(alpha)));
}

void write_adjacency(const Matrix& a, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("graphs: cannot write adjacency file: " + path);
    char buf[32];
    for (int i = 0; i < a.rows; ++i) {
        for (int j = 0; j < a.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.6f", a.at(i, j));
            out << (j ? " " : "") << buf;
        }
        out << '\n';
    }
}

bool is_row_stochastic(const Matrix& a, double tol) {
    if (a.rows != a.cols || a.rows == 0) return false;
    for (int i = 0; i < a.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < a.cols; ++j) {
            if (a.at(i, j) < 0.0) return false;
            s += a.at(i, j);
        }
        if (std::fabs(s - 1.0) > tol) return false;
    }
    return true;
}

} // namespace hv::graphs
