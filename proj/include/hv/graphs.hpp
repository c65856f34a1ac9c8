#pragma once

#include <cstdint>
#include <string>

#include "hv/params.hpp"

namespace hv::graphs {

struct GraphConfig {
    int embedding_dim = 10;      // node embedding width e
    double alpha = 0.5;          // hybrid mixing weight
    bool alpha_learnable = false;
    bool use_elevation = true;   // false = adaptive-only ablation arm

    void validate() const;
};

/// Registers graph.e1/graph.e2 (n x e, uniform in [-0.5, 0.5]) and, when
/// learnable, graph.alpha_raw with sigmoid(alpha_raw) = alpha.
void register_params(ParamStore& store, const GraphConfig& cfg, int stations,
                     std::uint64_t seed);

/// A_adaptive = row-softmax(ReLU(E1 E2^T)).
ad::Var adaptive_adjacency(ad::Var e1, ad::Var e2);

/// A_hat = alpha*A_adaptive + (1-alpha)*A_elevation, fixed alpha in [0,1].
ad::Var hybrid_adjacency(ad::Var a_adaptive, ad::Var a_elevation, double alpha);

/// Learnable variant; alpha = sigmoid(alpha_raw) stays in (0,1).
ad::Var hybrid_adjacency(ad::Var a_adaptive, ad::Var a_elevation, ad::Var alpha_raw);

/// Checks shape, nonnegativity and row sums within tol.
bool is_row_stochastic(const Matrix& a, double tol = 1e-6);

/// Plain-text n x n dump: one row per line, space-separated, 6 decimals.
void write_adjacency(const Matrix& a, const std::string& path);

} // namespace hv::graphs
