#pragma once

#include <memory>
#include <vector>

#include "hv/tape.hpp"

namespace hv::attn {

/// Multi-head attention over a stacked sequence. Q/K/V are
/// (seq_len*groups x dim) with row t*groups + g holding position t of
/// group g; heads split dim evenly. groups is 1 for a plain token
/// sequence, batch*stations for per-node temporal attention.
struct AttentionSpec {
    int groups = 1;
    int seq_len = 1;
    int heads = 1;
    double sampling_factor = 5.0; // c in u = min(L, ceil(c*ln L))
    bool exact_fallback = false;

    int selected_count() const;
    int head_dim(int dim) const;
};

/// Query sparsity plan: per (group, head), M scores for every query,
/// the top-u selected query positions, and their softmax weight rows.
struct AttnPlan {
    int u = 0;
    int groups = 0;
    int heads = 0;
    int seq_len = 0;
    std::vector<double> m_scores; // [g][h][t]
    std::vector<int> selected;    // [g][h][k], ascending within (g,h)
    std::vector<double> weights;  // [g][h][k][t2] softmax rows

    double m_score(int g, int h, int t) const {
        return m_scores[(static_cast<size_t>(g) * heads + h) * seq_len + t];
    }
    const int* selected_of(int g, int h) const {
        return selected.data() + (static_cast<size_t>(g) * heads + h) * u;
    }
    const double* weights_of(int g, int h, int k) const {
        return weights.data() +
               ((static_cast<size_t>(g) * heads + h) * u + k) * seq_len;
    }
};

/// Builds the sparsity plan from raw Q/K values:
/// M(q,K) = max_j(q.k_j/sqrt(d)) - mean_j(q.k_j/sqrt(d)).
AttnPlan make_plan(const Matrix& q, const Matrix& k, const AttentionSpec& spec);

/// ProbSparse attention: selected queries receive softmax(QK^T/sqrt(d))V,
/// the rest receive the time-mean of V. With exact_fallback (or u = L)
/// this is dense softmax attention.
ad::Var attention(ad::Var q, ad::Var k, ad::Var v, const AttentionSpec& spec);

} // namespace hv::attn
