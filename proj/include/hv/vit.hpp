#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hv/params.hpp"
#include "hv/terrain.hpp"

namespace hv::vit {

struct VitConfig {
    int patch_size = terrain::kPatchSize;
    int embed_dim = 64;
    int num_layers = 2;
    int num_heads = 8;
    int ffn_dim = 0;                      // 0 -> 4 * embed_dim
    double similarity_temperature = 0.0;  // <= 0 -> sqrt(embed_dim)
    bool freeze = false;

    int ffn() const { return ffn_dim > 0 ? ffn_dim : 4 * embed_dim; }
    double temperature() const {
        return similarity_temperature > 0.0 ? similarity_temperature
                                            : std::sqrt(static_cast<double>(embed_dim));
    }
    void validate() const;
};

/// Sinusoidal positional encoding, (length x dim):
/// even columns sin(pos / 10000^(2i/d)), odd columns cos of the same angle.
Matrix positional_encoding(int length, int dim);

/// Flattens 16x16 patches row-major into (L x 256) and standardizes by the
/// grid-wide mean/std (a constant grid maps to zeros).
Matrix flatten_patches(const terrain::PatchGrid& grid);

/// Registers vit.* parameters (projection, per-layer norm/attention/FFN).
void register_params(ParamStore& store, const VitConfig& cfg, std::uint64_t seed);

/// Linear projection of flattened patches: tokens = P * W + b.
ad::Var embed_patches(ad::Var flat_patches, ad::Var weight, ad::Var bias);

/// Pre-norm transformer encoder over (L x d) tokens (positions already
/// added): per layer, x += MHSA(LN(x)); x += FFN(LN(x)).
ad::Var transformer_encode(ad::Var tokens, const BoundParams& p, const VitConfig& cfg);

/// Full token pipeline: embed + positions + encoder.
ad::Var encode_tokens(ad::Tape& tape, const Matrix& flat_patches, const BoundParams& p,
                      const VitConfig& cfg);

/// Station graph from encoded tokens: gather station token rows S, then
/// row-softmax(S S^T / temperature). Row-stochastic by construction.
ad::Var elevation_adjacency(ad::Var tokens, const std::vector<int>& station_patches,
                            double temperature);

} // namespace hv::vit
