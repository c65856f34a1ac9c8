#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hv/data.hpp"
#include "hv/gcrn.hpp"
#include "hv/graphs.hpp"
#include "hv/vit.hpp"

namespace hv {

struct ModelConfig {
    vit::VitConfig vit;
    graphs::GraphConfig graph;
    gcrn::GcrnConfig gcrn;
    gcrn::AttentionConfig attention;
    int t_in = 12;
    int t_out = 12;
    int stations = 0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// A minibatch in tape layout: row r = b*n + i (sample b, station i).
struct Batch {
    int batch = 0;
    int stations = 0;
    std::vector<Matrix> inputs;  // t_in matrices, (B*n x 1)
    std::vector<Matrix> targets; // t_out matrices, (B*n x 1)

    static Batch from_windows(const data::WindowedDataset& ds,
                              const std::vector<int>& sample_indices);
};

/// The forecaster: ViT elevation graph + adaptive graph fused into A_hat,
/// GCRN encoder/decoder with attention-augmented initialization.
class HydroModel {
public:
    /// flat_patches/station_patches may be empty when the elevation head is
    /// disabled (or when a frozen A_elevation is supplied later).
    HydroModel(ModelConfig cfg, Matrix flat_patches = {},
               std::vector<int> station_patches = {});

    ParamStore& params() { return params_; }
    const ParamStore& params() const { return params_; }
    const ModelConfig& config() const { return cfg_; }

    /// Fixes A_elevation to a precomputed matrix (checkpoint load). Also set
    /// automatically at construction when vit.freeze is on.
    void set_frozen_elevation(Matrix a_elevation);
    const std::optional<Matrix>& frozen_elevation() const { return frozen_elev_; }

    struct GraphVars {
        ad::Var a_hat;
        ad::Var a_adaptive;
        std::optional<ad::Var> a_elevation;
    };
    GraphVars build_graphs(ad::Tape& tape, const BoundParams& p) const;

    struct Forward {
        std::vector<ad::Var> preds; // t_out matrices (B*n x 1), normalized units
        ad::Var loss;               // MAE against batch targets
    };
    Forward forward(const BoundParams& p, ad::Var a_hat, const Batch& batch,
                    double sampling_prob = 0.0, Rng* rng = nullptr) const;

    // Gradient-free evaluation helpers (scratch tape per call).
    Matrix eval_adjacency() const;
    Matrix eval_adaptive() const;
    Matrix eval_elevation() const;

    /// Inference over a whole dataset; returns (S x t_out x n) flattened,
    /// normalized units.
    std::vector<double> predict(const data::WindowedDataset& ds, int batch_size = 64) const;

    /// Single-window rollout: window is (t_in x n) normalized; returns
    /// (t_out x n) normalized predictions.
    Matrix forecast(const Matrix& window) const;

    double loss_on(const Batch& batch, double sampling_prob = 0.0, Rng* rng = nullptr) const;

private:
    ModelConfig cfg_;
    Matrix flat_patches_;
    std::vector<int> station_patches_;
    std::optional<Matrix> frozen_elev_;
    ParamStore params_;
};

} // namespace hv
