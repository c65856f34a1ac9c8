#pragma once

#include <limits>
#include <string>
#include <vector>

#include "hv/data.hpp"
#include "hv/model.hpp"

namespace hv::train {

struct TrainConfig {
    int batch_size = 64;
    int max_epochs = 300;
    int patience = 20;
    double lr = 0.01;
    double lr_decay = 0.1;
    std::vector<int> lr_milestones = {50, 100};
    double curriculum_tau = 2000.0;
    double grad_clip = 5.0;
    std::uint64_t seed = 1;

    void validate() const;
};

/// Weighted metric accumulation so results do not depend on how the data
/// was batched.
struct MetricAccumulator {
    double abs_sum = 0.0;
    double sq_sum = 0.0;
    long count = 0;

    void add(double pred, double target) {
        const double d = pred - target;
        abs_sum += std::fabs(d);
        sq_sum += d * d;
        ++count;
    }
    double mae() const;
    double rmse() const;
};

double mae(const std::vector<double>& pred, const std::vector<double>& target);
double rmse(const std::vector<double>& pred, const std::vector<double>& target);

/// Inverse-sigmoid scheduled-sampling probability:
/// p(it) = tau / (tau + exp(it / tau)), nonincreasing, p(0) = tau/(tau+1).
double sampling_prob(long iteration, double tau);

/// Learning rate for a 1-based epoch: lr * decay^(milestones passed).
double lr_at_epoch(const TrainConfig& cfg, int epoch);

/// Adam with bias correction and optional global-norm gradient clipping.
/// Gradients align with the store's trainable entries by index.
struct Adam {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    long t = 0;

    void step(ParamStore& store, const std::vector<Matrix>& grads, double lr,
              double grad_clip);
};

struct EpochRecord {
    int epoch = 0;
    double train_mae = 0.0;
    double val_mae = 0.0;
    double lr = 0.0;
    double sampling_prob = 0.0;
};

struct TrainResult {
    std::vector<EpochRecord> history;
    int best_epoch = 0;
    double best_val_mae = std::numeric_limits<double>::infinity();
    long iterations = 0;
    std::vector<double> first_losses; // first 5 optimizer-step losses
};

/// Full optimization loop: seeded shuffling, scheduled sampling, milestone
/// lr decay, early stopping on validation MAE. The model is left holding
/// the best-validation parameters.
TrainResult train_model(HydroModel& model, const data::WindowedDataset& train_ds,
                        const data::WindowedDataset& val_ds, const TrainConfig& cfg);

void write_history(const std::vector<EpochRecord>& history, const std::string& path);

struct HorizonMetric {
    int step = 0; // 1-based horizon step
    double mae = 0.0;
    double rmse = 0.0;
};

struct EvalReport {
    std::vector<HorizonMetric> horizons; // steps 3, 6, 9, 12 (those <= t_out)
    double avg_mae = 0.0;  // over all horizon steps
    double avg_rmse = 0.0;

    std::string table() const; // fixed-format text table
};

/// Metrics over (S x t_out x n) forecast/target arrays (already in meters).
EvalReport evaluate_forecasts(const std::vector<double>& preds,
                              const std::vector<double>& targets, int samples, int t_out,
                              int stations);

/// Runs inference on the test windows, denormalizes, reports per-horizon
/// MAE/RMSE in meters.
EvalReport evaluate_model(HydroModel& model, const data::WindowedDataset& test_ds,
                          const data::NormStats& stats);

void write_report(const EvalReport& report, const std::string& path);

// --- checkpointing -----------------------------------------------------------

inline constexpr const char* kCheckpointMagic = "HYDROVISION-CKPT-1";

struct Checkpoint {
    ModelConfig model;
    data::NormStats norm;
    std::vector<std::string> station_ids;
    Matrix a_elevation; // empty when the elevation head is ablated
    std::vector<std::pair<std::string, Matrix>> params;
    std::string run_config_echo; // JSON text of the originating run config
};

Checkpoint make_checkpoint(const HydroModel& model, const data::NormStats& stats,
                           const std::vector<std::string>& station_ids,
                           const std::string& run_config_echo = "");

/// Atomic write (temp file + rename): magic line followed by a JSON body.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// Rebuilds a model from a checkpoint; A_elevation is restored frozen.
HydroModel model_from_checkpoint(const Checkpoint& ckpt);

} // namespace hv::train
