#include "hv/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hv/config.hpp"

namespace hv::train {

using nlohmann::json;

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (patience < 1 || patience >= max_epochs)
        throw ConfigError("train: patience must satisfy 1 <= patience < max_epochs");
    if (lr <= 0.0) throw ConfigError("train: lr must be positive");
    if (lr_decay <= 0.0) throw ConfigError("train: lr_decay must be positive");
    if (curriculum_tau <= 0.0) throw ConfigError("train: curriculum tau must be positive");
}

double MetricAccumulator::mae() const {
    if (count == 0) throw ModelError("train: MAE of empty input");
    return abs_sum / static_cast<double>(count);
}

double MetricAccumulator::rmse() const {
    if (count == 0) throw ModelError("train: RMSE of empty input");
    return std::sqrt(sq_sum / static_cast<double>(count));
}

double mae(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size()) throw ModelError("train: metric size mismatch");
    MetricAccumulator acc;
    for (size_t i = 0; i < pred.size(); ++i) acc.add(pred[i], target[i]);
    return acc.mae();
}

double rmse(const std::vector<double>& pred, const std::vector<double>& target) {
    if (pred.size() != target.size()) throw ModelError("train: metric size mismatch");
    MetricAccumulator acc;
    for (size_t i = 0; i < pred.size(); ++i) acc.add(pred[i], target[i]);
    return acc.rmse();
}

double sampling_prob(long iteration, double tau) {
    if (iteration < 0 || tau <= 0.0)
        throw ModelError("train: sampling_prob needs iteration >= 0 and tau > 0");
    const double e = std::exp(static_cast<double>(iteration) / tau);
    if (!std::isfinite(e)) return 0.0; // schedule tail
    return tau / (tau + e);
}

double lr_at_epoch(const TrainConfig& cfg, int epoch) {
    double lr = cfg.lr;
    for (int m : cfg.lr_milestones)
        if (epoch > m) lr *= cfg.lr_decay;
    return lr;
}

void Adam::step(ParamStore& store, const std::vector<Matrix>& grads, double lr,
                double grad_clip) {
    if (grads.size() != store.entries.size())
        throw ModelError("train: gradient list does not match parameter store");
    double norm_sq = 0.0;
    for (size_t i = 0; i < grads.size(); ++i) {
        if (!store.entries[i].trainable || grads[i].empty()) continue;
        for (double g : grads[i].a) norm_sq += g * g;
    }
    const double norm = std::sqrt(norm_sq);
    const double clip_factor = (grad_clip > 0.0 && norm > grad_clip) ? grad_clip / norm : 1.0;

    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (size_t i = 0; i < grads.size(); ++i) {
        auto& e = store.entries[i];
        if (!e.trainable || grads[i].empty()) continue;
        if (!grads[i].same_shape(e.value))
            throw ModelError("train: gradient shape mismatch for '" + e.name + "'");
        for (size_t j = 0; j < e.value.size(); ++j) {
            const double g = grads[i].a[j] * clip_factor;
            e.m.a[j] = beta1 * e.m.a[j] + (1.0 - beta1) * g;
            e.v.a[j] = beta2 * e.v.a[j] + (1.0 - beta2) * g * g;
            const double mhat = e.m.a[j] / bc1;
            const double vhat = e.v.a[j] / bc2;
            e.value.a[j] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

namespace {

std::vector<Matrix> harvest_grads(const ParamStore& store, const BoundParams& bound) {
    std::vector<Matrix> grads(store.entries.size());
    for (size_t i = 0; i < store.entries.size(); ++i)
        if (store.entries[i].trainable) grads[i] = bound.vars[i].grad();
    return grads;
}

double validation_mae(HydroModel& model, const data::WindowedDataset& ds, int batch_size) {
    const Matrix a_hat = model.eval_adjacency();
    MetricAccumulator acc;
    for (int s0 = 0; s0 < ds.samples; s0 += batch_size) {
        std::vector<int> idx;
        for (int s = s0; s < std::min(ds.samples, s0 + batch_size); ++s) idx.push_back(s);
        Batch batch = Batch::from_windows(ds, idx);
        ad::Tape tape;
        BoundParams p = bind_params(tape, model.params());
        auto fwd = model.forward(p, tape.input(a_hat), batch);
        for (size_t t = 0; t < fwd.preds.size(); ++t) {
            const Matrix& pm = fwd.preds[t].value();
            const Matrix& tm = batch.targets[t];
            for (size_t j = 0; j < pm.size(); ++j) acc.add(pm.a[j], tm.a[j]);
        }
    }
    return acc.mae();
}

std::vector<Matrix> snapshot_values(const ParamStore& store) {
    std::vector<Matrix> vals;
    vals.reserve(store.entries.size());
    for (const auto& e : store.entries) vals.push_back(e.value);
    return vals;
}

void restore_values(ParamStore& store, const std::vector<Matrix>& vals) {
    for (size_t i = 0; i < vals.size(); ++i) store.entries[i].value = vals[i];
}

} // namespace

TrainResult train_model(HydroModel& model, const data::WindowedDataset& train_ds,
                        const data::WindowedDataset& val_ds, const TrainConfig& cfg) {
    cfg.validate();
    if (train_ds.samples < 1 || val_ds.samples < 1)
        throw DataError("train: train/validation windows are empty");

    Rng shuffle_rng(derive_seed(cfg.seed, "train.shuffle"));
    Rng sampling_rng(derive_seed(cfg.seed, "train.sampling"));
    Adam adam;

    TrainResult res;
    std::vector<Matrix> best_params = snapshot_values(model.params());
    int bad_epochs = 0;
    std::vector<int> order(train_ds.samples);
    for (int i = 0; i < train_ds.samples; ++i) order[i] = i;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        const double p_epoch = sampling_prob(res.iterations, cfg.curriculum_tau);
        // Fisher-Yates with the run RNG; std::shuffle is not algorithm-pinned.
        for (int i = train_ds.samples - 1; i > 0; --i)
            std::swap(order[i], order[static_cast<int>(shuffle_rng.uniform_int(i + 1))]);

        MetricAccumulator train_acc;
        for (int s0 = 0; s0 < train_ds.samples; s0 += cfg.batch_size) {
            std::vector<int> idx(order.begin() + s0,
                                 order.begin() +
                                     std::min<long>(train_ds.samples, s0 + cfg.batch_size));
            Batch batch = Batch::from_windows(train_ds, idx);
            const double p_now = sampling_prob(res.iterations, cfg.curriculum_tau);

            ad::Tape tape;
            BoundParams bound = bind_params(tape, model.params());
            auto graphs_v = model.build_graphs(tape, bound);
            auto fwd = model.forward(bound, graphs_v.a_hat, batch, p_now, &sampling_rng);
            const double loss = fwd.loss.value().a[0];
            if (!std::isfinite(loss))
                throw ModelError("train: training loss diverged (non-finite) at epoch " +
                                 std::to_string(epoch));
            if (res.first_losses.size() < 5) res.first_losses.push_back(loss);
            const long elems = static_cast<long>(batch.batch) * batch.stations *
                               static_cast<long>(fwd.preds.size());
            train_acc.abs_sum += loss * static_cast<double>(elems);
            train_acc.count += elems;

            tape.backward(fwd.loss);
            auto grads = harvest_grads(model.params(), bound);
            adam.step(model.params(), grads, lr, cfg.grad_clip);
            ++res.iterations;
        }

        const double val = validation_mae(model, val_ds, cfg.batch_size);
        res.history.push_back(EpochRecord{epoch, train_acc.mae(), val, lr, p_epoch});

        if (val < res.best_val_mae) {
            res.best_val_mae = val;
            res.best_epoch = epoch;
            best_params = snapshot_values(model.params());
            bad_epochs = 0;
        } else {
            ++bad_epochs;
            if (bad_epochs >= cfg.patience) break;
        }
    }
    restore_values(model.params(), best_params);
    return res;
}

void write_history(const std::vector<EpochRecord>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("train: cannot write history file: " + path);
    for (const auto& r : history) {
        json j{{"epoch", r.epoch},
               {"train_mae", r.train_mae},
               {"val_mae", r.val_mae},
               {"lr", r.lr},
               {"sampling_prob", r.sampling_prob}};
        out << j.dump() << '\n';
    }
}

EvalReport evaluate_forecasts(const std::vector<double>& preds,
                              const std::vector<double>& targets, int samples, int t_out,
                              int stations) {
    const size_t expected = static_cast<size_t>(samples) * t_out * stations;
    if (preds.size() != expected || targets.size() != expected)
        throw ModelError("train: forecast/target arrays have the wrong size");
    if (samples < 1) throw ModelError("train: no forecast samples to evaluate");

    std::vector<MetricAccumulator> per_step(t_out);
    MetricAccumulator all;
    for (int s = 0; s < samples; ++s)
        for (int t = 0; t < t_out; ++t)
            for (int i = 0; i < stations; ++i) {
                const size_t k = (static_cast<size_t>(s) * t_out + t) * stations + i;
                per_step[t].add(preds[k], targets[k]);
                all.add(preds[k], targets[k]);
            }
    EvalReport rep;
    for (int step : {3, 6, 9, 12})
        if (step <= t_out)
            rep.horizons.push_back(
                HorizonMetric{step, per_step[step - 1].mae(), per_step[step - 1].rmse()});
    rep.avg_mae = all.mae();
    rep.avg_rmse = all.rmse();
    return rep;
}

EvalReport evaluate_model(HydroModel& model, const data::WindowedDataset& test_ds,
                          const data::NormStats& stats) {
    if (test_ds.stations != static_cast<int>(stats.mean.size()))
        throw ModelError("train: normalizer station count does not match dataset");
    std::vector<double> preds = model.predict(test_ds);
    std::vector<double> targets(preds.size());
    std::vector<double> denorm(preds.size());
    const int n = test_ds.stations;
    for (int s = 0; s < test_ds.samples; ++s)
        for (int t = 0; t < test_ds.t_out; ++t)
            for (int i = 0; i < n; ++i) {
                const size_t k = (static_cast<size_t>(s) * test_ds.t_out + t) * n + i;
                denorm[k] = preds[k] * stats.std_dev[i] + stats.mean[i];
                targets[k] = test_ds.target(s, t, i) * stats.std_dev[i] + stats.mean[i];
            }
    return evaluate_forecasts(denorm, targets, test_ds.samples, test_ds.t_out, n);
}

std::string EvalReport::table() const {
    char buf[128];
    std::string out = "horizon      MAE       RMSE\n";
    for (const auto& h : horizons) {
        std::snprintf(buf, sizeof buf, "%4dd   %8.4f   %8.4f\n", h.step, h.mae, h.rmse);
        out += buf;
    }
    std::snprintf(buf, sizeof buf, " avg    %8.4f   %8.4f\n", avg_mae, avg_rmse);
    out += buf;
    return out;
}

void write_report(const EvalReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("train: cannot write report file: " + path);
    json horizons = json::array();
    for (const auto& h : report.horizons)
        horizons.push_back(json{{"step", h.step}, {"mae", h.mae}, {"rmse", h.rmse}});
    json j{{"horizons", horizons}, {"avg_mae", report.avg_mae}, {"avg_rmse", report.avg_rmse}};
    out << j.dump(2) << '\n';
}

// --- checkpointing -----------------------------------------------------------

namespace {

json matrix_to_json(const Matrix& m) {
    return json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.a}};
}

Matrix matrix_from_json(const json& j) {
    Matrix m(j.at("rows").get<int>(), j.at("cols").get<int>());
    const auto& data = j.at("data");
    if (data.size() != m.size())
        throw DataError("checkpoint: tensor payload size mismatch");
    for (size_t i = 0; i < m.size(); ++i) m.a[i] = data[i].get<double>();
    return m;
}

} // namespace

Checkpoint make_checkpoint(const HydroModel& model, const data::NormStats& stats,
                           const std::vector<std::string>& station_ids,
                           const std::string& run_config_echo) {
    Checkpoint c;
    c.model = model.config();
    c.norm = stats;
    c.station_ids = station_ids;
    c.run_config_echo = run_config_echo;
    if (c.model.graph.use_elevation)
        c.a_elevation = model.eval_elevation();
    for (const auto& e : model.params().entries) c.params.emplace_back(e.name, e.value);
    return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    json params = json::object();
    for (const auto& [name, value] : ckpt.params) params[name] = matrix_to_json(value);
    json j{{"model", model_config_to_json(ckpt.model)},
           {"norm", {{"mean", ckpt.norm.mean}, {"std", ckpt.norm.std_dev}}},
           {"station_ids", ckpt.station_ids},
           {"params", params}};
    j["a_elevation"] = ckpt.a_elevation.empty() ? json(nullptr) : matrix_to_json(ckpt.a_elevation);
    j["run_config"] = ckpt.run_config_echo;

    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw DataError("checkpoint: cannot write " + tmp);
        out << kCheckpointMagic << '\n' << j.dump() << '\n';
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("checkpoint: cannot open " + path);
    std::string magic;
    std::getline(in, magic);
    if (magic != kCheckpointMagic)
        throw DataError("checkpoint: bad magic in " + path + " (expected " +
                        kCheckpointMagic + ")");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("checkpoint: malformed body in " + path + ": " + e.what());
    }
    Checkpoint c;
    c.model = model_config_from_json(j.at("model"));
    c.norm.mean = j.at("norm").at("mean").get<std::vector<double>>();
    c.norm.std_dev = j.at("norm").at("std").get<std::vector<double>>();
    c.station_ids = j.at("station_ids").get<std::vector<std::string>>();
    if (!j.at("a_elevation").is_null()) c.a_elevation = matrix_from_json(j.at("a_elevation"));
    c.run_config_echo = j.value("run_config", std::string{});
    for (const auto& [name, val] : j.at("params").items())
        c.params.emplace_back(name, matrix_from_json(val));
    return c;
}

HydroModel model_from_checkpoint(const Checkpoint& ckpt) {
    HydroModel model(ckpt.model);
    if (ckpt.model.graph.use_elevation) {
        if (ckpt.a_elevation.empty())
            throw DataError("checkpoint: elevation head enabled but A_elevation missing");
        model.set_frozen_elevation(ckpt.a_elevation);
    }
    ParamStore& store = model.params();
    for (const auto& [name, value] : ckpt.params) {
        const int i = store.find(name);
        if (i < 0) throw DataError("checkpoint: unknown parameter '" + name + "'");
        if (!store.entries[i].value.same_shape(value))
            throw DataError("checkpoint: shape mismatch for parameter '" + name + "'");
        store.entries[i].value = value;
    }
    return model;
}

} // namespace hv::train
