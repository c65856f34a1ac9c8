#include "hv/model.hpp"

#include <cmath>

namespace hv {

using ad::Var;

void ModelConfig::validate() const {
    vit.validate();
    graph.validate();
    gcrn.validate();
    if (t_in < 1 || t_out < 1) throw ConfigError("model: t_in and t_out must be >= 1");
    if (stations < 1) throw ConfigError("model: station count must be >= 1");
    if (attention.num_heads < 1 || gcrn.hidden_dim % attention.num_heads != 0)
        throw ConfigError("model: hidden_dim must be divisible by attention heads");
    if (attention.sampling_factor <= 0.0)
        throw ConfigError("model: attention sampling_factor must be positive");
}

Batch Batch::from_windows(const data::WindowedDataset& ds,
                          const std::vector<int>& sample_indices) {
    Batch b;
    b.batch = static_cast<int>(sample_indices.size());
    b.stations = ds.stations;
    const int R = b.batch * ds.stations;
    b.inputs.assign(ds.t_in, Matrix(R, 1));
    b.targets.assign(ds.t_out, Matrix(R, 1));
    for (int k = 0; k < b.batch; ++k) {
        const int s = sample_indices[k];
        for (int t = 0; t < ds.t_in; ++t)
            for (int i = 0; i < ds.stations; ++i)
                b.inputs[t].at(k * ds.stations + i, 0) = ds.input(s, t, i);
        for (int t = 0; t < ds.t_out; ++t)
            for (int i = 0; i < ds.stations; ++i)
                b.targets[t].at(k * ds.stations + i, 0) = ds.target(s, t, i);
    }
    return b;
}

HydroModel::HydroModel(ModelConfig cfg, Matrix flat_patches, std::vector<int> station_patches)
    : cfg_(cfg), flat_patches_(std::move(flat_patches)),
      station_patches_(std::move(station_patches)) {
    cfg_.validate();
    if (cfg_.graph.use_elevation && !flat_patches_.empty()) {
        if (static_cast<int>(station_patches_.size()) != cfg_.stations)
            throw ModelError("model: need one patch index per station");
        for (int idx : station_patches_)
            if (idx < 0 || idx >= flat_patches_.rows)
                throw ModelError("model: station patch index out of range");
    }
    const std::uint64_t seed = cfg_.seed;
    if (cfg_.graph.use_elevation) vit::register_params(params_, cfg_.vit, seed);
    graphs::register_params(params_, cfg_.graph, cfg_.stations, seed);
    gcrn::register_stack(params_, "gcrn.enc", cfg_.gcrn, 1, seed);
    gcrn::register_stack(params_, "gcrn.dec", cfg_.gcrn, 1, seed);
    const int h = cfg_.gcrn.hidden_dim;
    for (const char* name : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
        Rng rng(derive_seed(seed, name));
        params_.add(name, Matrix::xavier(h, h, rng));
    }
    {
        Rng rng(derive_seed(seed, "head.init.weight"));
        params_.add("head.init.weight", Matrix::xavier(2 * h, h, rng));
        params_.add("head.init.bias", Matrix::zeros(1, h));
    }
    {
        Rng rng(derive_seed(seed, "head.out.weight"));
        params_.add("head.out.weight", Matrix::xavier(h, 1, rng));
        params_.add("head.out.bias", Matrix::zeros(1, 1));
    }
    if (cfg_.graph.use_elevation && cfg_.vit.freeze && !flat_patches_.empty())
        frozen_elev_ = eval_elevation();
}

void HydroModel::set_frozen_elevation(Matrix a_elevation) {
    if (a_elevation.rows != cfg_.stations || a_elevation.cols != cfg_.stations)
        throw ModelError("model: frozen A_elevation must be n x n");
    frozen_elev_ = std::move(a_elevation);
}

HydroModel::GraphVars HydroModel::build_graphs(ad::Tape& tape, const BoundParams& p) const {
    Var a_adapt = graphs::adaptive_adjacency(p["graph.e1"], p["graph.e2"]);
    if (!cfg_.graph.use_elevation)
        return GraphVars{a_adapt, a_adapt, std::nullopt};
    Var a_elev;
    if (frozen_elev_) {
        a_elev = tape.input(*frozen_elev_);
    } else {
        if (flat_patches_.empty())
            throw ModelError("model: elevation head enabled but no patches or frozen "
                             "A_elevation available");
        Var tokens = vit::encode_tokens(tape, flat_patches_, p, cfg_.vit);
        a_elev = vit::elevation_adjacency(tokens, station_patches_, cfg_.vit.temperature());
    }
    Var a_hat = cfg_.graph.alpha_learnable
                    ? graphs::hybrid_adjacency(a_adapt, a_elev, p["graph.alpha_raw"])
                    : graphs::hybrid_adjacency(a_adapt, a_elev, cfg_.graph.alpha);
    return GraphVars{a_hat, a_adapt, a_elev};
}

HydroModel::Forward HydroModel::forward(const BoundParams& p, Var a_hat, const Batch& batch,
                                        double sampling_prob, Rng* rng) const {
    if (batch.stations != cfg_.stations)
        throw ModelError("model: batch station count mismatch");
    if (static_cast<int>(batch.inputs.size()) != cfg_.t_in)
        throw ModelError("model: batch input length mismatch");
    ad::Tape& tape = *a_hat.tape;
    std::vector<Var> xs;
    xs.reserve(batch.inputs.size());
    for (const Matrix& m : batch.inputs) xs.push_back(tape.input(m));

    auto enc = gcrn::encode(tape, xs, a_hat, p, "gcrn.enc", cfg_.gcrn, cfg_.stations);
    std::vector<Var> init_states(cfg_.gcrn.num_layers);
    for (int l = 0; l < cfg_.gcrn.num_layers; ++l)
        init_states[l] =
            gcrn::augmented_state(enc.hidden[l], enc.final_state[l], p, cfg_.attention)
                .init_state;

    std::vector<Var> truth;
    gcrn::DecodeOptions opts;
    opts.horizon = cfg_.t_out;
    opts.sampling_prob = sampling_prob;
    opts.rng = rng;
    if (sampling_prob > 0.0) {
        truth.reserve(batch.targets.size());
        for (const Matrix& m : batch.targets) truth.push_back(tape.input(m));
        opts.ground_truth = &truth;
    }
    Forward fwd;
    fwd.preds = gcrn::decode(init_states, xs.back(), a_hat, p, cfg_.gcrn, cfg_.stations, opts);

    std::vector<Var> target_vars;
    target_vars.reserve(batch.targets.size());
    for (const Matrix& m : batch.targets) target_vars.push_back(tape.input(m));
    fwd.loss = ad::abs_mean(ad::sub(ad::vconcat(fwd.preds), ad::vconcat(target_vars)));
    return fwd;
}

Matrix HydroModel::eval_adjacency() const {
    ad::Tape tape;
    BoundParams p = bind_params(tape, params_);
    return build_graphs(tape, p).a_hat.value();
}

Matrix HydroModel::eval_adaptive() const {
    ad::Tape tape;
    BoundParams p = bind_params(tape, params_);
    return build_graphs(tape, p).a_adaptive.value();
}

Matrix HydroModel::eval_elevation() const {
    if (frozen_elev_) return *frozen_elev_;
    if (!cfg_.graph.use_elevation)
        throw ModelError("model: elevation head is disabled");
    if (flat_patches_.empty())
        throw ModelError("model: no patches available to compute A_elevation");
    ad::Tape tape;
    BoundParams p = bind_params(tape, params_);
    Var tokens = vit::encode_tokens(tape, flat_patches_, p, cfg_.vit);
    return vit::elevation_adjacency(tokens, station_patches_, cfg_.vit.temperature()).value();
}

std::vector<double> HydroModel::predict(const data::WindowedDataset& ds, int batch_size) const {
    if (ds.stations != cfg_.stations)
        throw ModelError("model: dataset station count mismatch");
    std::vector<double> out(static_cast<size_t>(ds.samples) * cfg_.t_out * ds.stations);
    // A_hat depends only on parameters, not on the batch: compute it once
    // and feed it to every batch as a constant.
    const Matrix a_hat = eval_adjacency();
    for (int s0 = 0; s0 < ds.samples; s0 += batch_size) {
        std::vector<int> idx;
        for (int s = s0; s < std::min(ds.samples, s0 + batch_size); ++s) idx.push_back(s);
        Batch batch = Batch::from_windows(ds, idx);
        ad::Tape tape;
        BoundParams p = bind_params(tape, params_);
        Forward fwd = forward(p, tape.input(a_hat), batch, 0.0, nullptr);
        for (int t = 0; t < cfg_.t_out; ++t) {
            const Matrix& pm = fwd.preds[t].value();
            for (int k = 0; k < batch.batch; ++k)
                for (int i = 0; i < ds.stations; ++i)
                    out[((static_cast<size_t>(s0 + k)) * cfg_.t_out + t) * ds.stations + i] =
                        pm.at(k * ds.stations + i, 0);
        }
    }
    return out;
}

Matrix HydroModel::forecast(const Matrix& window) const {
    if (window.rows != cfg_.t_in || window.cols != cfg_.stations)
        throw ModelError("model: forecast window must be t_in x stations");
    Batch batch;
    batch.batch = 1;
    batch.stations = cfg_.stations;
    for (int t = 0; t < cfg_.t_in; ++t) {
        Matrix col(cfg_.stations, 1);
        for (int i = 0; i < cfg_.stations; ++i) col.at(i, 0) = window.at(t, i);
        batch.inputs.push_back(std::move(col));
    }
    batch.targets.assign(cfg_.t_out, Matrix::zeros(cfg_.stations, 1));
    ad::Tape tape;
    BoundParams p = bind_params(tape, params_);
    auto graphs_v = build_graphs(tape, p);
    Forward fwd = forward(p, graphs_v.a_hat, batch);
    Matrix out(cfg_.t_out, cfg_.stations);
    for (int t = 0; t < cfg_.t_out; ++t)
        for (int i = 0; i < cfg_.stations; ++i) out.at(t, i) = fwd.preds[t].value().at(i, 0);
    return out;
}

double HydroModel::loss_on(const Batch& batch, double sampling_prob, Rng* rng) const {
    ad::Tape tape;
    BoundParams p = bind_params(tape, params_);
    auto graphs_v = build_graphs(tape, p);
    return forward(p, graphs_v.a_hat, batch, sampling_prob, rng).loss.value().a[0];
}

} // namespace hv
