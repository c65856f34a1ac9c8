#include "hv/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "hv/config.hpp"
#include "hv/graphs.hpp"
#include "hv/synth.hpp"
#include "hv/terrain.hpp"

namespace hv::cli {

namespace fs = std::filesystem;

namespace {

void require_path(const std::string& path, const char* what) {
    if (path.empty()) throw ConfigError(std::string("config: no ") + what + " configured");
    if (!fs::exists(path))
        throw ConfigError(std::string("config: ") + what + " does not exist: " + path);
}

struct Pipeline {
    data::StationSeries series; // imputed
    data::SplitSeries split;    // normalized segments
    data::NormStats stats;
    data::WindowedDataset train_w, val_w, test_w;
};

Pipeline prepare_data(const RunConfig& cfg) {
    Pipeline p;
    p.series = data::load_series(cfg.data.series_csv, cfg.data.stations_csv);
    p.series = data::impute_missing(p.series, cfg.data.impute_weights[0],
                                    cfg.data.impute_weights[1]);
    p.split = data::chronological_split(p.series, cfg.data.splits);
    p.stats = data::fit_normalizer(p.split.train, cfg.norm_mode());
    p.split.train.values = data::apply_normalizer(p.split.train.values, p.stats);
    p.split.val.values = data::apply_normalizer(p.split.val.values, p.stats);
    p.split.test.values = data::apply_normalizer(p.split.test.values, p.stats);
    p.train_w = data::make_windows(p.split.train, cfg.model.t_in, cfg.model.t_out);
    p.val_w = data::make_windows(p.split.val, cfg.model.t_in, cfg.model.t_out);
    p.test_w = data::make_windows(p.split.test, cfg.model.t_in, cfg.model.t_out);
    return p;
}

struct TerrainInputs {
    Matrix flat_patches;
    std::vector<int> station_patches;
};

TerrainInputs prepare_terrain(const RunConfig& cfg,
                              const data::StationSeries& series) {
    TerrainInputs t;
    require_path(cfg.terrain.raster, "terrain raster");
    terrain::ElevationRaster raster = terrain::load_raster(cfg.terrain.raster);
    raster = terrain::downsample(raster, cfg.terrain.downsample_factor);
    terrain::PatchGrid grid = terrain::patchify(raster);
    t.flat_patches = vit::flatten_patches(grid);
    t.station_patches.reserve(series.station_coords.size());
    for (const auto& coord : series.station_coords)
        t.station_patches.push_back(terrain::station_patch_index(raster, grid, coord));
    return t;
}

int cmd_synth(int n, int steps, std::uint64_t seed, const std::string& out) {
    synth::SynthOptions opts;
    opts.stations = n;
    opts.steps = steps;
    opts.seed = seed;
    synth::SynthScenario sc = synth::generate(opts);
    synth::write_scenario(sc, out);
    std::cout << "synth: wrote scenario (n=" << n << ", T=" << steps << ", seed=" << seed
              << ") to " << out << "\n";
    return 0;
}

int cmd_train(const std::string& config_path, const std::optional<std::string>& out,
              const std::optional<std::uint64_t>& seed, const std::optional<int>& max_epochs,
              const std::optional<double>& alpha, const std::optional<bool>& use_elevation) {
    require_path(config_path, "config file");
    std::vector<std::string> defaulted;
    RunConfig cfg = load_run_config(config_path, &defaulted);
    for (const auto& key : defaulted)
        std::cerr << "config: " << key << " not set, using default\n";
    if (out) cfg.output_dir = *out;
    if (seed) {
        cfg.train.seed = *seed;
        cfg.model.seed = *seed;
    }
    if (max_epochs) cfg.train.max_epochs = *max_epochs;
    if (alpha) cfg.model.graph.alpha = *alpha;
    if (use_elevation) cfg.model.graph.use_elevation = *use_elevation;

    require_path(cfg.data.series_csv, "series CSV");
    require_path(cfg.data.stations_csv, "station metadata CSV");

    Pipeline p = prepare_data(cfg);
    cfg.model.stations = p.series.stations();

    TerrainInputs terr;
    if (cfg.model.graph.use_elevation) terr = prepare_terrain(cfg, p.series);

    HydroModel model(cfg.model, terr.flat_patches, terr.station_patches);
    std::cout << "train: " << p.train_w.samples << " train / " << p.val_w.samples
              << " val / " << p.test_w.samples << " test windows, n="
              << cfg.model.stations << "\n";
    train::TrainResult result = train::train_model(model, p.train_w, p.val_w, cfg.train);

    fs::create_directories(cfg.output_dir);
    const fs::path dir(cfg.output_dir);
    train::Checkpoint ckpt = train::make_checkpoint(model, p.stats, p.series.station_ids,
                                                    run_config_to_json(cfg).dump());
    train::save_checkpoint(ckpt, (dir / "checkpoint.ckpt").string());
    train::write_history(result.history, (dir / "history.jsonl").string());
    graphs::write_adjacency(model.eval_adaptive(), (dir / "a_adaptive.txt").string());
    graphs::write_adjacency(model.eval_adjacency(), (dir / "a_hybrid.txt").string());
    if (cfg.model.graph.use_elevation)
        graphs::write_adjacency(model.eval_elevation(), (dir / "a_elevation.txt").string());

    std::cout << "train: finished after " << result.history.size() << " epochs; best val MAE "
              << result.best_val_mae << " (epoch " << result.best_epoch << ")\n";
    std::cout << "train: checkpoint " << (dir / "checkpoint.ckpt").string() << "\n";
    return 0;
}

struct EvalData {
    data::StationSeries series; // imputed, raw units
    train::Checkpoint ckpt;
    HydroModel model;
};

EvalData load_eval_inputs(const std::string& ckpt_path, const std::string& data_dir) {
    require_path(ckpt_path, "checkpoint");
    require_path(data_dir, "data directory");
    train::Checkpoint ckpt = train::load_checkpoint(ckpt_path);
    const fs::path dir(data_dir);
    data::StationSeries series = data::load_series((dir / "series.csv").string(),
                                                   (dir / "stations.csv").string());
    series = data::impute_missing(series);
    if (series.station_ids != ckpt.station_ids)
        throw DataError("data: station ids do not match the checkpoint");
    HydroModel model = train::model_from_checkpoint(ckpt);
    return EvalData{std::move(series), std::move(ckpt), std::move(model)};
}

void write_station_svg(const std::string& path, const std::vector<double>& actual,
                       const std::vector<double>& predicted, const std::string& title) {
    const int w = 900, h = 300, pad = 30;
    double lo = actual[0], hi = actual[0];
    for (double v : actual) { lo = std::min(lo, v); hi = std::max(hi, v); }
    for (double v : predicted) { lo = std::min(lo, v); hi = std::max(hi, v); }
    if (hi - lo < 1e-9) hi = lo + 1.0;
    auto xy = [&](size_t i, double v) {
        const double x = pad + (w - 2.0 * pad) * static_cast<double>(i) /
                             std::max<size_t>(1, actual.size() - 1);
        const double y = h - pad - (h - 2.0 * pad) * (v - lo) / (hi - lo);
        return std::to_string(x) + "," + std::to_string(y);
    };
    std::ofstream out(path);
    if (!out) throw DataError("cli: cannot write plot file: " + path);
    out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
        << "'>\n<text x='10' y='18' font-size='14'>" << title << "</text>\n";
    for (int pass = 0; pass < 2; ++pass) {
        const auto& v = pass == 0 ? actual : predicted;
        out << "<polyline fill='none' stroke='" << (pass == 0 ? "#1f77b4" : "#d62728")
            << "' stroke-width='1' points='";
        for (size_t i = 0; i < v.size(); ++i) out << xy(i, v[i]) << ' ';
        out << "'/>\n";
    }
    out << "</svg>\n";
}

int cmd_evaluate(const std::string& ckpt_path, const std::string& data_dir,
                 const std::string& out_dir, bool plots) {
    EvalData ev = load_eval_inputs(ckpt_path, data_dir);

    std::array<double, 3> splits{0.7, 0.1, 0.2};
    if (!ev.ckpt.run_config_echo.empty()) {
        RunConfig echoed = run_config_from_json(nlohmann::json::parse(ev.ckpt.run_config_echo));
        splits = echoed.data.splits;
    }
    data::SplitSeries split = data::chronological_split(ev.series, splits);
    Matrix test_norm = data::apply_normalizer(split.test.values, ev.ckpt.norm);
    data::WindowedDataset test_w =
        data::make_windows(test_norm, ev.ckpt.model.t_in, ev.ckpt.model.t_out);

    train::EvalReport report = train::evaluate_model(ev.model, test_w, ev.ckpt.norm);
    std::cout << report.table();

    fs::create_directories(out_dir);
    train::write_report(report, (fs::path(out_dir) / "report.json").string());

    if (plots) {
        // One-step-ahead forecast against the observed test series.
        std::vector<double> preds = ev.model.predict(test_w);
        const int n = test_w.stations;
        for (int i = 0; i < n; ++i) {
            std::vector<double> actual, predicted;
            for (int s = 0; s < test_w.samples; ++s) {
                actual.push_back(test_w.target(s, 0, i) * ev.ckpt.norm.std_dev[i] +
                                 ev.ckpt.norm.mean[i]);
                predicted.push_back(
                    preds[(static_cast<size_t>(s) * test_w.t_out) * n + i] *
                        ev.ckpt.norm.std_dev[i] +
                    ev.ckpt.norm.mean[i]);
            }
            write_station_svg((fs::path(out_dir) /
                               ("forecast_" + ev.ckpt.station_ids[i] + ".svg")).string(),
                              actual, predicted, ev.ckpt.station_ids[i]);
        }
    }
    return 0;
}

int cmd_predict(const std::string& ckpt_path, const std::string& data_dir, int horizon,
                const std::string& out_path) {
    EvalData ev = load_eval_inputs(ckpt_path, data_dir);
    const ModelConfig& mc = ev.ckpt.model;
    if (horizon < 1 || horizon > mc.t_out)
        throw ConfigError("config: horizon must lie in [1, " + std::to_string(mc.t_out) +
                          "] for this checkpoint");
    if (ev.series.steps() < mc.t_in)
        throw DataError("data: series shorter than the model input window");

    Matrix norm = data::apply_normalizer(ev.series.values, ev.ckpt.norm);
    Matrix window(mc.t_in, ev.series.stations());
    for (int t = 0; t < mc.t_in; ++t)
        for (int i = 0; i < ev.series.stations(); ++i)
            window.at(t, i) = norm.at(norm.rows - mc.t_in + t, i);

    Matrix fc = ev.model.forecast(window); // (t_out x n), normalized
    std::ofstream out(out_path);
    if (!out) throw DataError("cli: cannot write forecast file: " + out_path);
    out << "date";
    for (const auto& id : ev.series.station_ids) out << ',' << id;
    out << '\n';
    char buf[32];
    const long last = ev.series.timestamps.back().serial();
    for (int k = 0; k < horizon; ++k) {
        out << data::Date::from_serial(last + 1 + k).to_string();
        for (int i = 0; i < ev.series.stations(); ++i) {
            const double v = fc.at(k, i) * ev.ckpt.norm.std_dev[i] + ev.ckpt.norm.mean[i];
            std::snprintf(buf, sizeof buf, "%.6f", v);
            out << ',' << buf;
        }
        out << '\n';
    }
    std::cout << "predict: wrote " << horizon << " forecast rows to " << out_path << "\n";
    return 0;
}

} // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"hydrovision: multi-station daily water level forecasting"};
    app.require_subcommand(1);

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic scenario");
    int s_n = 6, s_steps = 2000;
    std::uint64_t s_seed = 7;
    std::string s_out;
    synth_cmd->add_option("--n", s_n, "Number of stations");
    synth_cmd->add_option("--steps", s_steps, "Number of daily steps");
    synth_cmd->add_option("--seed", s_seed, "Scenario seed");
    synth_cmd->add_option("--out", s_out, "Output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "Train a model from a config file");
    std::string t_config;
    std::optional<std::string> t_out;
    std::optional<std::uint64_t> t_seed;
    std::optional<int> t_epochs;
    std::optional<double> t_alpha;
    std::optional<bool> t_use_elev;
    train_cmd->add_option("--config", t_config, "JSON run config")->required();
    train_cmd->add_option("--out", t_out, "Override output directory");
    train_cmd->add_option("--seed", t_seed, "Override run seed");
    train_cmd->add_option("--max-epochs", t_epochs, "Override max epochs");
    train_cmd->add_option("--alpha", t_alpha, "Override hybrid graph alpha");
    train_cmd->add_option("--use-elevation", t_use_elev,
                          "Override the elevation head on/off");

    auto* eval_cmd = app.add_subcommand("evaluate", "Evaluate a checkpoint on the test split");
    std::string e_ckpt, e_data, e_out = "eval_out";
    bool e_plots = false;
    eval_cmd->add_option("--checkpoint", e_ckpt, "Checkpoint file")->required();
    eval_cmd->add_option("--data", e_data, "Directory with series.csv and stations.csv")
        ->required();
    eval_cmd->add_option("--out", e_out, "Report output directory");
    eval_cmd->add_flag("--plots", e_plots, "Emit per-station forecast SVG plots");

    auto* pred_cmd = app.add_subcommand("predict", "Forecast from the last observed window");
    std::string p_ckpt, p_data, p_out = "forecast.csv";
    int p_horizon = 12;
    pred_cmd->add_option("--checkpoint", p_ckpt, "Checkpoint file")->required();
    pred_cmd->add_option("--data", p_data, "Directory with series.csv and stations.csv")
        ->required();
    pred_cmd->add_option("--horizon", p_horizon, "Forecast steps (<= trained horizon)");
    pred_cmd->add_option("--out", p_out, "Forecast CSV path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (synth_cmd->parsed()) return cmd_synth(s_n, s_steps, s_seed, s_out);
        if (train_cmd->parsed())
            return cmd_train(t_config, t_out, t_seed, t_epochs, t_alpha, t_use_elev);
        if (eval_cmd->parsed()) return cmd_evaluate(e_ckpt, e_data, e_out, e_plots);
        if (pred_cmd->parsed()) return cmd_predict(p_ckpt, p_data, p_horizon, p_out);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return 3;
    }
    return 1;
}

} // namespace hv::cli
