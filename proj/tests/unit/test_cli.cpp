#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "hv/cli.hpp"
#include "hv/config.hpp"
#include "hv/data.hpp"

using namespace hv;
using hvtest::TempDir;
using hvtest::read_file;
using hvtest::write_file;

namespace {

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"hydrovision"};
    for (const auto& s : args) argv.push_back(s.c_str());
    return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string train_config_json(const std::string& data_dir, const std::string& out_dir) {
    nlohmann::json j{
        {"data",
         {{"series_csv", data_dir + "/series.csv"},
          {"stations_csv", data_dir + "/stations.csv"}}},
        {"terrain", {{"raster", data_dir + "/terrain.asc"}}},
        {"vit", {{"embed_dim", 8}, {"num_layers", 1}, {"num_heads", 2}}},
        {"graph", {{"embedding_dim", 4}}},
        {"gcrn", {{"hidden_dim", 8}, {"t_in", 12}, {"t_out", 12}}},
        {"attention", {{"num_heads", 2}}},
        {"train",
         {{"batch_size", 16}, {"max_epochs", 2}, {"patience", 1}, {"lr", 0.01}}},
        {"seed", 11},
        {"output_dir", out_dir},
    };
    return j.dump(2);
}

} // namespace

TEST_CASE("run config round trips losslessly through JSON") {
    RunConfig cfg;
    cfg.data.series_csv = "a.csv";
    cfg.data.stations_csv = "b.csv";
    cfg.terrain.raster = "c.asc";
    cfg.model.vit.embed_dim = 48;
    cfg.model.graph.alpha = 0.25;
    cfg.train.lr_milestones = {10, 20, 40};
    cfg.train.seed = 99;
    cfg.model.seed = 99;
    auto j = run_config_to_json(cfg);
    RunConfig back = run_config_from_json(j);
    CHECK(run_config_to_json(back) == j);

    std::vector<std::string> defaulted;
    RunConfig sparse = run_config_from_json(nlohmann::json::object(), &defaulted);
    CHECK(sparse.train.batch_size == 64);
    CHECK(sparse.model.graph.alpha == 0.5);
    CHECK(!defaulted.empty()); // every key reported as defaulted
}

TEST_CASE("synth command writes the full manifest deterministically") {
    TempDir dir("cli_synth");
    const std::string out1 = dir.file("a"), out2 = dir.file("b");
    CHECK(run_cli({"synth", "--n", "6", "--steps", "200", "--seed", "7", "--out", out1}) == 0);
    for (const char* name : {"terrain.asc", "series.csv", "stations.csv", "oracle_adj.txt"})
        CHECK(std::filesystem::exists(std::filesystem::path(out1) / name));

    CHECK(run_cli({"synth", "--n", "6", "--steps", "200", "--seed", "7", "--out", out2}) == 0);
    for (const char* name : {"terrain.asc", "series.csv", "stations.csv", "oracle_adj.txt"})
        CHECK(read_file((std::filesystem::path(out1) / name).string()) ==
              read_file((std::filesystem::path(out2) / name).string()));

    CHECK(run_cli({"synth", "--n", "1", "--steps", "200", "--out", dir.file("c")}) != 0);
    CHECK(run_cli({"synth", "--n", "3", "--steps", "200", "--out",
                   "/proc/definitely/not/writable"}) != 0);
}

TEST_CASE("train, evaluate and predict drive the full pipeline") {
    TempDir dir("cli_train");
    const std::string data_dir = dir.file("data");
    REQUIRE(run_cli({"synth", "--n", "3", "--steps", "300", "--seed", "21", "--out",
                     data_dir}) == 0);
    const std::string cfg_path = dir.file("run.json");
    const std::string out_dir = dir.file("out");
    write_file(cfg_path, train_config_json(data_dir, out_dir));

    CHECK(run_cli({"train", "--config", "does_not_exist.json"}) == 1);
    REQUIRE(run_cli({"train", "--config", cfg_path}) == 0);

    const std::string ckpt = out_dir + "/checkpoint.ckpt";
    REQUIRE(std::filesystem::exists(ckpt));
    {
        std::ifstream in(ckpt);
        std::string magic;
        std::getline(in, magic);
        CHECK(magic == "HYDROVISION-CKPT-1");
    }
    CHECK(std::filesystem::exists(out_dir + "/history.jsonl"));
    CHECK(std::filesystem::exists(out_dir + "/a_adaptive.txt"));
    CHECK(std::filesystem::exists(out_dir + "/a_hybrid.txt"));
    CHECK(std::filesystem::exists(out_dir + "/a_elevation.txt"));

    // evaluate: report with the four horizon rows, deterministic across runs.
    const std::string eval1 = dir.file("eval1"), eval2 = dir.file("eval2");
    REQUIRE(run_cli({"evaluate", "--checkpoint", ckpt, "--data", data_dir, "--out",
                     eval1}) == 0);
    REQUIRE(run_cli({"evaluate", "--checkpoint", ckpt, "--data", data_dir, "--out", eval2,
                     "--plots"}) == 0);
    const std::string report = read_file(eval1 + "/report.json");
    auto j = nlohmann::json::parse(report);
    CHECK(j.at("horizons").size() == 4);
    CHECK(j.at("horizons")[0].at("step") == 3);
    CHECK(j.at("horizons")[3].at("step") == 12);
    CHECK(report == read_file(eval2 + "/report.json"));
    CHECK(std::filesystem::exists(eval2 + "/forecast_st1.svg"));

    // predict: one row per horizon step, values inside the sanity band.
    const std::string fc = dir.file("forecast.csv");
    REQUIRE(run_cli({"predict", "--checkpoint", ckpt, "--data", data_dir, "--horizon",
                     "12", "--out", fc}) == 0);
    auto series = data::load_series(data_dir + "/series.csv", data_dir + "/stations.csv");
    auto forecast = data::load_series(fc, data_dir + "/stations.csv");
    CHECK(forecast.steps() == 12);
    CHECK(forecast.timestamps.front().serial() == series.timestamps.back().serial() + 1);

    // Sanity band from the training segment: [min - 5*std, max + 5*std].
    auto split = data::chronological_split(series);
    auto stats = data::fit_normalizer(split.train);
    for (int i = 0; i < series.stations(); ++i) {
        double lo = 1e300, hi = -1e300;
        for (int t = 0; t < split.train.steps(); ++t) {
            lo = std::min(lo, split.train.values.at(t, i));
            hi = std::max(hi, split.train.values.at(t, i));
        }
        for (int t = 0; t < forecast.steps(); ++t) {
            const double v = forecast.values.at(t, i);
            CHECK(std::isfinite(v));
            CHECK(v >= lo - 5.0 * stats.std_dev[i]);
            CHECK(v <= hi + 5.0 * stats.std_dev[i]);
        }
    }

    CHECK(run_cli({"predict", "--checkpoint", ckpt, "--data", data_dir, "--horizon", "13",
                   "--out", fc}) == 1);

    // Station mismatch between checkpoint and data is a data error (exit 2).
    const std::string other = dir.file("other");
    REQUIRE(run_cli({"synth", "--n", "4", "--steps", "300", "--seed", "3", "--out",
                     other}) == 0);
    CHECK(run_cli({"evaluate", "--checkpoint", ckpt, "--data", other, "--out",
                   dir.file("e3")}) == 2);
}

TEST_CASE("usage errors exit with code 1") {
    CHECK(run_cli({"train"}) == 1);              // missing required --config
    CHECK(run_cli({"no-such-command"}) == 1);
    CHECK(run_cli({}) == 1);                     // a subcommand is required
}
