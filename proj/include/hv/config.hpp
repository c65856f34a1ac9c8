#pragma once

#include <array>
#include <string>
#include <vector>

#include <json.hpp>

#include "hv/model.hpp"
#include "hv/train.hpp"

namespace hv {

/// Everything a `train` run needs, loadable from one JSON file. Keys left
/// out of the file fall back to the documented defaults (and are reported
/// via the `defaulted` list).
struct RunConfig {
    struct DataCfg {
        std::string series_csv;
        std::string stations_csv;
        std::array<double, 3> splits{0.7, 0.1, 0.2};
        std::array<double, 2> impute_weights{0.5, 0.5};
        std::string normalization = "per_station"; // or "global"
    } data;

    struct TerrainCfg {
        std::string raster;
        int downsample_factor = 1;
    } terrain;

    ModelConfig model;
    train::TrainConfig train;
    std::string output_dir = "out";

    data::NormMode norm_mode() const;
};

nlohmann::json model_config_to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j,
                               std::vector<std::string>* defaulted = nullptr);
RunConfig load_run_config(const std::string& path,
                          std::vector<std::string>* defaulted = nullptr);

} // namespace hv
