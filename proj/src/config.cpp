#include "hv/config.hpp"

#include <fstream>

namespace hv {

using nlohmann::json;

namespace {

/// Reads j[section][key] if present, else keeps the default and records
/// "section.key" for the caller's log.
class Reader {
public:
    Reader(const json& j, std::vector<std::string>* defaulted)
        : j_(j), defaulted_(defaulted) {}

    template <typename T>
    void get(const char* section, const char* key, T& value) const {
        if (j_.contains(section) && j_.at(section).contains(key)) {
            try {
                value = j_.at(section).at(key).get<T>();
            } catch (const json::exception& e) {
                throw ConfigError(std::string("config: bad value for ") + section + "." +
                                  key + ": " + e.what());
            }
        } else if (defaulted_) {
            defaulted_->push_back(std::string(section) + "." + key);
        }
    }

    template <typename T>
    void get_top(const char* key, T& value) const {
        if (j_.contains(key)) {
            value = j_.at(key).get<T>();
        } else if (defaulted_) {
            defaulted_->push_back(key);
        }
    }

private:
    const json& j_;
    std::vector<std::string>* defaulted_;
};

} // namespace

data::NormMode RunConfig::norm_mode() const {
    if (data.normalization == "per_station") return data::NormMode::PerStation;
    if (data.normalization == "global") return data::NormMode::Global;
    throw ConfigError("config: normalization must be 'per_station' or 'global'");
}

json model_config_to_json(const ModelConfig& cfg) {
    return json{
        {"vit",
         {{"patch_size", cfg.vit.patch_size},
          {"embed_dim", cfg.vit.embed_dim},
          {"num_layers", cfg.vit.num_layers},
          {"num_heads", cfg.vit.num_heads},
          {"ffn_dim", cfg.vit.ffn_dim},
          {"similarity_temperature", cfg.vit.similarity_temperature},
          {"freeze", cfg.vit.freeze}}},
        {"graph",
         {{"embedding_dim", cfg.graph.embedding_dim},
          {"alpha", cfg.graph.alpha},
          {"alpha_learnable", cfg.graph.alpha_learnable},
          {"use_elevation", cfg.graph.use_elevation}}},
        {"gcrn",
         {{"hidden_dim", cfg.gcrn.hidden_dim},
          {"num_layers", cfg.gcrn.num_layers},
          {"conv_layers", cfg.gcrn.conv_layers},
          {"t_in", cfg.t_in},
          {"t_out", cfg.t_out}}},
        {"attention",
         {{"num_heads", cfg.attention.num_heads},
          {"sampling_factor", cfg.attention.sampling_factor},
          {"exact_fallback", cfg.attention.exact_fallback}}},
        {"stations", cfg.stations},
        {"seed", cfg.seed},
    };
}

ModelConfig model_config_from_json(const json& j) {
    ModelConfig cfg;
    Reader r(j, nullptr);
    r.get("vit", "patch_size", cfg.vit.patch_size);
    r.get("vit", "embed_dim", cfg.vit.embed_dim);
    r.get("vit", "num_layers", cfg.vit.num_layers);
    r.get("vit", "num_heads", cfg.vit.num_heads);
    r.get("vit", "ffn_dim", cfg.vit.ffn_dim);
    r.get("vit", "similarity_temperature", cfg.vit.similarity_temperature);
    r.get("vit", "freeze", cfg.vit.freeze);
    r.get("graph", "embedding_dim", cfg.graph.embedding_dim);
    r.get("graph", "alpha", cfg.graph.alpha);
    r.get("graph", "alpha_learnable", cfg.graph.alpha_learnable);
    r.get("graph", "use_elevation", cfg.graph.use_elevation);
    r.get("gcrn", "hidden_dim", cfg.gcrn.hidden_dim);
    r.get("gcrn", "num_layers", cfg.gcrn.num_layers);
    r.get("gcrn", "conv_layers", cfg.gcrn.conv_layers);
    r.get("gcrn", "t_in", cfg.t_in);
    r.get("gcrn", "t_out", cfg.t_out);
    r.get("attention", "num_heads", cfg.attention.num_heads);
    r.get("attention", "sampling_factor", cfg.attention.sampling_factor);
    r.get("attention", "exact_fallback", cfg.attention.exact_fallback);
    r.get_top("stations", cfg.stations);
    r.get_top("seed", cfg.seed);
    return cfg;
}

json run_config_to_json(const RunConfig& cfg) {
    json j = model_config_to_json(cfg.model);
    j.erase("stations"); // derived from the station metadata file
    j["data"] = json{{"series_csv", cfg.data.series_csv},
                     {"stations_csv", cfg.data.stations_csv},
                     {"splits", cfg.data.splits},
                     {"impute_weights", cfg.data.impute_weights},
                     {"normalization", cfg.data.normalization}};
    j["terrain"] = json{{"raster", cfg.terrain.raster},
                        {"downsample_factor", cfg.terrain.downsample_factor}};
    j["train"] = json{{"batch_size", cfg.train.batch_size},
                      {"max_epochs", cfg.train.max_epochs},
                      {"patience", cfg.train.patience},
                      {"lr", cfg.train.lr},
                      {"lr_decay", cfg.train.lr_decay},
                      {"lr_milestones", cfg.train.lr_milestones},
                      {"curriculum_tau", cfg.train.curriculum_tau},
                      {"grad_clip", cfg.train.grad_clip},
                      {"seed", cfg.train.seed}};
    j["seed"] = cfg.train.seed;
    j["output_dir"] = cfg.output_dir;
    return j;
}

RunConfig run_config_from_json(const json& j, std::vector<std::string>* defaulted) {
    if (!j.is_object()) throw ConfigError("config: top-level JSON must be an object");
    RunConfig cfg;
    Reader r(j, defaulted);
    r.get("data", "series_csv", cfg.data.series_csv);
    r.get("data", "stations_csv", cfg.data.stations_csv);
    r.get("data", "splits", cfg.data.splits);
    r.get("data", "impute_weights", cfg.data.impute_weights);
    r.get("data", "normalization", cfg.data.normalization);
    r.get("terrain", "raster", cfg.terrain.raster);
    r.get("terrain", "downsample_factor", cfg.terrain.downsample_factor);
    r.get("vit", "patch_size", cfg.model.vit.patch_size);
    r.get("vit", "embed_dim", cfg.model.vit.embed_dim);
    r.get("vit", "num_layers", cfg.model.vit.num_layers);
    r.get("vit", "num_heads", cfg.model.vit.num_heads);
    r.get("vit", "ffn_dim", cfg.model.vit.ffn_dim);
    r.get("vit", "similarity_temperature", cfg.model.vit.similarity_temperature);
    r.get("vit", "freeze", cfg.model.vit.freeze);
    r.get("graph", "embedding_dim", cfg.model.graph.embedding_dim);
    r.get("graph", "alpha", cfg.model.graph.alpha);
    r.get("graph", "alpha_learnable", cfg.model.graph.alpha_learnable);
    r.get("graph", "use_elevation", cfg.model.graph.use_elevation);
    r.get("gcrn", "hidden_dim", cfg.model.gcrn.hidden_dim);
    r.get("gcrn", "num_layers", cfg.model.gcrn.num_layers);
    r.get("gcrn", "conv_layers", cfg.model.gcrn.conv_layers);
    r.get("gcrn", "t_in", cfg.model.t_in);
    r.get("gcrn", "t_out", cfg.model.t_out);
    r.get("attention", "num_heads", cfg.model.attention.num_heads);
    r.get("attention", "sampling_factor", cfg.model.attention.sampling_factor);
    r.get("attention", "exact_fallback", cfg.model.attention.exact_fallback);
    r.get("train", "batch_size", cfg.train.batch_size);
    r.get("train", "max_epochs", cfg.train.max_epochs);
    r.get("train", "patience", cfg.train.patience);
    r.get("train", "lr", cfg.train.lr);
    r.get("train", "lr_decay", cfg.train.lr_decay);
    r.get("train", "lr_milestones", cfg.train.lr_milestones);
    r.get("train", "curriculum_tau", cfg.train.curriculum_tau);
    r.get("train", "grad_clip", cfg.train.grad_clip);
    std::uint64_t seed = 1;
    r.get_top("seed", seed);
    cfg.train.seed = seed;
    r.get("train", "seed", cfg.train.seed);
    cfg.model.seed = cfg.train.seed;
    r.get_top("output_dir", cfg.output_dir);
    return cfg;
}

RunConfig load_run_config(const std::string& path, std::vector<std::string>* defaulted) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open config file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: failed to parse " + path + ": " + e.what());
    }
    return run_config_from_json(j, defaulted);
}

} // namespace hv
