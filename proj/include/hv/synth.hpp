#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "hv/data.hpp"
#include "hv/terrain.hpp"

namespace hv::synth {

struct SynthOptions {
    int stations = 6;
    int steps = 2000;
    std::uint64_t seed = 7;
    int raster_rows = 64;
    int raster_cols = 64;
    int bumps = 6;                    // Gaussian terrain bumps
    double noise_sigma = 0.01;
    double seasonal_amplitude = 0.3;  // per-station phase, period 365
    double ar_self = 0.8;
    double ar_mix = 0.2;
    std::optional<double> constant_x0; // all stations start at this level
    data::Date start_date{2000, 1, 1};
};

/// A fully known scenario: smooth seeded terrain, stations at distinct
/// cells, row-stochastic oracle adjacency built from pairwise elevation
/// drops, and a series generated by
///   x_{t+1} = 0.8 x_t + 0.2 W x_t + seasonal + noise.
struct SynthScenario {
    terrain::ElevationRaster raster;
    data::StationSeries series;
    Matrix oracle_adjacency;
    std::uint64_t seed = 0;
};

SynthScenario generate(const SynthOptions& opts);

/// W_ij proportional to exp(max(0, elev_i - elev_j) / s), rows normalized;
/// s <= 0 (flat terrain) yields uniform rows.
Matrix oracle_adjacency_from_elevations(const std::vector<double>& station_elev, double s);

/// Writes terrain.asc, series.csv, stations.csv and oracle_adj.txt.
void write_scenario(const SynthScenario& scenario, const std::string& dir);

} // namespace hv::synth
