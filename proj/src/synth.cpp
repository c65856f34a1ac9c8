#include "hv/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "hv/graphs.hpp"

namespace hv::synth {

Matrix oracle_adjacency_from_elevations(const std::vector<double>& station_elev, double s) {
    const int n = static_cast<int>(station_elev.size());
    Matrix w(n, n);
    for (int i = 0; i < n; ++i) {
        double row_sum = 0.0;
        for (int j = 0; j < n; ++j) {
            const double drop = std::max(0.0, station_elev[i] - station_elev[j]);
            w.at(i, j) = s > 1e-12 ? std::exp(drop / s) : 1.0;
            row_sum += w.at(i, j);
        }
        for (int j = 0; j < n; ++j) w.at(i, j) /= row_sum;
    }
    return w;
}

SynthScenario generate(const SynthOptions& opts) {
    if (opts.stations < 2) throw ConfigError("synth: need at least 2 stations");
    if (opts.steps < 100) throw ConfigError("synth: need at least 100 steps");
    if (opts.raster_rows < terrain::kPatchSize || opts.raster_cols < terrain::kPatchSize)
        throw ConfigError("synth: raster must be at least one patch");
    const int H = opts.raster_rows, W = opts.raster_cols;
    if (static_cast<long>(opts.stations) > static_cast<long>(H) * W)
        throw ConfigError("synth: more stations than distinct raster cells");

    Rng rng(derive_seed(opts.seed, "synth"));
    SynthScenario sc;
    sc.seed = opts.seed;

    // Terrain: a gentle base plus seeded Gaussian bumps.
    sc.raster.cell_size = 1.0;
    sc.raster.origin = {0.0, 0.0};
    sc.raster.nodata_value = -9999.0;
    sc.raster.heights = Matrix::full(H, W, 100.0);
    for (int b = 0; b < opts.bumps; ++b) {
        const double cr = rng.uniform(0.0, H);
        const double cc = rng.uniform(0.0, W);
        const double amp = rng.uniform(5.0, 30.0);
        const double sigma = rng.uniform(4.0, 12.0);
        for (int r = 0; r < H; ++r)
            for (int c = 0; c < W; ++c) {
                const double d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
                sc.raster.heights.at(r, c) += amp * std::exp(-d2 / (2.0 * sigma * sigma));
            }
    }

    // Stations in distinct patches when the grid allows, distinct cells
    // otherwise, so the elevation graph has per-station structure.
    const int prows = (H + terrain::kPatchSize - 1) / terrain::kPatchSize;
    const int pcols = (W + terrain::kPatchSize - 1) / terrain::kPatchSize;
    const int n = opts.stations;
    std::vector<std::pair<int, int>> cells; // (row, col)
    if (prows * pcols >= n) {
        std::vector<int> patches(prows * pcols);
        std::iota(patches.begin(), patches.end(), 0);
        for (int i = static_cast<int>(patches.size()) - 1; i > 0; --i)
            std::swap(patches[i], patches[static_cast<int>(rng.uniform_int(i + 1))]);
        for (int k = 0; k < n; ++k) {
            const int pr = patches[k] / pcols, pc = patches[k] % pcols;
            const int r = std::min(H - 1, pr * terrain::kPatchSize +
                                              static_cast<int>(rng.uniform_int(terrain::kPatchSize)));
            const int c = std::min(W - 1, pc * terrain::kPatchSize +
                                              static_cast<int>(rng.uniform_int(terrain::kPatchSize)));
            cells.emplace_back(r, c);
        }
    } else {
        while (static_cast<int>(cells.size()) < n) {
            const int r = static_cast<int>(rng.uniform_int(H));
            const int c = static_cast<int>(rng.uniform_int(W));
            if (std::find(cells.begin(), cells.end(), std::make_pair(r, c)) == cells.end())
                cells.emplace_back(r, c);
        }
    }

    std::vector<double> elev(n);
    sc.series.station_ids.resize(n);
    sc.series.station_coords.resize(n);
    for (int i = 0; i < n; ++i) {
        elev[i] = sc.raster.heights.at(cells[i].first, cells[i].second);
        sc.series.station_ids[i] = "st" + std::to_string(i + 1);
        sc.series.station_coords[i] = {(cells[i].second + 0.5) * sc.raster.cell_size,
                                       (cells[i].first + 0.5) * sc.raster.cell_size};
    }

    // Oracle mixing weights from pairwise elevation drops; the scale is the
    // raster-wide height deviation.
    double mu = 0.0;
    for (double v : sc.raster.heights.a) mu += v;
    mu /= static_cast<double>(sc.raster.heights.size());
    double var = 0.0;
    for (double v : sc.raster.heights.a) var += (v - mu) * (v - mu);
    var /= static_cast<double>(sc.raster.heights.size());
    sc.oracle_adjacency = oracle_adjacency_from_elevations(elev, std::sqrt(var));

    // Series dynamics.
    const int T = opts.steps;
    sc.series.values = Matrix(T, n);
    sc.series.missing_mask.assign(static_cast<size_t>(T) * n, 0);
    sc.series.timestamps.resize(T);
    const long start = opts.start_date.serial();
    for (int t = 0; t < T; ++t) sc.series.timestamps[t] = data::Date::from_serial(start + t);

    std::vector<double> phase(n);
    for (int i = 0; i < n; ++i) phase[i] = rng.uniform(0.0, 2.0 * M_PI);
    std::vector<double> x(n);
    for (int i = 0; i < n; ++i)
        x[i] = opts.constant_x0 ? *opts.constant_x0 : 2.0 + rng.uniform(-0.5, 0.5);
    std::vector<double> next(n);
    for (int t = 0; t < T; ++t) {
        for (int i = 0; i < n; ++i) sc.series.values.at(t, i) = x[i];
        for (int i = 0; i < n; ++i) {
            double mix = 0.0;
            for (int j = 0; j < n; ++j) mix += sc.oracle_adjacency.at(i, j) * x[j];
            double v = opts.ar_self * x[i] + opts.ar_mix * mix;
            if (opts.seasonal_amplitude != 0.0)
                v += opts.seasonal_amplitude *
                     std::sin(2.0 * M_PI * (t + 1) / 365.0 + phase[i]);
            if (opts.noise_sigma > 0.0) v += rng.normal(0.0, opts.noise_sigma);
            next[i] = v;
        }
        x = next;
    }
    return sc;
}

void write_scenario(const SynthScenario& scenario, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (!fs::is_directory(dir))
        throw DataError("synth: cannot create output directory: " + dir);
    terrain::write_raster(scenario.raster, (fs::path(dir) / "terrain.asc").string());
    data::write_series_csv(scenario.series, (fs::path(dir) / "series.csv").string());
    data::write_station_meta_csv(scenario.series, (fs::path(dir) / "stations.csv").string());
    graphs::write_adjacency(scenario.oracle_adjacency,
                            (fs::path(dir) / "oracle_adj.txt").string());
}

} // namespace hv::synth
