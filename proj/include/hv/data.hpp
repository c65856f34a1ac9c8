#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hv/matrix.hpp"

namespace hv::data {

/// Calendar date with day-serial arithmetic (proleptic Gregorian).
struct Date {
    int y = 1970;
    int m = 1;
    int d = 1;

    bool operator==(const Date&) const = default;
    auto operator<=>(const Date&) const = default;

    /// Days since 1970-01-01.
    long serial() const;
    static Date from_serial(long days);
    static bool is_leap(int year);
    static int days_in_month(int year, int month);

    /// Same month/day one year away; Feb 29 falls back to Feb 28.
    Date shift_years(int delta) const;

    std::string to_string() const; // ISO-8601
    /// Strict YYYY-MM-DD parse; throws DataError on malformed input.
    static Date parse(const std::string& s, const std::string& where);
};

/// Aligned multi-station daily series. values is (T x n) in meters,
/// station order follows the metadata file.
struct StationSeries {
    std::vector<Date> timestamps;
    Matrix values;
    std::vector<std::string> station_ids;
    std::vector<std::pair<double, double>> station_coords;
    std::vector<std::uint8_t> missing_mask; // T*n, row-major

    int steps() const { return values.rows; }
    int stations() const { return values.cols; }
    bool is_missing(int t, int s) const {
        return missing_mask[static_cast<size_t>(t) * values.cols + s] != 0;
    }
    bool any_missing() const;
};

/// Per-station z-score statistics, fitted on the training split only.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std_dev;
};

enum class NormMode { PerStation, Global };

/// Sliding windows over a series segment: inputs (S x T_in x n x F),
/// targets (S x T_out x n). F is 1 (water level only).
struct WindowedDataset {
    int samples = 0;
    int t_in = 0;
    int t_out = 0;
    int stations = 0;
    int features = 1;
    std::vector<double> inputs;
    std::vector<double> targets;

    double input(int s, int t, int i, int f = 0) const {
        return inputs[((static_cast<size_t>(s) * t_in + t) * stations + i) * features + f];
    }
    double target(int s, int t, int i) const {
        return targets[(static_cast<size_t>(s) * t_out + t) * stations + i];
    }
};

struct SplitSeries {
    StationSeries train;
    StationSeries val;
    StationSeries test;
};

/// Loads the series CSV (`date,<id>,...`; empty or NaN cell = missing) and
/// the station metadata CSV (`station_id,x,y`). Columns are reordered to
/// metadata order; a series column without a metadata row (or vice versa)
/// is an error.
StationSeries load_series(const std::string& series_csv_path,
                          const std::string& station_meta_path);

/// Replaces each missing cell with w_prev*v(same day, prev year) +
/// w_next*v(same day, next year); single-neighbor cells use that neighbor
/// with weight 1. Only originally observed values count as neighbors.
StationSeries impute_missing(const StationSeries& series, double w_prev = 0.5,
                             double w_next = 0.5);

/// Contiguous chronological train/val/test segments; boundaries at
/// floor(T*f_train) and floor(T*(f_train+f_val)).
SplitSeries chronological_split(const StationSeries& series,
                                std::array<double, 3> fractions = {0.7, 0.1, 0.2});

/// Population (biased) std per station; throws on a constant column.
NormStats fit_normalizer(const StationSeries& train, NormMode mode = NormMode::PerStation);

/// x -> (x - mean)/std columnwise.
Matrix apply_normalizer(const Matrix& values, const NormStats& stats);
/// Exact inverse of apply_normalizer.
Matrix invert_normalizer(const Matrix& values, const NormStats& stats);

WindowedDataset make_windows(const StationSeries& series, int t_in, int t_out);
WindowedDataset make_windows(const Matrix& values, int t_in, int t_out);

/// Writes a series back out in the load_series CSV schema.
void write_series_csv(const StationSeries& series, const std::string& path);
void write_station_meta_csv(const StationSeries& series, const std::string& path);

} // namespace hv::data
