#include "hv/data.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unordered_map>

namespace hv::data {

namespace {

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

std::vector<std::string> read_lines(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw DataError("data: cannot open " + std::string(what) + " file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!trim(line).empty()) lines.push_back(line);
    }
    return lines;
}

bool is_missing_cell(const std::string& raw) {
    const std::string v = trim(raw);
    return v.empty() || v == "nan" || v == "NaN" || v == "NAN";
}

double parse_value(const std::string& raw, int row, const std::string& col) {
    const std::string v = trim(raw);
    const char* begin = v.c_str();
    char* end = nullptr;
    double x = std::strtod(begin, &end);
    if (end != begin + v.size() || v.empty())
        throw DataError("data: non-numeric value '" + v + "' at row " + std::to_string(row) +
                        ", column " + col);
    return x;
}

} // namespace

// --- Date -------------------------------------------------------------------

bool Date::is_leap(int year) {
    return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
}

int Date::days_in_month(int year, int month) {
    static const int days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (month == 2 && is_leap(year)) return 29;
    return days[month - 1];
}

long Date::serial() const {
    // Howard Hinnant's days_from_civil.
    int yy = y - (m <= 2);
    const int era = (yy >= 0 ? yy : yy - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(yy - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<long>(era) * 146097 + static_cast<long>(doe) - 719468;
}

Date Date::from_serial(long days) {
    long z = days + 719468;
    const long era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const long yy = static_cast<long>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned dd = doy - (153 * mp + 2) / 5 + 1;
    const unsigned mm = mp + (mp < 10 ? 3 : -9);
    return Date{static_cast<int>(yy + (mm <= 2)), static_cast<int>(mm), static_cast<int>(dd)};
}

Date Date::shift_years(int delta) const {
    Date out{y + delta, m, d};
    if (out.m == 2 && out.d == 29 && !is_leap(out.y)) out.d = 28;
    return out;
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
    return buf;
}

Date Date::parse(const std::string& s, const std::string& where) {
    const std::string v = trim(s);
    auto fail = [&] {
        throw DataError("data: malformed date '" + v + "' at " + where);
    };
    if (v.size() != 10 || v[4] != '-' || v[7] != '-') fail();
    for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(v[i]))) fail();
    Date out{std::stoi(v.substr(0, 4)), std::stoi(v.substr(5, 2)), std::stoi(v.substr(8, 2))};
    if (out.m < 1 || out.m > 12 || out.d < 1 || out.d > days_in_month(out.y, out.m)) fail();
    return out;
}

// --- StationSeries ------------------------------------------------------------

bool StationSeries::any_missing() const {
    for (std::uint8_t m : missing_mask)
        if (m) return true;
    return false;
}

StationSeries load_series(const std::string& series_csv_path,
                          const std::string& station_meta_path) {
    // Station metadata first; it fixes the column order.
    const auto meta_lines = read_lines(station_meta_path, "station metadata");
    if (meta_lines.empty()) throw DataError("data: empty station metadata file");
    {
        auto header = split_csv_line(meta_lines[0]);
        if (header.size() != 3 || trim(header[0]) != "station_id" || trim(header[1]) != "x" ||
            trim(header[2]) != "y")
            throw DataError("data: station metadata header must be 'station_id,x,y'");
    }
    std::vector<std::string> ids;
    std::vector<std::pair<double, double>> coords;
    std::unordered_map<std::string, int> id_index;
    for (size_t r = 1; r < meta_lines.size(); ++r) {
        auto cells = split_csv_line(meta_lines[r]);
        if (cells.size() != 3)
            throw DataError("data: station metadata row " + std::to_string(r + 1) +
                            " must have 3 fields");
        std::string id = trim(cells[0]);
        if (id.empty()) throw DataError("data: empty station id at metadata row " +
                                        std::to_string(r + 1));
        if (id_index.count(id)) throw DataError("data: duplicate station id '" + id + "'");
        id_index[id] = static_cast<int>(ids.size());
        ids.push_back(id);
        coords.emplace_back(parse_value(cells[1], static_cast<int>(r + 1), "x"),
                            parse_value(cells[2], static_cast<int>(r + 1), "y"));
    }
    const int n = static_cast<int>(ids.size());
    if (n == 0) throw DataError("data: station metadata lists no stations");

    const auto lines = read_lines(series_csv_path, "series");
    if (lines.empty()) throw DataError("data: empty series file");
    auto header = split_csv_line(lines[0]);
    if (header.empty() || trim(header[0]) != "date")
        throw DataError("data: series header must start with 'date'");
    // Map CSV columns onto metadata order.
    std::vector<int> col_to_station(header.size() - 1, -1);
    std::vector<bool> seen(n, false);
    for (size_t c = 1; c < header.size(); ++c) {
        const std::string id = trim(header[c]);
        auto it = id_index.find(id);
        if (it == id_index.end())
            throw DataError("data: series column '" + id + "' has no station metadata row");
        if (seen[it->second]) throw DataError("data: duplicate series column '" + id + "'");
        seen[it->second] = true;
        col_to_station[c - 1] = it->second;
    }
    for (int s = 0; s < n; ++s)
        if (!seen[s])
            throw DataError("data: station '" + ids[s] + "' listed in metadata but absent "
                            "from the series file");

    const int T = static_cast<int>(lines.size()) - 1;
    if (T == 0) throw DataError("data: series file has no data rows");
    StationSeries out;
    out.station_ids = std::move(ids);
    out.station_coords = std::move(coords);
    out.values = Matrix::zeros(T, n);
    out.missing_mask.assign(static_cast<size_t>(T) * n, 0);
    out.timestamps.reserve(T);
    for (int t = 0; t < T; ++t) {
        auto cells = split_csv_line(lines[t + 1]);
        if (cells.size() != header.size())
            throw DataError("data: series row " + std::to_string(t + 2) + " has " +
                            std::to_string(cells.size()) + " fields, expected " +
                            std::to_string(header.size()));
        Date date = Date::parse(cells[0], "series row " + std::to_string(t + 2));
        if (t > 0 && !(out.timestamps.back() < date))
            throw DataError("data: series dates not strictly increasing at row " +
                            std::to_string(t + 2));
        out.timestamps.push_back(date);
        for (size_t c = 1; c < cells.size(); ++c) {
            const int s = col_to_station[c - 1];
            if (is_missing_cell(cells[c])) {
                out.missing_mask[static_cast<size_t>(t) * n + s] = 1;
            } else {
                out.values.at(t, s) =
                    parse_value(cells[c], t + 2, out.station_ids[s]);
            }
        }
    }
    return out;
}

StationSeries impute_missing(const StationSeries& series, double w_prev, double w_next) {
    if (!series.any_missing()) return series;
    StationSeries out = series;
    std::unordered_map<long, int> row_of_day;
    for (int t = 0; t < series.steps(); ++t) row_of_day[series.timestamps[t].serial()] = t;

    auto neighbor = [&](const Date& d, int year_delta, int s, double& value) {
        auto it = row_of_day.find(d.shift_years(year_delta).serial());
        if (it == row_of_day.end() || series.is_missing(it->second, s)) return false;
        value = series.values.at(it->second, s);
        return true;
    };

    const int n = series.stations();
    for (int t = 0; t < series.steps(); ++t) {
        for (int s = 0; s < n; ++s) {
            if (!series.is_missing(t, s)) continue;
            double prev = 0.0, next = 0.0;
            const bool has_prev = neighbor(series.timestamps[t], -1, s, prev);
            const bool has_next = neighbor(series.timestamps[t], +1, s, next);
            double v;
            if (has_prev && has_next)
                v = w_prev * prev + w_next * next;
            else if (has_prev)
                v = prev;
            else if (has_next)
                v = next;
            else
                throw DataError("data: imputation: no neighbor-year value for station '" +
                                series.station_ids[s] + "' at " +
                                series.timestamps[t].to_string());
            out.values.at(t, s) = v;
            out.missing_mask[static_cast<size_t>(t) * n + s] = 0;
        }
    }
    return out;
}

namespace {

StationSeries slice_series(const StationSeries& s, int t0, int t1) {
    StationSeries out;
    out.station_ids = s.station_ids;
    out.station_coords = s.station_coords;
    out.timestamps.assign(s.timestamps.begin() + t0, s.timestamps.begin() + t1);
    const int n = s.stations();
    out.values = Matrix(t1 - t0, n);
    out.missing_mask.assign(static_cast<size_t>(t1 - t0) * n, 0);
    for (int t = t0; t < t1; ++t)
        for (int j = 0; j < n; ++j) {
            out.values.at(t - t0, j) = s.values.at(t, j);
            out.missing_mask[static_cast<size_t>(t - t0) * n + j] =
                s.missing_mask[static_cast<size_t>(t) * n + j];
        }
    return out;
}

} // namespace

SplitSeries chronological_split(const StationSeries& series, std::array<double, 3> fractions) {
    double sum = 0.0;
    for (double f : fractions) {
        if (f <= 0.0)
            throw DataError("data: split fractions must all be positive");
        sum += f;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw DataError("data: split fractions must sum to 1");
    const int T = series.steps();
    // +1e-9 guards against 0.7*T landing just below an integer.
    const int b1 = static_cast<int>(std::floor(T * fractions[0] + 1e-9));
    const int b2 = static_cast<int>(std::floor(T * (fractions[0] + fractions[1]) + 1e-9));
    return SplitSeries{slice_series(series, 0, b1), slice_series(series, b1, b2),
                       slice_series(series, b2, T)};
}

NormStats fit_normalizer(const StationSeries& train, NormMode mode) {
    const int T = train.steps(), n = train.stations();
    if (T == 0 || n == 0) throw DataError("data: cannot fit normalizer on empty series");
    NormStats st;
    st.mean.resize(n);
    st.std_dev.resize(n);
    if (mode == NormMode::PerStation) {
        for (int s = 0; s < n; ++s) {
            double mu = 0.0;
            for (int t = 0; t < T; ++t) mu += train.values.at(t, s);
            mu /= T;
            double var = 0.0;
            for (int t = 0; t < T; ++t) {
                const double d = train.values.at(t, s) - mu;
                var += d * d;
            }
            var /= T;
            const double sd = std::sqrt(var);
            if (sd < 1e-12)
                throw DataError("data: station '" + train.station_ids[s] +
                                "' is constant over the training split; cannot normalize");
            st.mean[s] = mu;
            st.std_dev[s] = sd;
        }
    } else {
        double mu = 0.0;
        for (double v : train.values.a) mu += v;
        mu /= static_cast<double>(train.values.size());
        double var = 0.0;
        for (double v : train.values.a) var += (v - mu) * (v - mu);
        var /= static_cast<double>(train.values.size());
        const double sd = std::sqrt(var);
        if (sd < 1e-12) throw DataError("data: training split is constant; cannot normalize");
        for (int s = 0; s < n; ++s) {
            st.mean[s] = mu;
            st.std_dev[s] = sd;
        }
    }
    return st;
}

Matrix apply_normalizer(const Matrix& values, const NormStats& stats) {
    Matrix out(values.rows, values.cols);
    for (int t = 0; t < values.rows; ++t)
        for (int s = 0; s < values.cols; ++s)
            out.at(t, s) = (values.at(t, s) - stats.mean[s]) / stats.std_dev[s];
    return out;
}

Matrix invert_normalizer(const Matrix& values, const NormStats& stats) {
    Matrix out(values.rows, values.cols);
    for (int t = 0; t < values.rows; ++t)
        for (int s = 0; s < values.cols; ++s)
            out.at(t, s) = values.at(t, s) * stats.std_dev[s] + stats.mean[s];
    return out;
}

WindowedDataset make_windows(const Matrix& values, int t_in, int t_out) {
    const int T = values.rows, n = values.cols;
    if (T < t_in + t_out)
        throw DataError("data: series too short for windowing: " + std::to_string(T) +
                        " steps < " + std::to_string(t_in + t_out));
    WindowedDataset ds;
    ds.samples = T - t_in - t_out + 1;
    ds.t_in = t_in;
    ds.t_out = t_out;
    ds.stations = n;
    ds.features = 1;
    ds.inputs.resize(static_cast<size_t>(ds.samples) * t_in * n);
    ds.targets.resize(static_cast<size_t>(ds.samples) * t_out * n);
    for (int s = 0; s < ds.samples; ++s) {
        for (int t = 0; t < t_in; ++t)
            for (int i = 0; i < n; ++i)
                ds.inputs[(static_cast<size_t>(s) * t_in + t) * n + i] = values.at(s + t, i);
        for (int t = 0; t < t_out; ++t)
            for (int i = 0; i < n; ++i)
                ds.targets[(static_cast<size_t>(s) * t_out + t) * n + i] =
                    values.at(s + t_in + t, i);
    }
    return ds;
}

WindowedDataset make_windows(const StationSeries& series, int t_in, int t_out) {
    return make_windows(series.values, t_in, t_out);
}

void write_series_csv(const StationSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("data: cannot write series file: " + path);
    out << "date";
    for (const auto& id : series.station_ids) out << ',' << id;
    out << '\n';
    char buf[32];
    for (int t = 0; t < series.steps(); ++t) {
        out << series.timestamps[t].to_string();
        for (int s = 0; s < series.stations(); ++s) {
            if (series.is_missing(t, s)) {
                out << ',';
            } else {
                std::snprintf(buf, sizeof buf, "%.9g", series.values.at(t, s));
                out << ',' << buf;
            }
        }
        out << '\n';
    }
}

void write_station_meta_csv(const StationSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("data: cannot write station metadata file: " + path);
    out << "station_id,x,y\n";
    char buf[64];
    for (int s = 0; s < series.stations(); ++s) {
        std::snprintf(buf, sizeof buf, "%s,%.9g,%.9g", series.station_ids[s].c_str(),
                      series.station_coords[s].first, series.station_coords[s].second);
        out << buf << '\n';
    }
}

} // namespace hv::data
