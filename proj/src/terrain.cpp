#include "hv/terrain.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

namespace hv::terrain {

namespace {

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

/// Fills nodata cells from the nearest valid cell. Searches outward in
/// Chebyshev rings; within the best ring picks the smallest Euclidean
/// distance, ties by smaller row then smaller column.
void fill_nodata(Matrix& h, double nodata) {
    const int H = h.rows, W = h.cols;
    auto is_nodata = [&](int r, int c) { return h.at(r, c) == nodata; };
    bool any_valid = false;
    bool any_nodata = false;
    for (int r = 0; r < H && !(any_valid && any_nodata); ++r)
        for (int c = 0; c < W; ++c)
            (is_nodata(r, c) ? any_nodata : any_valid) = true;
    if (!any_nodata) return;
    if (!any_valid) throw DataError("terrain: raster contains only nodata cells");

    Matrix filled = h;
    for (int r = 0; r < H; ++r) {
        for (int c = 0; c < W; ++c) {
            if (!is_nodata(r, c)) continue;
            long best_d2 = -1;
            int best_r = -1, best_c = -1;
            const int max_ring = std::max({r, H - 1 - r, c, W - 1 - c});
            for (int ring = 1; ring <= max_ring; ++ring) {
                // Once a candidate exists, rings beyond sqrt(best) cannot win.
                if (best_d2 >= 0 && static_cast<long>(ring) * ring > best_d2) break;
                for (int rr = std::max(0, r - ring); rr <= std::min(H - 1, r + ring); ++rr) {
                    const bool edge_row = (rr == r - ring || rr == r + ring);
                    for (int cc = std::max(0, c - ring); cc <= std::min(W - 1, c + ring); ++cc) {
                        if (!edge_row && cc != c - ring && cc != c + ring) continue;
                        if (is_nodata(rr, cc)) continue;
                        const long d2 = static_cast<long>(rr - r) * (rr - r) +
                                        static_cast<long>(cc - c) * (cc - c);
                        if (best_d2 < 0 || d2 < best_d2 ||
                            (d2 == best_d2 && (rr < best_r || (rr == best_r && cc < best_c)))) {
                            best_d2 = d2;
                            best_r = rr;
                            best_c = cc;
                        }
                    }
                }
            }
            filled.at(r, c) = h.at(best_r, best_c);
        }
    }
    h = std::move(filled);
}

} // namespace

ElevationRaster load_raster(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("terrain: cannot open raster file: " + path);

    long ncols = -1, nrows = -1;
    double xll = 0.0, yll = 0.0, cellsize = -1.0, nodata = -9999.0;
    bool have_nodata = false;
    bool seen[4] = {false, false, false, false}; // ncols,nrows,xll,yll + cellsize tracked below
    bool have_cellsize = false;
    for (int i = 0; i < 6; ++i) {
        std::string key;
        double val;
        if (!(in >> key >> val))
            throw DataError("terrain: truncated header in " + path);
        const std::string k = lower(key);
        if (k == "ncols") { ncols = static_cast<long>(val); seen[0] = true; }
        else if (k == "nrows") { nrows = static_cast<long>(val); seen[1] = true; }
        else if (k == "xllcorner") { xll = val; seen[2] = true; }
        else if (k == "yllcorner") { yll = val; seen[3] = true; }
        else if (k == "cellsize") { cellsize = val; have_cellsize = true; }
        else if (k == "nodata_value") { nodata = val; have_nodata = true; }
        else throw DataError("terrain: unknown header key '" + key + "' in " + path);
    }
    if (!(seen[0] && seen[1] && seen[2] && seen[3] && have_cellsize && have_nodata))
        throw DataError("terrain: header must define ncols, nrows, xllcorner, yllcorner, "
                        "cellsize, NODATA_value");
    if (ncols <= 0 || nrows <= 0)
        throw DataError("terrain: ncols/nrows must be positive");
    if (cellsize <= 0.0) throw DataError("terrain: cellsize must be positive");

    ElevationRaster r;
    r.heights = Matrix(static_cast<int>(nrows), static_cast<int>(ncols));
    r.cell_size = cellsize;
    r.origin = {xll, yll};
    r.nodata_value = nodata;
    for (long i = 0; i < nrows; ++i) {
        for (long j = 0; j < ncols; ++j) {
            double v;
            if (!(in >> v))
                throw DataError("terrain: raster row " + std::to_string(i + 1) + " has fewer "
                                "than ncols=" + std::to_string(ncols) + " values");
            r.heights.at(static_cast<int>(i), static_cast<int>(j)) = v;
        }
    }
    double extra;
    if (in >> extra)
        throw DataError("terrain: raster has more values than nrows*ncols");
    fill_nodata(r.heights, nodata);
    return r;
}

ElevationRaster downsample(const ElevationRaster& raster, int factor) {
    if (factor < 1) throw DataError("terrain: downsample factor must be >= 1");
    if (factor == 1) return raster;
    const int H = raster.height(), W = raster.width();
    if (factor > H || factor > W)
        throw DataError("terrain: downsample factor " + std::to_string(factor) +
                        " exceeds raster dimensions " + std::to_string(H) + "x" +
                        std::to_string(W));
    const int oh = (H + factor - 1) / factor;
    const int ow = (W + factor - 1) / factor;
    ElevationRaster out;
    out.cell_size = raster.cell_size * factor;
    out.origin = raster.origin;
    out.nodata_value = raster.nodata_value;
    out.heights = Matrix(oh, ow);
    for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
            double sum = 0.0;
            int cnt = 0;
            for (int r = i * factor; r < std::min(H, (i + 1) * factor); ++r)
                for (int c = j * factor; c < std::min(W, (j + 1) * factor); ++c) {
                    sum += raster.heights.at(r, c);
                    ++cnt;
                }
            out.heights.at(i, j) = sum / cnt;
        }
    }
    return out;
}

PatchGrid patchify(const ElevationRaster& raster) {
    const int H = raster.height(), W = raster.width();
    if (H == 0 || W == 0) throw DataError("terrain: cannot patchify an empty raster");
    PatchGrid g;
    g.grid_rows = (H + kPatchSize - 1) / kPatchSize;
    g.grid_cols = (W + kPatchSize - 1) / kPatchSize;
    g.patches.reserve(static_cast<size_t>(g.grid_rows) * g.grid_cols);
    for (int pr = 0; pr < g.grid_rows; ++pr) {
        for (int pc = 0; pc < g.grid_cols; ++pc) {
            Matrix tile(kPatchSize, kPatchSize);
            for (int r = 0; r < kPatchSize; ++r) {
                // Replicate the last row/column beyond the raster edge.
                const int sr = std::min(pr * kPatchSize + r, H - 1);
                for (int c = 0; c < kPatchSize; ++c) {
                    const int sc = std::min(pc * kPatchSize + c, W - 1);
                    tile.at(r, c) = raster.heights.at(sr, sc);
                }
            }
            g.patches.push_back(std::move(tile));
        }
    }
    return g;
}

int station_patch_index(const ElevationRaster& raster, const PatchGrid& grid,
                        std::pair<double, double> coord) {
    const double fx = (coord.first - raster.origin.first) / raster.cell_size;
    const double fy = (coord.second - raster.origin.second) / raster.cell_size;
    const int col = static_cast<int>(std::floor(fx));
    const int row = static_cast<int>(std::floor(fy));
    if (row < 0 || row >= raster.height() || col < 0 || col >= raster.width())
        throw DataError("terrain: coordinate (" + std::to_string(coord.first) + ", " +
                        std::to_string(coord.second) + ") lies outside the raster extent");
    const int pr = row / grid.patch_size;
    const int pc = col / grid.patch_size;
    return pr * grid.grid_cols + pc;
}

void write_raster(const ElevationRaster& raster, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("terrain: cannot write raster file: " + path);
    char buf[64];
    out << "ncols " << raster.width() << '\n';
    out << "nrows " << raster.height() << '\n';
    std::snprintf(buf, sizeof buf, "%.9g", raster.origin.first);
    out << "xllcorner " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.9g", raster.origin.second);
    out << "yllcorner " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.9g", raster.cell_size);
    out << "cellsize " << buf << '\n';
    std::snprintf(buf, sizeof buf, "%.9g", raster.nodata_value);
    out << "NODATA_value " << buf << '\n';
    for (int r = 0; r < raster.height(); ++r) {
        for (int c = 0; c < raster.width(); ++c) {
            std::snprintf(buf, sizeof buf, "%.9g", raster.heights.at(r, c));
            out << (c ? " " : "") << buf;
        }
        out << '\n';
    }
}

} // namespace hv::terrain
