#pragma once

#include <string>
#include <utility>
#include <vector>

#include "hv/matrix.hpp"

namespace hv::terrain {

/// Gridded terrain heights. Grid frame: origin is the corner of cell
/// (row 0, col 0); x grows with the column index, y grows with the row
/// index; row 0 is the first (northern) data row of the file.
struct ElevationRaster {
    Matrix heights; // H x W, meters above mean sea level
    double cell_size = 1.0;
    std::pair<double, double> origin{0.0, 0.0};
    double nodata_value = -9999.0;

    int height() const { return heights.rows; }
    int width() const { return heights.cols; }
};

constexpr int kPatchSize = 16;

/// Non-overlapping 16x16 tiles covering the raster, row-major; the right
/// and bottom edges are padded by replicating the last column/row.
struct PatchGrid {
    std::vector<Matrix> patches;
    int grid_rows = 0;
    int grid_cols = 0;
    int patch_size = kPatchSize;

    int count() const { return grid_rows * grid_cols; }
};

/// Parses the six-line ASCII grid header (ncols, nrows, xllcorner,
/// yllcorner, cellsize, NODATA_value) plus nrows rows of heights, north
/// row first. Nodata cells are filled from the nearest valid cell
/// (Euclidean; ties broken by smaller row, then smaller column).
ElevationRaster load_raster(const std::string& path);

/// Block-mean pooling over factor x factor blocks; edge blocks average
/// over the cells present. cell_size scales by factor, origin unchanged.
ElevationRaster downsample(const ElevationRaster& raster, int factor);

PatchGrid patchify(const ElevationRaster& raster);

/// Row-major index of the patch containing the cell under (x, y).
int station_patch_index(const ElevationRaster& raster, const PatchGrid& grid,
                        std::pair<double, double> coord);

void write_raster(const ElevationRaster& raster, const std::string& path);

} // namespace hv::terrain
