#pragma once

#include <optional>
#include <span>
#include <vector>

#include "hse/raster.hpp"

namespace hse {

// Single-band grid of raw values.
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  Grid() = default;
  Grid(int w, int h, double fill = 0.0)
      : width(w), height(h), values(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), fill) {}
  double& at(int row, int col) { return values[static_cast<std::size_t>(row) * width + col]; }
  double at(int row, int col) const { return values[static_cast<std::size_t>(row) * width + col]; }
  bool operator==(const Grid&) const = default;
};

// Catmull-Rom (a = -0.5) kernel weight at signed distance s.
double catmull_rom(double s);

// 2x upsampling with the Catmull-Rom kernel and half-pixel-center
// alignment: output pixel j samples source coordinate j/2 - 1/4. Past the
// raster border the source is extended linearly, so constant and linear
// fields are reproduced everywhere. With a nodata value, an output pixel
// whose containing source pixel is nodata is nodata; other nodata taps take
// the containing pixel's value.
Grid upsample_cubic(const Grid& band, std::optional<double> nodata = std::nullopt);

struct GeoRef {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double gsd = 10.0;  // of the 10 m grids
};

// Band order of the stacked 10-band input.
inline constexpr const char* kBandNames[10] = {"B2", "B3", "B4", "B8", "B5", "B6", "B7", "B8a", "B11", "B12"};

// Stack B2, B3, B4, B8 (10 m) with B5, B6, B7, B8a, B11, B12 (20 m, upsampled)
// and divide by scale, clamping reflectance to [0, 2]. Raw nodata stays
// nodata. The returned raster has scale 1.
Raster stack_and_normalize(std::span<const Grid> bands10m, std::span<const Grid> bands20m, const GeoRef& geo,
                           double scale = 10000.0, double nodata = -9999.0);

// Divide a raw reflectance raster by its scale and clamp to [0, 2]. A raster
// already at scale 1 is rejected.
Raster normalize_reflectance(const Raster& raw);

}  // namespace hse
