#pragma once

#include <vector>

#include "hse/net.hpp"
#include "hse/raster.hpp"

namespace hse {

inline constexpr int kDefaultTile = 128;
inline constexpr int kDefaultMargin = 16;

struct TileWindow {
  // Input window, in input pixels.
  int read_row = 0;
  int read_col = 0;
  int read_rows = 0;
  int read_cols = 0;
  // Output window this tile is trusted for, in absolute output pixels.
  int out_row = 0;
  int out_col = 0;
  int out_rows = 0;
  int out_cols = 0;
};

// Tiles in row-major order, tile_rows x tile_cols of them. Interior tile
// edges drop `margin` input pixels (rounded up to even); tiles on the
// raster border keep their outer edge. The valid output windows partition
// the output grid.
struct TilePlan {
  int width = 0;  // input pixels
  int height = 0;
  int tile = kDefaultTile;
  int margin = kDefaultMargin;
  int tile_rows = 0;
  int tile_cols = 0;
  std::vector<TileWindow> tiles;
};

// A raster smaller than the tile gets a single tile covering it.
TilePlan plan_tiles(int width, int height, int tile = kDefaultTile, int margin = kDefaultMargin);

inline constexpr float kProbNodata = -1.0f;

// Output grid for a map of the given input image: half resolution, same origin.
RasterInfo map_info(const RasterInfo& image, DType dtype);

struct HseMap {
  Raster hse;   // u8 {0, 1}, 255 where any input pixel of the cell is nodata
  Raster prob;  // f32 HSE probability, kProbNodata on nodata cells
};

// Streamed inference: tile rows are processed top to bottom and each
// finished strip of output rows is pushed to the sinks. hse = prob >= 0.5.
template <typename T>
void predict_map(const Network<T>& model, RasterSource& image, const TilePlan& plan, RasterSink& hse,
                 RasterSink* prob = nullptr);

template <typename T>
HseMap predict_map(const Network<T>& model, const Raster& image, const TilePlan& plan);

}  // namespace hse
