#include "hse/mosaic.hpp"

#include <algorithm>
#include <string>

#include "hse/error.hpp"
#include "hse/layers.hpp"
#include "hse/parallel.hpp"

namespace hse {
namespace {

struct Span1D {
  int read_start = 0;
  int read_len = 0;
  int valid_start = 0;
  int valid_end = 0;
};

// Plan one axis in output pixels.
std::vector<Span1D> plan_axis(int length, int tile, int margin) {
  std::vector<Span1D> spans;
  if (length <= tile) {
    spans.push_back({0, length, 0, length});
    return spans;
  }
  const int step = tile - 2 * margin;
  spans.push_back({0, tile, 0, tile - margin});
  int start = step;
  while (start + tile < length) {
    spans.push_back({start, tile, start + margin, start + tile - margin});
    start += step;
  }
  spans.push_back({length - tile, tile, spans.back().valid_end, length});
  return spans;
}

}  // namespace

TilePlan plan_tiles(int width, int height, int tile, int margin) {
  if (width < 2 || height < 2 || width % 2 != 0 || height % 2 != 0) {
    throw InvalidInput("raster dims must be even and >= 2, got " + std::to_string(width) + "x" +
                       std::to_string(height));
  }
  if (tile < 2 || tile % 2 != 0) throw InvalidConfig("tile must be even and >= 2");
  if (margin < 0) throw InvalidConfig("margin must be >= 0");
  const int out_tile = tile / 2;
  const int out_margin = (margin + 1) / 2;
  if (out_tile - 2 * out_margin < 1) throw InvalidConfig("tile - 2 * margin must be >= 2");

  TilePlan plan;
  plan.width = width;
  plan.height = height;
  plan.tile = tile;
  plan.margin = 2 * out_margin;
  const auto rows = plan_axis(height / 2, out_tile, out_margin);
  const auto cols = plan_axis(width / 2, out_tile, out_margin);
  plan.tile_rows = static_cast<int>(rows.size());
  plan.tile_cols = static_cast<int>(cols.size());
  for (const auto& r : rows) {
    for (const auto& c : cols) {
      plan.tiles.push_back(TileWindow{2 * r.read_start, 2 * c.read_start, 2 * r.read_len, 2 * c.read_len,
                                      r.valid_start, c.valid_start, r.valid_end - r.valid_start,
                                      c.valid_end - c.valid_start});
    }
  }
  return plan;
}

RasterInfo map_info(const RasterInfo& image, DType dtype) {
  RasterInfo info;
  info.width = image.width / 2;
  info.height = image.height / 2;
  info.bands = 1;
  info.gsd = image.gsd * 2.0;
  info.origin_x = image.origin_x;
  info.origin_y = image.origin_y;
  info.scale = 1.0;
  info.dtype = dtype;
  info.nodata = dtype == DType::U8 ? static_cast<double>(kIgnore) : static_cast<double>(kProbNodata);
  return info;
}

template <typename T>
void predict_map(const Network<T>& model, RasterSource& image, const TilePlan& plan, RasterSink& hse,
                 RasterSink* prob) {
  const RasterInfo& info = image.info();
  if (info.bands != model.spec.in_channels) {
    throw ContractError("image has " + std::to_string(info.bands) + " bands, model expects " +
                        std::to_string(model.spec.in_channels));
  }
  if (info.width != plan.width || info.height != plan.height) {
    throw ContractError("tile plan was made for a different raster size");
  }
  const int out_w = info.width / 2;
  const float nodata = static_cast<float>(info.nodata);

  for (int tr = 0; tr < plan.tile_rows; ++tr) {
    const auto first = static_cast<std::size_t>(tr) * static_cast<std::size_t>(plan.tile_cols);
    const int strip_row = plan.tiles[first].out_row;
    const int strip_rows = plan.tiles[first].out_rows;
    std::vector<float> strip_prob(static_cast<std::size_t>(strip_rows) * out_w);
    std::vector<float> strip_hse(strip_prob.size());

    // Reads go through the source sequentially; the forward passes run in parallel.
    std::vector<std::vector<float>> windows;
    for (int tc = 0; tc < plan.tile_cols; ++tc) {
      const TileWindow& t = plan.tiles[first + static_cast<std::size_t>(tc)];
      windows.push_back(image.read_window(t.read_row, t.read_col, t.read_rows, t.read_cols));
    }
    parallel_for(static_cast<std::size_t>(plan.tile_cols), [&](std::size_t tc) {
      const TileWindow& t = plan.tiles[first + tc];
      const std::vector<float>& raw = windows[tc];
      const int oh = t.read_rows / 2;
      const int ow = t.read_cols / 2;
      Tensor4<T> x(1, info.bands, t.read_rows, t.read_cols);
      std::vector<bool> nodata_cell(static_cast<std::size_t>(oh) * ow, false);
      auto dst = x.data();
      const std::size_t plane = static_cast<std::size_t>(t.read_rows) * t.read_cols;
      for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == nodata) {
          dst[i] = T{0};
          const std::size_t p = i % plane;
          const std::size_t r = p / static_cast<std::size_t>(t.read_cols);
          const std::size_t c = p % static_cast<std::size_t>(t.read_cols);
          nodata_cell[(r / 2) * static_cast<std::size_t>(ow) + c / 2] = true;
        } else {
          dst[i] = static_cast<T>(raw[i]);
        }
      }
      const Tensor4<T> p = hse_probability(forward(model, x));
      const int row0 = t.out_row - t.read_row / 2;
      const int col0 = t.out_col - t.read_col / 2;
      for (int r = 0; r < t.out_rows; ++r) {
        for (int c = 0; c < t.out_cols; ++c) {
          const std::size_t src = static_cast<std::size_t>(row0 + r) * ow + static_cast<std::size_t>(col0 + c);
          const std::size_t o = static_cast<std::size_t>(t.out_row - strip_row + r) * out_w +
                                static_cast<std::size_t>(t.out_col + c);
          if (nodata_cell[src]) {
            strip_prob[o] = kProbNodata;
            strip_hse[o] = static_cast<float>(kIgnore);
          } else {
            const auto v = static_cast<float>(p(0, 0, row0 + r, col0 + c));
            strip_prob[o] = v;
            strip_hse[o] = v >= 0.5f ? 1.0f : 0.0f;
          }
        }
      }
    });
    hse.write_rows(strip_hse, strip_rows);
    if (prob) prob->write_rows(strip_prob, strip_rows);
  }
}

template <typename T>
HseMap predict_map(const Network<T>& model, const Raster& image, const TilePlan& plan) {
  MemorySource source(image);
  MemorySink hse(map_info(image, DType::U8));
  MemorySink prob(map_info(image, DType::F32));
  predict_map(model, source, plan, hse, &prob);
  return {hse.take(), prob.take()};
}

template void predict_map(const Network<double>&, RasterSource&, const TilePlan&, RasterSink&, RasterSink*);
template void predict_map(const Network<float>&, RasterSource&, const TilePlan&, RasterSink&, RasterSink*);
template HseMap predict_map(const Network<double>&, const Raster&, const TilePlan&);
template HseMap predict_map(const Network<float>&, const Raster&, const TilePlan&);

}  // namespace hse
