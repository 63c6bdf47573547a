#include "hse/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hse/error.hpp"

namespace hse {
namespace {

constexpr double kMaxReflectance = 2.0;

// Weights for taps base-1 .. base+2 at fractional offset t in [0, 1).
void cubic_weights(double t, double w[4]) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  w[0] = 0.5 * (-t3 + 2.0 * t2 - t);
  w[1] = 0.5 * (3.0 * t3 - 5.0 * t2 + 2.0);
  w[2] = 0.5 * (-3.0 * t3 + 4.0 * t2 + t);
  w[3] = 0.5 * (t3 - t2);
}

// Upsample one line of n samples (stride apart) into 2n outputs.
void upsample_line(const double* src, std::size_t stride, int n, double* dst, std::size_t dst_stride,
                   const std::optional<double>& nodata) {
  auto is_nd = [&](double v) { return nodata && v == *nodata; };
  for (int j = 0; j < 2 * n; ++j) {
    const int center = j / 2;
    const double c = src[center * stride];
    if (is_nd(c)) {
      dst[j * dst_stride] = *nodata;
      continue;
    }
    auto value = [&](int i) {
      const double v = src[static_cast<std::size_t>(i) * stride];
      return is_nd(v) ? c : v;
    };
    auto tap = [&](int i) {
      if (i < 0) return value(0) + i * (value(1) - value(0));
      if (i >= n) return value(n - 1) + (i - n + 1) * (value(n - 1) - value(n - 2));
      return value(i);
    };
    // Even outputs sit 1/4 pixel before their source center, odd ones 1/4
    // after it.
    const int base = (j % 2 == 0) ? center - 1 : center;
    const double t = (j % 2 == 0) ? 0.75 : 0.25;
    double w[4];
    cubic_weights(t, w);
    dst[j * dst_stride] = w[0] * tap(base - 1) + w[1] * tap(base) + w[2] * tap(base + 1) + w[3] * tap(base + 2);
  }
}

}  // namespace

double catmull_rom(double s) {
  const double x = std::abs(s);
  if (x <= 1.0) return 1.5 * x * x * x - 2.5 * x * x + 1.0;
  if (x < 2.0) return -0.5 * x * x * x + 2.5 * x * x - 4.0 * x + 2.0;
  return 0.0;
}

Grid upsample_cubic(const Grid& band, std::optional<double> nodata) {
  if (band.width < 2 || band.height < 2) {
    throw InvalidInput("upsample_cubic needs at least 2x2 input, got " + std::to_string(band.width) + "x" +
                       std::to_string(band.height));
  }
  if (band.values.size() != static_cast<std::size_t>(band.width) * band.height) {
    throw ContractError("grid storage does not match its dims");
  }
  Grid wide(2 * band.width, band.height);
  for (int r = 0; r < band.height; ++r) {
    upsample_line(&band.values[static_cast<std::size_t>(r) * band.width], 1, band.width,
                  &wide.values[static_cast<std::size_t>(r) * wide.width], 1, nodata);
  }
  Grid out(2 * band.width, 2 * band.height);
  for (int c = 0; c < wide.width; ++c) {
    upsample_line(&wide.values[static_cast<std::size_t>(c)], static_cast<std::size_t>(wide.width), band.height,
                  &out.values[static_cast<std::size_t>(c)], static_cast<std::size_t>(out.width), nodata);
  }
  return out;
}

Raster stack_and_normalize(std::span<const Grid> bands10m, std::span<const Grid> bands20m, const GeoRef& geo,
                           double scale, double nodata) {
  if (bands10m.size() != 4 || bands20m.size() != 6) {
    throw ContractError("expected 4 bands at 10 m and 6 at 20 m");
  }
  if (!(scale > 0.0)) throw InvalidInput("reflectance scale must be positive");
  const int width = bands10m[0].width;
  const int height = bands10m[0].height;
  for (const auto& g : bands10m) {
    if (g.width != width || g.height != height) throw ContractError("10 m bands differ in size");
  }
  for (const auto& g : bands20m) {
    if (2 * g.width != width || 2 * g.height != height) {
      throw ContractError("20 m band is " + std::to_string(g.width) + "x" + std::to_string(g.height) +
                          ", expected half of " + std::to_string(width) + "x" + std::to_string(height));
    }
  }
  RasterInfo info;
  info.width = width;
  info.height = height;
  info.bands = 10;
  info.gsd = geo.gsd;
  info.origin_x = geo.origin_x;
  info.origin_y = geo.origin_y;
  info.scale = 1.0;
  info.nodata = nodata;
  info.dtype = DType::F32;
  Raster out(info);
  auto put = [&](int b, const Grid& g) {
    auto dst = out.band(b);
    for (std::size_t i = 0; i < g.values.size(); ++i) {
      const double v = g.values[i];
      dst[i] = v == nodata ? static_cast<float>(nodata)
                           : static_cast<float>(std::clamp(v / scale, 0.0, kMaxReflectance));
    }
  };
  for (int b = 0; b < 4; ++b) put(b, bands10m[static_cast<std::size_t>(b)]);
  for (int b = 0; b < 6; ++b) put(4 + b, upsample_cubic(bands20m[static_cast<std::size_t>(b)], nodata));
  return out;
}

Raster normalize_reflectance(const Raster& raw) {
  if (raw.scale == 1.0) throw InvalidInput("raster is already normalized (scale=1)");
  if (!(raw.scale > 0.0)) throw InvalidInput("reflectance scale must be positive");
  if (raw.dtype != DType::F32) throw ContractError("reflectance rasters are f32");
  Raster out = raw;
  out.scale = 1.0;
  for (float& v : out.data) {
    if (raw.is_nodata(v)) continue;
    v = static_cast<float>(std::clamp(static_cast<double>(v) / raw.scale, 0.0, kMaxReflectance));
  }
  return out;
}

}  // namespace hse
