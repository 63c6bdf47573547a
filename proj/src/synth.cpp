#include "hse/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "hse/error.hpp"
#include "hse/layers.hpp"
#include "hse/resample.hpp"
#include "hse/rng.hpp"

namespace hse {
namespace {

enum Cover { kVegetation, kSoil, kWater, kSettlement, kRoad, kCoverCount };

// Mean TOA reflectance per cover in stacked band order
// B2, B3, B4, B8, B5, B6, B7, B8a, B11, B12.
constexpr std::array<std::array<double, 10>, kCoverCount> kSignature = {{
    {0.040, 0.070, 0.040, 0.350, 0.090, 0.250, 0.300, 0.330, 0.180, 0.090},  // vegetation
    {0.070, 0.100, 0.140, 0.220, 0.170, 0.200, 0.210, 0.230, 0.320, 0.280},  // soil
    {0.060, 0.050, 0.030, 0.020, 0.030, 0.020, 0.020, 0.020, 0.010, 0.010},  // water
    {0.150, 0.150, 0.160, 0.190, 0.170, 0.180, 0.185, 0.195, 0.220, 0.200},  // settlement
    {0.130, 0.130, 0.130, 0.150, 0.135, 0.140, 0.145, 0.150, 0.170, 0.160},  // road
}};

}  // namespace

SynthScene synth_scene(const SynthSpec& spec) {
  if (spec.width < 4 || spec.height < 4 || spec.width % 2 != 0 || spec.height % 2 != 0) {
    throw InvalidInput("synthetic scene dims must be even and >= 4");
  }
  if (!(spec.settlement_fraction > 0.0 && spec.settlement_fraction < 1.0)) {
    throw InvalidConfig("settlement_fraction must lie in (0, 1)");
  }
  Rng rng(spec.seed);
  const int W = spec.width;
  const int H = spec.height;
  const int LW = W / 2;
  const int LH = H / 2;

  // Background: Voronoi regions, each with a cover class and a brightness
  // factor.
  const int regions = 6 + rng.uniform_int(0, 4);
  struct Region {
    double y, x, brightness;
    Cover cover;
  };
  std::vector<Region> seeds;
  for (int i = 0; i < regions; ++i) {
    const double u = rng.uniform();
    const Cover cover = u < 0.5 ? kVegetation : (u < 0.8 ? kSoil : kWater);
    seeds.push_back({rng.uniform(0, H), rng.uniform(0, W), rng.uniform(-1.0, 1.0), cover});
  }
  std::vector<int> cover(static_cast<std::size_t>(W) * H);
  std::vector<double> bright(cover.size());
  for (int y = 0; y < H; ++y) {
    for (int x = 0; x < W; ++x) {
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t k = 0; k < seeds.size(); ++k) {
        const double d = (seeds[k].y - y) * (seeds[k].y - y) + (seeds[k].x - x) * (seeds[k].x - x);
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      cover[static_cast<std::size_t>(y) * W + x] = seeds[best].cover;
      bright[static_cast<std::size_t>(y) * W + x] = seeds[best].brightness;
    }
  }

  SynthScene scene;
  std::vector<std::uint8_t> label(static_cast<std::size_t>(LW) * LH, 0);
  std::size_t labelled = 0;
  const std::size_t target = static_cast<std::size_t>(std::ceil(spec.settlement_fraction * LW * LH));
  auto paint = [&](const PixelRect& r, Cover c, double brightness) {
    for (int y = r.row; y < r.row + r.rows; ++y) {
      for (int x = r.col; x < r.col + r.cols; ++x) {
        cover[static_cast<std::size_t>(y) * W + x] = c;
        bright[static_cast<std::size_t>(y) * W + x] = brightness;
        std::uint8_t& cell = label[static_cast<std::size_t>(y / 2) * LW + x / 2];
        if (cell == 0) {
          cell = 1;
          ++labelled;
        }
      }
    }
  };
  int guard = 0;
  while (labelled < target && guard++ < 100000) {
    if (rng.uniform() < 0.2) {
      PixelRect road;
      const bool horizontal = rng.uniform() < 0.5;
      const int thickness = rng.uniform_int(1, 2);
      const int along = horizontal ? W : H;
      const int len = std::max(4, static_cast<int>(along * rng.uniform(0.3, 0.9)));
      const int start = rng.uniform_int(0, along - len);
      const int across = rng.uniform_int(0, (horizontal ? H : W) - thickness);
      road = horizontal ? PixelRect{across, start, thickness, len} : PixelRect{start, across, len, thickness};
      paint(road, kRoad, rng.uniform(-0.5, 0.5));
      scene.roads.push_back(road);
    } else {
      const int rows = std::min(H, rng.uniform_int(3, 20));
      const int cols = std::min(W, rng.uniform_int(3, 20));
      PixelRect block{rng.uniform_int(0, H - rows), rng.uniform_int(0, W - cols), rows, cols};
      paint(block, kSettlement, rng.uniform(-1.0, 1.0));
      scene.blocks.push_back(block);
    }
  }

  // Reflectance at 10 m, raw DN (x10000) at each band's native resolution.
  constexpr double kScale = 10000.0;
  std::array<Grid, 4> b10;
  std::array<Grid, 6> b20;
  for (auto& g : b10) g = Grid(W, H);
  for (auto& g : b20) g = Grid(LW, LH);
  for (int band = 0; band < 10; ++band) {
    for (int y = 0; y < H; ++y) {
      for (int x = 0; x < W; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * W + x;
        const double base = kSignature[static_cast<std::size_t>(cover[i])][static_cast<std::size_t>(band)];
        const double refl = std::max(0.0, base * (1.0 + 0.1 * bright[i]) + rng.normal(0.0, spec.noise));
        if (band < 4) {
          b10[static_cast<std::size_t>(band)].at(y, x) = std::round(refl * kScale);
        } else {
          b20[static_cast<std::size_t>(band - 4)].at(y / 2, x / 2) += refl * kScale / 4.0;
        }
      }
    }
  }
  for (auto& g : b20) {
    for (double& v : g.values) v = std::round(v);
  }

  scene.image = stack_and_normalize(b10, b20, GeoRef{spec.origin_x, spec.origin_y, 10.0}, kScale);

  RasterInfo info;
  info.width = LW;
  info.height = LH;
  info.bands = 1;
  info.gsd = 20.0;
  info.origin_x = spec.origin_x;
  info.origin_y = spec.origin_y;
  info.scale = 1.0;
  info.nodata = kIgnore;
  info.dtype = DType::U8;
  scene.labels = Raster(info);
  for (std::size_t i = 0; i < label.size(); ++i) scene.labels.data[i] = label[i];
  return scene;
}

}  // namespace hse
