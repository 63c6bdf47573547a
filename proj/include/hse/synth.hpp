#pragma once

#include <cstdint>
#include <vector>

#include "hse/raster.hpp"

namespace hse {

struct SynthSpec {
  int width = 256;  // 10 m pixels; must be even
  int height = 256;
  std::uint64_t seed = 42;
  // Target share of 20 m label cells marked HSE.
  double settlement_fraction = 0.2;
  // Std of additive Gaussian reflectance noise.
  double noise = 0.01;
  double origin_x = 500000.0;
  double origin_y = 5000000.0;
};

// Axis-aligned rectangle in 10 m pixels.
struct PixelRect {
  int row = 0;
  int col = 0;
  int rows = 0;
  int cols = 0;
};

struct SynthScene {
  Raster image;   // 10 bands @10 m, normalized
  Raster labels;  // u8 @20 m, 1 where a cell touches any settlement or road pixel
  std::vector<PixelRect> blocks;
  std::vector<PixelRect> roads;
};

// Procedural scene: vegetation / soil / water background regions with
// settlement blocks and road strips, each with its own spectral signature.
// The 20 m bands are synthesized at 20 m and brought to 10 m through
// stack_and_normalize, like real imagery.
SynthScene synth_scene(const SynthSpec& spec);

}  // namespace hse
