#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "hse/layers.hpp"
#include "hse/raster.hpp"
#include "hse/tensor.hpp"

namespace hse {

inline constexpr int kPatchSize = 128;
inline constexpr int kPatchStride = 96;

struct Sample {
  int scene = 0;
  int row = 0;  // upper-left input pixel in the source image
  int col = 0;
  std::vector<float> input;          // (bands, size, size), nodata replaced by 0
  std::vector<std::uint8_t> label;   // (size/2, size/2); label (i, j) covers input rows 2i..2i+1, cols 2j..2j+1
};

struct SceneExtent {
  int height = 0;  // input pixels
  int width = 0;
};

struct SampleSet {
  int patch_size = kPatchSize;
  int bands = 10;
  std::vector<Sample> samples;
  std::map<int, SceneExtent> scenes;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  // Append another set; scene ids must not collide.
  void append(SampleSet other);
};

// Number of patch origins along an axis of the given length.
int patch_positions(int length, int size = kPatchSize, int stride = kPatchStride);

// Cut co-registered (size x size) input patches and (size/2 x size/2) label
// patches on a regular grid. Label cells touching image nodata become
// ignore; patches whose labels are all ignore are dropped.
SampleSet extract_patches(const Raster& image, const Raster& labels, int scene_id = 0, int size = kPatchSize,
                          int stride = kPatchStride);

// Throws ContractError unless labels sit on the image grid at half resolution.
void check_registration(const RasterInfo& image, const RasterInfo& labels);

Tensor make_batch(const SampleSet& set, std::span<const std::size_t> indices);
LabelGrid make_labels(const SampleSet& set, std::span<const std::size_t> indices);

}  // namespace hse
