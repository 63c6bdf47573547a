#include "hse/patches.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hse/error.hpp"

namespace hse {

void SampleSet::append(SampleSet other) {
  if (!samples.empty() && !other.samples.empty() && (other.patch_size != patch_size || other.bands != bands)) {
    throw ContractError("cannot merge sample sets with different patch geometry");
  }
  if (samples.empty()) {
    patch_size = other.patch_size;
    bands = other.bands;
  }
  for (const auto& [id, extent] : other.scenes) {
    if (!scenes.emplace(id, extent).second) throw ContractError("duplicate scene id " + std::to_string(id));
  }
  for (auto& s : other.samples) samples.push_back(std::move(s));
}

int patch_positions(int length, int size, int stride) {
  if (length < size) return 0;
  return (length - size) / stride + 1;
}

void check_registration(const RasterInfo& image, const RasterInfo& labels) {
  const double tol = 1e-6 * std::max(1.0, image.gsd);
  const bool ok = labels.width * 2 == image.width && labels.height * 2 == image.height &&
                  std::abs(labels.gsd - 2.0 * image.gsd) <= tol &&
                  std::abs(labels.origin_x - image.origin_x) <= tol &&
                  std::abs(labels.origin_y - image.origin_y) <= tol;
  if (!ok) {
    throw ContractError("label grid " + std::to_string(labels.width) + "x" + std::to_string(labels.height) +
                        " @" + std::to_string(labels.gsd) + " m is not registered to image grid " +
                        std::to_string(image.width) + "x" + std::to_string(image.height) + " @" +
                        std::to_string(image.gsd) + " m");
  }
}

SampleSet extract_patches(const Raster& image, const Raster& labels, int scene_id, int size, int stride) {
  if (size < 2 || size % 2 != 0) throw InvalidInput("patch size must be even and >= 2");
  if (stride < 1) throw InvalidInput("patch stride must be >= 1");
  if (labels.bands != 1) throw ContractError("label raster must have one band");
  if (image.scale != 1.0) throw ContractError("image must be normalized before patch extraction");
  check_registration(image, labels);

  SampleSet set;
  set.patch_size = size;
  set.bands = image.bands;
  set.scenes[scene_id] = SceneExtent{image.height, image.width};
  const int half = size / 2;
  const int rows = patch_positions(image.height, size, stride);
  const int cols = patch_positions(image.width, size, stride);
  for (int pr = 0; pr < rows; ++pr) {
    for (int pc = 0; pc < cols; ++pc) {
      Sample s;
      s.scene = scene_id;
      s.row = pr * stride;
      s.col = pc * stride;
      s.input.resize(static_cast<std::size_t>(image.bands) * size * size);
      s.label.resize(static_cast<std::size_t>(half) * half);
      std::vector<bool> nodata_cell(s.label.size(), false);
      std::size_t o = 0;
      for (int b = 0; b < image.bands; ++b) {
        for (int y = 0; y < size; ++y) {
          for (int x = 0; x < size; ++x, ++o) {
            const float v = image.at(b, s.row + y, s.col + x);
            if (image.is_nodata(v)) {
              s.input[o] = 0.0f;
              nodata_cell[static_cast<std::size_t>(y / 2) * half + x / 2] = true;
            } else {
              s.input[o] = v;
            }
          }
        }
      }
      bool any_label = false;
      for (int i = 0; i < half; ++i) {
        for (int j = 0; j < half; ++j) {
          const std::size_t k = static_cast<std::size_t>(i) * half + j;
          const float v = labels.at(0, s.row / 2 + i, s.col / 2 + j);
          std::uint8_t code = kIgnore;
          if (!nodata_cell[k] && !labels.is_nodata(v) && (v == 0.0f || v == 1.0f)) code = static_cast<std::uint8_t>(v);
          s.label[k] = code;
          any_label = any_label || code != kIgnore;
        }
      }
      if (any_label) set.samples.push_back(std::move(s));
    }
  }
  return set;
}

Tensor make_batch(const SampleSet& set, std::span<const std::size_t> indices) {
  const int size = set.patch_size;
  Tensor batch(static_cast<int>(indices.size()), set.bands, size, size);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& src = set.samples.at(indices[i]).input;
    auto dst = batch.sample(static_cast<int>(i));
    if (src.size() != dst.size()) throw ContractError("sample input has the wrong size");
    std::copy(src.begin(), src.end(), dst.begin());
  }
  return batch;
}

LabelGrid make_labels(const SampleSet& set, std::span<const std::size_t> indices) {
  const int half = set.patch_size / 2;
  LabelGrid grid(static_cast<int>(indices.size()), half, half);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    const auto& src = set.samples.at(indices[i]).label;
    std::copy(src.begin(), src.end(), grid.codes.begin() + static_cast<std::ptrdiff_t>(i * src.size()));
  }
  return grid;
}

}  // namespace hse
