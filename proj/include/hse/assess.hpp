#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "hse/raster.hpp"

namespace hse {

struct ConfusionMatrix {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tn = 0;

  std::int64_t total() const { return tp + fp + fn + tn; }
  // Count one (truth, predicted) pair of binary labels.
  void add(int truth, int predicted);
  bool operator==(const ConfusionMatrix&) const = default;
};

// Each metric throws UndefinedValue when its denominator vanishes.
double kappa(const ConfusionMatrix& cm);
double average_accuracy(const ConfusionMatrix& cm);  // mean of the two class recalls
double commission_error(const ConfusionMatrix& cm);  // fp / (tp + fp)
double recall(const ConfusionMatrix& cm);
double precision(const ConfusionMatrix& cm);
double f1_score(const ConfusionMatrix& cm);

struct CheckPoint {
  double x = 0.0;  // map meters
  double y = 0.0;
  int label = 0;
};

// Cell centers of a regular grid: (x0 + spacing/2 + i*spacing,
// y0 + spacing/2 + j*spacing) for every full spacing cell inside the extent.
std::vector<CheckPoint> mlgcp_grid(double x0, double y0, double x1, double y1, double spacing = 2000.0);

// Pixel containing a map coordinate. Points on a shared pixel edge belong
// to the pixel with the smaller row/col index. Returns false outside the
// raster.
bool locate_pixel(const RasterInfo& info, double x, double y, int& row, int& col);

struct PointAssessment {
  ConfusionMatrix cm;
  std::vector<std::size_t> nodata_points;  // indices of points skipped on nodata cells
};

// Throws OutOfExtent listing every point outside the map.
PointAssessment confusion_from_points(const Raster& map, const std::vector<CheckPoint>& points);

// "x_m,y_m,label" rows; a header line is optional.
std::vector<CheckPoint> read_points_csv(std::istream& in);
std::vector<CheckPoint> load_points_csv(const std::filesystem::path& path);
void write_points_csv(std::ostream& out, const std::vector<CheckPoint>& points);

// Share of building pixels (N0) that are also mapped as HSE (N1), over
// cells where neither raster is nodata.
double building_recall(const Raster& hse, const Raster& buildings);

// Per-cell comparison of three binary maps:
//   0 none, 1 only ours, 2 only GUF, 3 only GHSL, 4 all three,
//   5 all but ours, 6 all but GUF, 7 all but GHSL, 255 nodata in any input.
enum AgreementCode : std::uint8_t {
  kNoneMapped = 0,
  kOnlyOurs = 1,
  kOnlyGuf = 2,
  kOnlyGhsl = 3,
  kAllThree = 4,
  kAllButOurs = 5,
  kAllButGuf = 6,
  kAllButGhsl = 7,
};

std::uint8_t agreement_code(bool ours, bool guf, bool ghsl);
Raster agreement_map(const Raster& ours, const Raster& guf, const Raster& ghsl);

// Color for each agreement code, listed in legend order (only ours, all but
// ours, only GUF, all but GUF, only GHSL, all but GHSL, all three) with
// white for none and gray for nodata.
struct Rgb {
  std::uint8_t r, g, b;
};
Rgb agreement_color(std::uint8_t code);
void write_agreement_ppm(const Raster& codes, const std::filesystem::path& path);

}  // namespace hse
