#include "hse/assess.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "hse/error.hpp"
#include "hse/layers.hpp"

namespace hse {

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth == 1) {
    (predicted == 1 ? tp : fn) += 1;
  } else {
    (predicted == 1 ? fp : tn) += 1;
  }
}

namespace {
double ratio(double num, double den, const char* what) {
  if (den == 0.0) throw UndefinedValue(std::string(what) + " is undefined: zero denominator");
  return num / den;
}
}  // namespace

double kappa(const ConfusionMatrix& cm) {
  const double n = static_cast<double>(cm.total());
  if (n == 0.0) throw UndefinedValue("kappa is undefined for an empty confusion matrix");
  const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp);
  const double fn = static_cast<double>(cm.fn), tn = static_cast<double>(cm.tn);
  const double po = (tp + tn) / n;
  const double pe = ((tp + fp) * (tp + fn) + (fn + tn) * (fp + tn)) / (n * n);
  if (pe == 1.0) throw UndefinedValue("kappa is undefined: expected agreement is 1");
  return (po - pe) / (1.0 - pe);
}

double average_accuracy(const ConfusionMatrix& cm) {
  const double hse = ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn), "AA");
  const double non = ratio(static_cast<double>(cm.tn), static_cast<double>(cm.tn + cm.fp), "AA");
  return 0.5 * (hse + non);
}

double commission_error(const ConfusionMatrix& cm) {
  return ratio(static_cast<double>(cm.fp), static_cast<double>(cm.tp + cm.fp), "commission error");
}

double recall(const ConfusionMatrix& cm) {
  return ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fn), "recall");
}

double precision(const ConfusionMatrix& cm) {
  return ratio(static_cast<double>(cm.tp), static_cast<double>(cm.tp + cm.fp), "precision");
}

double f1_score(const ConfusionMatrix& cm) {
  const double p = precision(cm);
  const double r = recall(cm);
  return ratio(2.0 * p * r, p + r, "F1");
}

std::vector<CheckPoint> mlgcp_grid(double x0, double y0, double x1, double y1, double spacing) {
  if (!(x1 > x0) || !(y1 > y0)) throw InvalidInput("extent must satisfy x1 > x0 and y1 > y0");
  if (!(spacing > 0.0)) throw InvalidInput("spacing must be positive");
  const auto nx = static_cast<long long>(std::floor((x1 - x0) / spacing));
  const auto ny = static_cast<long long>(std::floor((y1 - y0) / spacing));
  std::vector<CheckPoint> points;
  for (long long j = 0; j < ny; ++j) {
    for (long long i = 0; i < nx; ++i) {
      points.push_back({x0 + spacing / 2 + static_cast<double>(i) * spacing,
                        y0 + spacing / 2 + static_cast<double>(j) * spacing, 0});
    }
  }
  return points;
}

bool locate_pixel(const RasterInfo& info, double x, double y, int& row, int& col) {
  const double u = (x - info.origin_x) / info.gsd;
  const double v = (info.origin_y - y) / info.gsd;
  if (!(u >= 0.0 && u <= info.width && v >= 0.0 && v <= info.height)) return false;
  col = std::max(0, static_cast<int>(std::ceil(u)) - 1);
  row = std::max(0, static_cast<int>(std::ceil(v)) - 1);
  return info.width > 0 && info.height > 0;
}

PointAssessment confusion_from_points(const Raster& map, const std::vector<CheckPoint>& points) {
  PointAssessment out;
  std::ostringstream offenders;
  std::size_t bad = 0;
  std::vector<std::pair<int, int>> cells(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!locate_pixel(map, points[i].x, points[i].y, cells[i].first, cells[i].second)) {
      if (bad < 20) offenders << (bad ? "; " : "") << "#" << i << " (" << points[i].x << ", " << points[i].y << ")";
      ++bad;
    }
  }
  if (bad > 0) {
    throw OutOfExtent(std::to_string(bad) + " check point(s) outside the map: " + offenders.str() +
                      (bad > 20 ? "; ..." : ""));
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const float v = map.at(0, cells[i].first, cells[i].second);
    if (map.is_nodata(v) || (v != 0.0f && v != 1.0f)) {
      out.nodata_points.push_back(i);
      continue;
    }
    out.cm.add(points[i].label, v == 1.0f ? 1 : 0);
  }
  return out;
}

std::vector<CheckPoint> read_points_csv(std::istream& in) {
  std::vector<CheckPoint> points;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.find_first_not_of("0123456789+-.eE, \t") != std::string::npos) continue;
    std::istringstream row(line);
    std::string xs, ys, ls;
    if (!std::getline(row, xs, ',') || !std::getline(row, ys, ',') || !std::getline(row, ls)) {
      throw DecodeError("points CSV line " + std::to_string(line_no) + ": expected x_m,y_m,label");
    }
    CheckPoint p;
    try {
      std::size_t used = 0;
      p.x = std::stod(xs);
      p.y = std::stod(ys);
      p.label = std::stoi(ls, &used);
    } catch (const std::exception&) {
      throw DecodeError("points CSV line " + std::to_string(line_no) + ": bad number");
    }
    if (p.label != 0 && p.label != 1) {
      throw DecodeError("points CSV line " + std::to_string(line_no) + ": label must be 0 or 1");
    }
    points.push_back(p);
  }
  return points;
}

std::vector<CheckPoint> load_points_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open points file '" + path.string() + "'");
  return read_points_csv(in);
}

void write_points_csv(std::ostream& out, const std::vector<CheckPoint>& points) {
  out << "x_m,y_m,label\n";
  out.precision(17);
  for (const auto& p : points) out << p.x << ',' << p.y << ',' << p.label << '\n';
}

double building_recall(const Raster& hse, const Raster& buildings) {
  if (!hse.same_grid(buildings)) throw ContractError("HSE map and building mask are not co-registered");
  std::int64_t n0 = 0;
  std::int64_t n1 = 0;
  const auto h = hse.band(0);
  const auto b = buildings.band(0);
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (buildings.is_nodata(b[i]) || hse.is_nodata(h[i]) || b[i] != 1.0f) continue;
    ++n0;
    n1 += h[i] == 1.0f ? 1 : 0;
  }
  if (n0 == 0) throw UndefinedValue("building recall is undefined: no building pixels");
  return static_cast<double>(n1) / static_cast<double>(n0);
}

std::uint8_t agreement_code(bool ours, bool guf, bool ghsl) {
  const int count = int{ours} + int{guf} + int{ghsl};
  switch (count) {
    case 0:
      return kNoneMapped;
    case 3:
      return kAllThree;
    case 1:
      return ours ? kOnlyOurs : (guf ? kOnlyGuf : kOnlyGhsl);
    default:
      return !ours ? kAllButOurs : (!guf ? kAllButGuf : kAllButGhsl);
  }
}

Raster agreement_map(const Raster& ours, const Raster& guf, const Raster& ghsl) {
  if (!ours.same_grid(guf) || !ours.same_grid(ghsl)) throw ContractError("agreement maps need identical grids");
  RasterInfo info = ours.info();
  info.bands = 1;
  info.dtype = DType::U8;
  info.nodata = kIgnore;
  info.scale = 1.0;
  Raster out(info);
  const auto a = ours.band(0);
  const auto b = guf.band(0);
  const auto c = ghsl.band(0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (ours.is_nodata(a[i]) || guf.is_nodata(b[i]) || ghsl.is_nodata(c[i])) {
      out.data[i] = kIgnore;
      continue;
    }
    out.data[i] = agreement_code(a[i] == 1.0f, b[i] == 1.0f, c[i] == 1.0f);
  }
  return out;
}

Rgb agreement_color(std::uint8_t code) {
  switch (code) {
    case kNoneMapped:
      return {255, 255, 255};
    case kOnlyOurs:
      return {228, 26, 28};
    case kAllButOurs:
      return {55, 126, 184};
    case kOnlyGuf:
      return {77, 175, 74};
    case kAllButGuf:
      return {152, 78, 163};
    case kOnlyGhsl:
      return {255, 127, 0};
    case kAllButGhsl:
      return {166, 86, 40};
    case kAllThree:
      return {0, 0, 0};
    default:
      return {128, 128, 128};
  }
}

void write_agreement_ppm(const Raster& codes, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P6\n" << codes.width << ' ' << codes.height << "\n255\n";
  for (const float v : codes.band(0)) {
    const Rgb c = agreement_color(static_cast<std::uint8_t>(v));
    const char px[3] = {static_cast<char>(c.r), static_cast<char>(c.g), static_cast<char>(c.b)};
    out.write(px, 3);
  }
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace hse
