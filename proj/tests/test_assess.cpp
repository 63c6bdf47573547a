#include <gtest/gtest.h>

#include <json.hpp>
#include <sstream>

#include "hse/assess.hpp"
#include "hse/error.hpp"
#include "hse/report.hpp"
#include "hse/rng.hpp"
#include "support.hpp"

using namespace hse;

namespace {

// Metrics recomputed from raw (truth, predicted) pairs.
struct PairOracle {
  std::vector<std::pair<int, int>> pairs;

  double count(int t, int p) const {
    double n = 0;
    for (const auto& [a, b] : pairs) n += (a == t && b == p) ? 1 : 0;
    return n;
  }
  double kappa() const {
    const double n = static_cast<double>(pairs.size());
    double agree = 0, chance = 0;
    for (int k = 0; k < 2; ++k) {
      double truth_k = 0, pred_k = 0;
      for (const auto& [a, b] : pairs) {
        truth_k += a == k;
        pred_k += b == k;
      }
      agree += count(k, k);
      chance += truth_k * pred_k / (n * n);
    }
    return (agree / n - chance) / (1 - chance);
  }
  double aa() const {
    return 0.5 * (count(1, 1) / (count(1, 1) + count(1, 0)) + count(0, 0) / (count(0, 0) + count(0, 1)));
  }
};

ConfusionMatrix matrix(std::int64_t tp, std::int64_t fp, std::int64_t fn, std::int64_t tn) {
  ConfusionMatrix cm;
  cm.tp = tp;
  cm.fp = fp;
  cm.fn = fn;
  cm.tn = tn;
  return cm;
}

Raster binary_map(int width, int height, std::vector<float> values, double gsd = 20.0) {
  RasterInfo info;
  info.width = width;
  info.height = height;
  info.gsd = gsd;
  info.origin_x = 1000;
  info.origin_y = 2000;
  info.dtype = DType::U8;
  info.nodata = 255;
  Raster r(info);
  r.data = std::move(values);
  return r;
}

}  // namespace

TEST(Metrics, HandComputedFixture) {
  const ConfusionMatrix cm = matrix(50, 10, 5, 100);
  EXPECT_NEAR(kappa(cm), 0.8, 1e-12);
  EXPECT_NEAR(recall(cm), 50.0 / 55.0, 1e-12);
  EXPECT_NEAR(commission_error(cm), 10.0 / 60.0, 1e-12);
  EXPECT_NEAR(precision(cm), 50.0 / 60.0, 1e-12);
  EXPECT_NEAR(f1_score(cm), 100.0 / 115.0, 1e-12);
  EXPECT_NEAR(average_accuracy(cm), 0.5 * (50.0 / 55.0 + 100.0 / 110.0), 1e-12);
  EXPECT_NEAR(recall(cm), 0.9091, 5e-5);
  EXPECT_NEAR(commission_error(cm), 0.1667, 5e-5);
  EXPECT_NEAR(f1_score(cm), 0.8696, 5e-5);
}

TEST(Metrics, AgreeWithPairwiseOracleOnRandomMatrices) {
  Rng rng(1);
  for (int i = 0; i < 100; ++i) {
    PairOracle o;
    ConfusionMatrix cm;
    const int n = rng.uniform_int(20, 300);
    const double base = rng.uniform(0.1, 0.9), skill = rng.uniform(0.3, 0.95);
    for (int k = 0; k < n; ++k) {
      const int t = rng.uniform() < base ? 1 : 0;
      const int p = rng.uniform() < skill ? t : 1 - t;
      o.pairs.emplace_back(t, p);
      cm.add(t, p);
    }
    EXPECT_EQ(cm.total(), n);
    EXPECT_EQ(static_cast<double>(cm.tp), o.count(1, 1));
    EXPECT_EQ(static_cast<double>(cm.fn), o.count(1, 0));
    try {
      EXPECT_NEAR(kappa(cm), o.kappa(), 1e-12);
      EXPECT_NEAR(average_accuracy(cm), o.aa(), 1e-12);
      const double k = kappa(cm);
      EXPECT_GE(k, -1.0);
      EXPECT_LE(k, 1.0);
    } catch (const UndefinedValue&) {
    }
  }
}

TEST(Metrics, PerfectAndSymmetricCases) {
  EXPECT_EQ(kappa(matrix(30, 0, 0, 70)), 1.0);
  EXPECT_EQ(average_accuracy(matrix(30, 0, 0, 70)), 1.0);
  // Swapping the class roles leaves AA and kappa unchanged.
  const ConfusionMatrix a = matrix(40, 7, 3, 90), swapped = matrix(90, 3, 7, 40);
  EXPECT_NEAR(average_accuracy(a), average_accuracy(swapped), 1e-15);
  EXPECT_NEAR(kappa(a), kappa(swapped), 1e-15);
}

TEST(Metrics, UndefinedDenominatorsThrow) {
  EXPECT_THROW(kappa(ConfusionMatrix{}), UndefinedValue);
  EXPECT_THROW(kappa(matrix(10, 0, 0, 0)), UndefinedValue);
  EXPECT_THROW(recall(matrix(0, 5, 0, 5)), UndefinedValue);
  EXPECT_THROW(commission_error(matrix(0, 0, 5, 5)), UndefinedValue);
  EXPECT_THROW(average_accuracy(matrix(5, 0, 5, 0)), UndefinedValue);
  EXPECT_THROW(f1_score(matrix(0, 3, 3, 5)), UndefinedValue);
}

TEST(MlgcpGrid, CountsFullCells) {
  const auto pts = mlgcp_grid(0, 0, 4000, 4000);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts[0].x, 1000.0);
  EXPECT_EQ(pts[0].y, 1000.0);
  EXPECT_EQ(pts[3].x, 3000.0);
  EXPECT_EQ(pts[3].y, 3000.0);
  EXPECT_TRUE(mlgcp_grid(0, 0, 1999, 8000).empty());
  EXPECT_EQ(mlgcp_grid(100, 200, 10100, 6300).size(), 15u);
  EXPECT_THROW(mlgcp_grid(0, 0, 0, 10), InvalidInput);
}

TEST(LocatePixel, EdgesBelongToLowerIndex) {
  RasterInfo info;
  info.width = 4;
  info.height = 3;
  info.gsd = 20;
  info.origin_x = 1000;
  info.origin_y = 2000;
  int r = -1, c = -1;
  ASSERT_TRUE(locate_pixel(info, 1010, 1990, r, c));
  EXPECT_EQ(r, 0);
  EXPECT_EQ(c, 0);
  ASSERT_TRUE(locate_pixel(info, 1020, 1980, r, c));
  EXPECT_EQ(r, 0);
  EXPECT_EQ(c, 0);
  ASSERT_TRUE(locate_pixel(info, 1020.001, 1979.999, r, c));
  EXPECT_EQ(r, 1);
  EXPECT_EQ(c, 1);
  ASSERT_TRUE(locate_pixel(info, 1000, 2000, r, c));
  EXPECT_EQ(r, 0);
  EXPECT_EQ(c, 0);
  ASSERT_TRUE(locate_pixel(info, 1080, 1940, r, c));
  EXPECT_EQ(r, 2);
  EXPECT_EQ(c, 3);
  EXPECT_FALSE(locate_pixel(info, 999.9, 1990, r, c));
  EXPECT_FALSE(locate_pixel(info, 1010, 1939.9, r, c));
}

TEST(PointAssessment, RecomputesFromPointList) {
  // 3x2 map, codes per cell; one nodata cell.
  const Raster map = binary_map(3, 2, {1, 0, 255, 0, 1, 1});
  std::vector<CheckPoint> pts;
  Rng rng(3);
  PairOracle o;
  std::size_t skipped = 0;
  for (int i = 0; i < 200; ++i) {
    const int r = rng.uniform_int(0, 1), c = rng.uniform_int(0, 2), label = rng.uniform_int(0, 1);
    pts.push_back({1000 + 20.0 * c + rng.uniform(1, 19), 2000 - 20.0 * r - rng.uniform(1, 19), label});
    const float v = map.at(0, r, c);
    if (v == 255.0f) {
      ++skipped;
    } else {
      o.pairs.emplace_back(label, static_cast<int>(v));
    }
  }
  const PointAssessment a = confusion_from_points(map, pts);
  EXPECT_EQ(a.nodata_points.size(), skipped);
  EXPECT_EQ(static_cast<double>(a.cm.tp), o.count(1, 1));
  EXPECT_EQ(static_cast<double>(a.cm.fp), o.count(0, 1));
  EXPECT_EQ(static_cast<double>(a.cm.fn), o.count(1, 0));
  EXPECT_EQ(static_cast<double>(a.cm.tn), o.count(0, 0));
  EXPECT_NEAR(kappa(a.cm), o.kappa(), 1e-12);
}

TEST(PointAssessment, OutOfExtentListsOffenders) {
  const Raster map = binary_map(2, 2, {1, 0, 0, 1});
  try {
    confusion_from_points(map, {{1010, 1990, 1}, {5000, 1990, 0}, {1010, 0, 1}});
    FAIL() << "expected OutOfExtent";
  } catch (const OutOfExtent& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2 check point"), std::string::npos) << msg;
    EXPECT_NE(msg.find("#1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("#2"), std::string::npos) << msg;
  }
}

TEST(PointsCsv, RoundTripAndErrors) {
  const std::vector<CheckPoint> pts = {{500010.25, 4999990.5, 1}, {1.0 / 3.0, -2, 0}};
  std::stringstream buf;
  write_points_csv(buf, pts);
  const auto back = read_points_csv(buf);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].x, pts[0].x);
  EXPECT_EQ(back[1].x, pts[1].x);
  EXPECT_EQ(back[1].label, 0);
  std::istringstream no_header("1,2,1\n3,4,0\r\n");
  EXPECT_EQ(read_points_csv(no_header).size(), 2u);
  std::istringstream bad_label("x,y,label\n1,2,3\n");
  EXPECT_THROW(read_points_csv(bad_label), DecodeError);
  std::istringstream short_row("x,y,label\n1,2\n");
  EXPECT_THROW(read_points_csv(short_row), DecodeError);
  EXPECT_THROW(load_points_csv("/nonexistent/p.csv"), IoError);
}

TEST(BuildingRecall, ShareOfBuildingsMapped) {
  const Raster buildings = binary_map(4, 1, {1, 1, 1, 0}, 10);
  EXPECT_NEAR(building_recall(binary_map(4, 1, {1, 0, 1, 1}, 10), buildings), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(building_recall(binary_map(4, 1, {1, 255, 0, 1}, 10), buildings), 0.5, 1e-15);
  EXPECT_THROW(building_recall(binary_map(4, 1, {1, 1, 1, 1}, 10), binary_map(4, 1, {0, 0, 0, 0}, 10)),
               UndefinedValue);
  EXPECT_THROW(building_recall(binary_map(4, 1, {1, 1, 1, 1}, 20), buildings), ContractError);
}

TEST(BuildingRecall, GrowsWithMappedArea) {
  Rng rng(4);
  std::vector<float> b(400), h(400, 0.0f);
  for (float& v : b) v = static_cast<float>(rng.uniform_int(0, 1));
  const Raster buildings = binary_map(20, 20, b, 10);
  double last = 0.0;
  for (int step = 0; step < 10; ++step) {
    for (int i = 0; i < 40; ++i) h[static_cast<std::size_t>(rng.uniform_int(0, 399))] = 1.0f;
    const double rec = building_recall(binary_map(20, 20, h, 10), buildings);
    EXPECT_GE(rec, last);
    last = rec;
  }
}

TEST(Agreement, TruthTable) {
  EXPECT_EQ(agreement_code(false, false, false), 0);
  EXPECT_EQ(agreement_code(true, false, false), 1);
  EXPECT_EQ(agreement_code(false, true, false), 2);
  EXPECT_EQ(agreement_code(false, false, true), 3);
  EXPECT_EQ(agreement_code(true, true, true), 4);
  EXPECT_EQ(agreement_code(false, true, true), 5);
  EXPECT_EQ(agreement_code(true, false, true), 6);
  EXPECT_EQ(agreement_code(true, true, false), 7);
}

TEST(Agreement, MapCodesAndNodata) {
  const Raster ours = binary_map(3, 1, {1, 0, 1});
  const Raster guf = binary_map(3, 1, {1, 1, 255});
  const Raster ghsl = binary_map(3, 1, {1, 0, 0});
  const Raster codes = agreement_map(ours, guf, ghsl);
  EXPECT_EQ(codes.data, (std::vector<float>{4, 2, 255}));
  const Raster self = agreement_map(ours, ours, ours);
  EXPECT_EQ(self.data, (std::vector<float>{4, 0, 4}));
  EXPECT_THROW(agreement_map(ours, binary_map(3, 1, {0, 0, 0}, 10), ghsl), ContractError);

  hse::test::TempDir dir;
  write_agreement_ppm(codes, dir / "a.ppm");
  std::ifstream in(dir / "a.ppm", std::ios::binary);
  const std::string bytes((std::istreambuf_iterator<char>(in)), {});
  EXPECT_EQ(bytes.substr(0, 11), "P6\n3 1\n255\n");
  EXPECT_EQ(bytes.size(), 11u + 9u);
  EXPECT_EQ(static_cast<unsigned char>(bytes[11]), 0);
  EXPECT_EQ(static_cast<unsigned char>(bytes[17]), 128);
}

TEST(Report, JsonParsesBackWithNullsForUndefined) {
  std::vector<ProductReport> rows(3);
  rows[0].name = "ours";
  rows[0].cm = matrix(50, 10, 5, 100);
  rows[0].nodata_points = 2;
  rows[1].name = "empty";
  rows[1].cm = ConfusionMatrix{};
  rows[2].name = "buildings";
  rows[2].building_recall = 0.75;
  const auto doc = nlohmann::json::parse(report_json(rows));
  const auto& p = doc.at("products");
  ASSERT_EQ(p.size(), 3u);
  EXPECT_NEAR(p[0].at("kappa").get<double>(), 0.8, 1e-12);
  EXPECT_EQ(p[0].at("counts").at("fn").get<int>(), 5);
  EXPECT_EQ(p[0].at("nodata_points").get<int>(), 2);
  EXPECT_TRUE(p[1].at("kappa").is_null());
  EXPECT_TRUE(p[1].at("f1").is_null());
  EXPECT_FALSE(p[2].contains("kappa"));
  EXPECT_EQ(p[2].at("building_recall").get<double>(), 0.75);
  EXPECT_EQ(nlohmann::json::parse(report_json({})).at("products").size(), 0u);
}

TEST(Report, TextTable) {
  std::vector<ProductReport> rows(1);
  rows[0].name = "ours";
  rows[0].cm = matrix(50, 10, 5, 100);
  const std::string text = report_text(rows);
  EXPECT_NE(text.find("0.800"), std::string::npos) << text;
  EXPECT_NE(text.find("90.9%"), std::string::npos) << text;
  EXPECT_NE(text.find("16.7%"), std::string::npos) << text;
  EXPECT_NE(text.find("0.870"), std::string::npos) << text;
}
