#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "hse/error.hpp"
#include "hse/raster.hpp"
#include "support.hpp"

using namespace hse;

namespace {

Raster sample_raster(int bands, int height, int width, DType dtype = DType::F32) {
  RasterInfo info;
  info.width = width;
  info.height = height;
  info.bands = bands;
  info.origin_x = 412345.5;
  info.origin_y = 5012000.25;
  info.scale = 10000.0;
  info.dtype = dtype;
  Raster r(info);
  Rng rng(1);
  for (float& v : r.data) v = dtype == DType::U8 ? static_cast<float>(rng.uniform_int(0, 2)) : static_cast<float>(rng.uniform(-5, 5));
  return r;
}

std::string to_bytes(const Raster& r) {
  std::ostringstream out(std::ios::binary);
  write_raster(r, out);
  return out.str();
}

Raster from_bytes(const std::string& s) {
  std::istringstream in(s, std::ios::binary);
  return read_raster(in);
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

const std::string kHeader2Band =
    "BSQF1\nwidth=2\nheight=1\nbands=2\ngsd=10\norigin_x=0\norigin_y=0\nscale=1\nnodata=-9999\ndtype=f32\n\n";

}  // namespace

TEST(Bsqf, RoundTripF32AndU8) {
  for (DType dt : {DType::F32, DType::U8}) {
    const Raster r = sample_raster(3, 7, 5, dt);
    const Raster back = from_bytes(to_bytes(r));
    EXPECT_EQ(back, r);
    EXPECT_EQ(to_bytes(back), to_bytes(r));
  }
}

TEST(Bsqf, HeaderText) {
  const Raster r = sample_raster(1, 2, 3);
  const std::string bytes = to_bytes(r);
  const std::string header =
      "BSQF1\nwidth=3\nheight=2\nbands=1\ngsd=10\norigin_x=412345.5\norigin_y=5012000.25\nscale=10000\n"
      "nodata=-9999\ndtype=f32\n\n";
  EXPECT_EQ(bytes.substr(0, header.size()), header);
  EXPECT_EQ(bytes.size(), header.size() + 6 * 4);
}

TEST(Bsqf, GoldenFileDecodesKnownValues) {
  const Raster r = load_raster(std::filesystem::path(TEST_DATA_DIR) / "golden_10band.bsqf");
  EXPECT_EQ(r.bands, 10);
  EXPECT_EQ(r.width, 64);
  EXPECT_EQ(r.height, 64);
  EXPECT_EQ(r.origin_x, 600000.0);
  EXPECT_EQ(r.origin_y, 5800000.0);
  EXPECT_EQ(r.scale, 10000.0);
  EXPECT_EQ(r.nodata, -9999.0);
  for (int b = 0; b < 10; ++b)
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) ASSERT_EQ(r.at(b, y, x), static_cast<float>(b * 10000 + y * 64 + x));
  EXPECT_EQ(to_bytes(r), read_file(std::filesystem::path(TEST_DATA_DIR) / "golden_10band.bsqf"));
}

TEST(Bsqf, RejectsMalformedInput) {
  const std::string one_band_payload(2 * 4, '\0');
  EXPECT_THROW(from_bytes(kHeader2Band + one_band_payload), DecodeError);
  EXPECT_NO_THROW(from_bytes(kHeader2Band + one_band_payload + one_band_payload));
  EXPECT_THROW(from_bytes(kHeader2Band + one_band_payload + one_band_payload + "x"), DecodeError);

  auto mutated = [&](const std::string& from, const std::string& to) {
    std::string h = kHeader2Band;
    h.replace(h.find(from), from.size(), to);
    return h + std::string(16, '\0');
  };
  EXPECT_THROW(from_bytes(mutated("BSQF1", "BSQF2")), DecodeError);
  EXPECT_THROW(from_bytes(mutated("dtype=f32", "dtype=f64")), DecodeError);
  EXPECT_THROW(from_bytes(mutated("gsd=10\n", "gsd=10\ngsd=20\n")), DecodeError);
  EXPECT_THROW(from_bytes(mutated("gsd=10\n", "gsd=10\ncrs=utm\n")), DecodeError);
  EXPECT_THROW(from_bytes(mutated("scale=1\n", "")), DecodeError);
  EXPECT_THROW(from_bytes(mutated("width=2", "width=two")), DecodeError);
  EXPECT_THROW(from_bytes(mutated("bands=2", "bands=0")), DecodeError);
  EXPECT_THROW(from_bytes("BSQF1\nwidth=2\n"), DecodeError);
  EXPECT_THROW(load_raster("/nonexistent/x.bsqf"), IoError);
}

TEST(Bsqf, U8RejectsNonCodes) {
  Raster r = sample_raster(1, 2, 2, DType::U8);
  r.data[0] = 0.5f;
  EXPECT_THROW(to_bytes(r), ContractError);
  r.data[0] = 256.0f;
  EXPECT_THROW(to_bytes(r), ContractError);
}

TEST(RasterSource, ReaderWindowsMatchMemory) {
  const Raster r = sample_raster(3, 23, 17);
  hse::test::TempDir dir;
  save_raster(r, dir / "r.bsqf");
  BsqfReader reader(dir / "r.bsqf");
  MemorySource mem(r);
  EXPECT_EQ(reader.info(), r.info());
  Rng rng(2);
  for (int i = 0; i < 30; ++i) {
    const int rows = rng.uniform_int(1, 23);
    const int cols = rng.uniform_int(1, 17);
    const int row = rng.uniform_int(0, 23 - rows);
    const int col = rng.uniform_int(0, 17 - cols);
    const auto w = reader.read_window(row, col, rows, cols);
    ASSERT_EQ(w, mem.read_window(row, col, rows, cols));
    EXPECT_EQ(w[0], r.at(0, row, col));
    EXPECT_EQ(w.back(), r.at(2, row + rows - 1, col + cols - 1));
  }
  EXPECT_THROW(reader.read_window(20, 0, 4, 1), ContractError);
  EXPECT_THROW(mem.read_window(0, -1, 1, 1), ContractError);
}

TEST(RasterSource, ReaderRejectsTruncatedPayload) {
  hse::test::TempDir dir;
  const std::string bytes = to_bytes(sample_raster(2, 4, 4));
  std::ofstream(dir / "t.bsqf", std::ios::binary) << bytes.substr(0, bytes.size() - 1);
  EXPECT_THROW(BsqfReader(dir / "t.bsqf"), DecodeError);
}

TEST(RasterSink, StreamingWriterMatchesWholeRaster) {
  Raster r = sample_raster(1, 9, 6);
  hse::test::TempDir dir;
  {
    BsqfWriter writer(dir / "s.bsqf", r.info());
    MemorySink sink(r.info());
    for (int row = 0; row < 9; row += 4) {
      const int n = std::min(4, 9 - row);
      std::span<const float> block(r.data.data() + row * 6, static_cast<std::size_t>(n) * 6);
      writer.write_rows(block, n);
      sink.write_rows(block, n);
    }
    writer.finish();
    EXPECT_EQ(sink.take(), r);
  }
  EXPECT_EQ(read_file(dir / "s.bsqf"), to_bytes(r));
}

TEST(RasterSink, RejectsMisuse) {
  RasterInfo info = sample_raster(1, 3, 4).info();
  MemorySink sink(info);
  std::vector<float> row(4, 1.0f);
  EXPECT_THROW(sink.write_rows(std::span<const float>(row.data(), 3), 1), ContractError);
  sink.write_rows(row, 1);
  EXPECT_THROW(sink.take(), ContractError);
  hse::test::TempDir dir;
  BsqfWriter writer(dir / "w.bsqf", info);
  writer.write_rows(row, 1);
  EXPECT_THROW(writer.finish(), ContractError);
  info.bands = 2;
  EXPECT_THROW(MemorySink{info}, ContractError);
}

TEST(Pgm, U8CodesAndScaledFloats) {
  hse::test::TempDir dir;
  RasterInfo info;
  info.width = 4;
  info.height = 1;
  info.dtype = DType::U8;
  info.nodata = 255;
  Raster codes(info);
  codes.data = {0, 1, 255, 1};
  write_pgm(codes, dir / "a.pgm");
  EXPECT_EQ(read_file(dir / "a.pgm"), std::string("P5\n4 1\n255\n") + std::string({'\0', '\xff', '\x80', '\xff'}));

  info.dtype = DType::F32;
  info.nodata = -9999;
  Raster prob(info);
  prob.data = {0.0f, 0.5f, -9999.0f, 2.0f};
  write_pgm(prob, dir / "b.pgm");
  EXPECT_EQ(read_file(dir / "b.pgm"), std::string("P5\n4 1\n255\n") + std::string({'\0', '\x80', '\0', '\xff'}));
}
