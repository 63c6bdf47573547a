#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace hse {

enum class DType { F32, U8 };

std::string to_string(DType dtype);

// Georeferencing and layout of a raster. origin is the upper-left corner in
// map meters; rows run south (y decreases), columns run east.
struct RasterInfo {
  int width = 0;
  int height = 0;
  int bands = 1;
  double gsd = 10.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  // Divisor that turns stored values into reflectance; 1 once normalized.
  double scale = 1.0;
  double nodata = -9999.0;
  DType dtype = DType::F32;

  std::size_t pixels() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  std::size_t values() const { return pixels() * static_cast<std::size_t>(bands); }
  bool same_grid(const RasterInfo& other) const;
  bool operator==(const RasterInfo&) const = default;
};

// Band-sequential grid. u8 rasters keep their codes in float storage; the
// dtype governs the on-disk encoding.
struct Raster : RasterInfo {
  std::vector<float> data;

  Raster() = default;
  Raster(const RasterInfo& info, float fill);
  explicit Raster(const RasterInfo& info) : Raster(info, 0.0f) {}

  const RasterInfo& info() const { return *this; }
  float& at(int band, int row, int col) { return data[index(band, row, col)]; }
  float at(int band, int row, int col) const { return data[index(band, row, col)]; }
  std::span<float> band(int b) { return {data.data() + b * pixels(), pixels()}; }
  std::span<const float> band(int b) const { return {data.data() + b * pixels(), pixels()}; }
  bool is_nodata(float v) const { return v == static_cast<float>(nodata); }

  bool operator==(const Raster&) const = default;

 private:
  std::size_t index(int band, int row, int col) const {
    return (static_cast<std::size_t>(band) * height + row) * width + col;
  }
};

// BSQF on-disk format: "BSQF1" line, key=value header lines (width, height,
// bands, gsd, origin_x, origin_y, scale, nodata, dtype), one blank line, then
// the raw little-endian band-sequential payload.
void write_bsqf_header(std::ostream& out, const RasterInfo& info);
RasterInfo read_bsqf_header(std::istream& in);

void save_raster(const Raster& raster, const std::filesystem::path& path);
void write_raster(const Raster& raster, std::ostream& out);
Raster load_raster(const std::filesystem::path& path);
Raster read_raster(std::istream& in);

// Anything tiled inference can pull windows from.
class RasterSource {
 public:
  virtual ~RasterSource() = default;
  virtual const RasterInfo& info() const = 0;
  // Band-sequential (bands, rows, cols) window; must lie inside the raster.
  virtual std::vector<float> read_window(int row, int col, int rows, int cols) = 0;
};

class MemorySource : public RasterSource {
 public:
  explicit MemorySource(const Raster& raster) : raster_(raster) {}
  const RasterInfo& info() const override { return raster_; }
  std::vector<float> read_window(int row, int col, int rows, int cols) override;

 private:
  const Raster& raster_;
};

// Reads windows straight from a BSQF file without loading the payload.
class BsqfReader : public RasterSource {
 public:
  explicit BsqfReader(const std::filesystem::path& path);
  const RasterInfo& info() const override { return info_; }
  std::vector<float> read_window(int row, int col, int rows, int cols) override;

 private:
  std::ifstream in_;
  std::string name_;
  RasterInfo info_;
  std::streamoff payload_ = 0;
};

// Receives single-band output rows top to bottom.
class RasterSink {
 public:
  virtual ~RasterSink() = default;
  virtual const RasterInfo& info() const = 0;
  virtual void write_rows(std::span<const float> values, int rows) = 0;
};

class MemorySink : public RasterSink {
 public:
  explicit MemorySink(const RasterInfo& info);
  const RasterInfo& info() const override { return raster_; }
  void write_rows(std::span<const float> values, int rows) override;
  Raster take();

 private:
  Raster raster_;
  int next_row_ = 0;
};

// Streams a single-band BSQF file row block by row block.
class BsqfWriter : public RasterSink {
 public:
  BsqfWriter(const std::filesystem::path& path, const RasterInfo& info);
  const RasterInfo& info() const override { return info_; }
  void write_rows(std::span<const float> values, int rows) override;
  // Throws unless every row was written.
  void finish();

 private:
  std::ofstream out_;
  std::string name_;
  RasterInfo info_;
  int next_row_ = 0;
};

// 8-bit grayscale preview of band 0. u8 maps: 0 -> 0, 1 -> 255, nodata ->
// 128. f32 rasters are scaled from [lo, hi]; nodata -> 0.
void write_pgm(const Raster& raster, const std::filesystem::path& path, double lo = 0.0, double hi = 1.0);

}  // namespace hse
