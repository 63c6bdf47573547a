#include "hse/raster.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>

#include "hse/binary_io.hpp"
#include "hse/error.hpp"

namespace hse {
namespace {

constexpr const char* kMagic = "BSQF1";

// Integral values print without exponent; others use the shortest round-trip form.
std::string format_double(double v) {
  char buf[64];
  const bool integral = std::isfinite(v) && v == std::trunc(v) && std::abs(v) < 1e15;
  const auto [ptr, ec] = integral ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed)
                                  : std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DecodeError("BSQF: bad value for " + key + ": '" + text + "'");
  }
  return value;
}

std::size_t dtype_size(DType dtype) { return dtype == DType::F32 ? 4 : 1; }

void check_info(const RasterInfo& info) {
  if (info.width < 0 || info.height < 0 || info.bands < 1) {
    throw InvalidInput("raster needs non-negative dims and at least one band");
  }
  if (!(info.gsd > 0.0)) throw InvalidInput("raster gsd must be positive");
}

void write_payload(std::ostream& out, const Raster& r) {
  if (r.dtype == DType::F32) {
    std::vector<float> copy(r.data.begin(), r.data.end());
    detail::write_le<float>(out, copy);
    return;
  }
  std::vector<std::uint8_t> bytes(r.data.size());
  for (std::size_t i = 0; i < r.data.size(); ++i) {
    const float v = r.data[i];
    if (!(v >= 0.0f && v <= 255.0f) || v != std::floor(v)) {
      throw ContractError("u8 raster holds non-integer or out-of-range value " + format_double(v));
    }
    bytes[i] = static_cast<std::uint8_t>(v);
  }
  detail::write_le<std::uint8_t>(out, bytes);
}

std::vector<float> decode_values(std::istream& in, DType dtype, std::size_t count, const std::string& what) {
  std::vector<float> values(count);
  if (dtype == DType::F32) {
    detail::read_le<float>(in, values, what);
  } else {
    std::vector<std::uint8_t> bytes(count);
    detail::read_le<std::uint8_t>(in, bytes, what);
    for (std::size_t i = 0; i < count; ++i) values[i] = bytes[i];
  }
  return values;
}

}  // namespace

std::string to_string(DType dtype) { return dtype == DType::F32 ? "f32" : "u8"; }

bool RasterInfo::same_grid(const RasterInfo& o) const {
  return width == o.width && height == o.height && gsd == o.gsd && origin_x == o.origin_x &&
         origin_y == o.origin_y;
}

Raster::Raster(const RasterInfo& info, float fill) : RasterInfo(info) {
  check_info(info);
  data.assign(values(), fill);
}

void write_bsqf_header(std::ostream& out, const RasterInfo& info) {
  out << kMagic << '\n'
      << "width=" << info.width << '\n'
      << "height=" << info.height << '\n'
      << "bands=" << info.bands << '\n'
      << "gsd=" << format_double(info.gsd) << '\n'
      << "origin_x=" << format_double(info.origin_x) << '\n'
      << "origin_y=" << format_double(info.origin_y) << '\n'
      << "scale=" << format_double(info.scale) << '\n'
      << "nodata=" << format_double(info.nodata) << '\n'
      << "dtype=" << to_string(info.dtype) << '\n'
      << '\n';
}

RasterInfo read_bsqf_header(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kMagic) throw DecodeError("BSQF: bad magic");
  std::map<std::string, std::string> fields;
  while (true) {
    if (!std::getline(in, line)) throw DecodeError("BSQF: header not terminated by a blank line");
    if (line.empty()) break;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw DecodeError("BSQF: malformed header line '" + line + "'");
    const std::string key = line.substr(0, eq);
    if (!fields.emplace(key, line.substr(eq + 1)).second) throw DecodeError("BSQF: duplicate key " + key);
  }
  auto take = [&](const std::string& key) {
    auto it = fields.find(key);
    if (it == fields.end()) throw DecodeError("BSQF: missing key " + key);
    std::string v = it->second;
    fields.erase(it);
    return v;
  };
  RasterInfo info;
  info.width = parse_number<int>("width", take("width"));
  info.height = parse_number<int>("height", take("height"));
  info.bands = parse_number<int>("bands", take("bands"));
  info.gsd = parse_number<double>("gsd", take("gsd"));
  info.origin_x = parse_number<double>("origin_x", take("origin_x"));
  info.origin_y = parse_number<double>("origin_y", take("origin_y"));
  info.scale = parse_number<double>("scale", take("scale"));
  info.nodata = parse_number<double>("nodata", take("nodata"));
  const std::string dtype = take("dtype");
  if (dtype == "f32") {
    info.dtype = DType::F32;
  } else if (dtype == "u8") {
    info.dtype = DType::U8;
  } else {
    throw DecodeError("BSQF: unsupported dtype '" + dtype + "'");
  }
  if (!fields.empty()) throw DecodeError("BSQF: unknown key " + fields.begin()->first);
  if (info.width < 0 || info.height < 0 || info.bands < 1 || !(info.gsd > 0.0)) {
    throw DecodeError("BSQF: invalid dimensions or gsd");
  }
  return info;
}

void write_raster(const Raster& raster, std::ostream& out) {
  if (raster.data.size() != raster.values()) throw ContractError("raster payload does not match its header");
  write_bsqf_header(out, raster);
  write_payload(out, raster);
  if (!out) throw IoError("BSQF: write failed");
}

Raster read_raster(std::istream& in) {
  const RasterInfo info = read_bsqf_header(in);
  Raster raster;
  static_cast<RasterInfo&>(raster) = info;
  raster.data = decode_values(in, info.dtype, info.values(), "BSQF");
  if (in.peek() != std::char_traits<char>::eof()) {
    throw DecodeError("BSQF: payload longer than the header declares");
  }
  return raster;
}

void save_raster(const Raster& raster, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_raster(raster, out);
}

Raster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open raster '" + path.string() + "'");
  try {
    return read_raster(in);
  } catch (const DecodeError& e) {
    throw DecodeError(path.string() + ": " + e.what());
  }
}

namespace {
void check_window(const RasterInfo& info, int row, int col, int rows, int cols) {
  if (row < 0 || col < 0 || rows < 0 || cols < 0 || row + rows > info.height || col + cols > info.width) {
    throw ContractError("window (" + std::to_string(row) + "," + std::to_string(col) + ") " +
                        std::to_string(rows) + "x" + std::to_string(cols) + " outside raster " +
                        std::to_string(info.height) + "x" + std::to_string(info.width));
  }
}
}  // namespace

std::vector<float> MemorySource::read_window(int row, int col, int rows, int cols) {
  check_window(raster_, row, col, rows, cols);
  std::vector<float> out(static_cast<std::size_t>(raster_.bands) * rows * cols);
  std::size_t o = 0;
  for (int b = 0; b < raster_.bands; ++b) {
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) out[o++] = raster_.at(b, row + r, col + c);
    }
  }
  return out;
}

BsqfReader::BsqfReader(const std::filesystem::path& path) : in_(path, std::ios::binary), name_(path.string()) {
  if (!in_) throw IoError("cannot open raster '" + name_ + "'");
  info_ = read_bsqf_header(in_);
  payload_ = in_.tellg();
  in_.seekg(0, std::ios::end);
  const std::streamoff expected = payload_ + static_cast<std::streamoff>(info_.values() * dtype_size(info_.dtype));
  if (in_.tellg() != expected) throw DecodeError(name_ + ": payload size does not match header");
}

std::vector<float> BsqfReader::read_window(int row, int col, int rows, int cols) {
  check_window(info_, row, col, rows, cols);
  const std::size_t elem = dtype_size(info_.dtype);
  std::vector<float> out;
  out.reserve(static_cast<std::size_t>(info_.bands) * rows * cols);
  for (int b = 0; b < info_.bands; ++b) {
    for (int r = 0; r < rows; ++r) {
      const std::size_t offset = ((static_cast<std::size_t>(b) * info_.height + row + r) * info_.width + col) * elem;
      in_.seekg(payload_ + static_cast<std::streamoff>(offset));
      auto line = decode_values(in_, info_.dtype, static_cast<std::size_t>(cols), name_);
      out.insert(out.end(), line.begin(), line.end());
    }
  }
  return out;
}

MemorySink::MemorySink(const RasterInfo& info) : raster_(info) {
  if (info.bands != 1) throw ContractError("row sinks hold single-band rasters");
}

void MemorySink::write_rows(std::span<const float> values, int rows) {
  if (values.size() != static_cast<std::size_t>(rows) * raster_.width || next_row_ + rows > raster_.height) {
    throw ContractError("row block does not fit the output raster");
  }
  std::copy(values.begin(), values.end(), raster_.data.begin() + static_cast<std::ptrdiff_t>(next_row_) * raster_.width);
  next_row_ += rows;
}

Raster MemorySink::take() {
  if (next_row_ != raster_.height) throw ContractError("output raster is incomplete");
  return std::move(raster_);
}

BsqfWriter::BsqfWriter(const std::filesystem::path& path, const RasterInfo& info)
    : out_(path, std::ios::binary), name_(path.string()), info_(info) {
  if (info.bands != 1) throw ContractError("streaming writer supports single-band rasters only");
  if (!out_) throw IoError("cannot open '" + name_ + "' for writing");
  write_bsqf_header(out_, info_);
}

void BsqfWriter::write_rows(std::span<const float> values, int rows) {
  if (values.size() != static_cast<std::size_t>(rows) * info_.width || next_row_ + rows > info_.height) {
    throw ContractError("row block does not fit the output raster");
  }
  Raster block;
  static_cast<RasterInfo&>(block) = info_;
  block.data.assign(values.begin(), values.end());
  write_payload(out_, block);
  if (!out_) throw IoError(name_ + ": write failed");
  next_row_ += rows;
}

void BsqfWriter::finish() {
  if (next_row_ != info_.height) throw ContractError(name_ + ": not every row was written");
  out_.flush();
  if (!out_) throw IoError(name_ + ": write failed");
}

void write_pgm(const Raster& raster, const std::filesystem::path& path, double lo, double hi) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "P5\n" << raster.width << ' ' << raster.height << "\n255\n";
  std::vector<unsigned char> bytes(raster.pixels());
  const auto band = raster.band(0);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = band[i];
    if (raster.dtype == DType::U8) {
      bytes[i] = raster.is_nodata(v) ? 128 : (v > 0.0f ? 255 : 0);
    } else if (raster.is_nodata(v) || !std::isfinite(v)) {
      bytes[i] = 0;
    } else {
      const double t = std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
      bytes[i] = static_cast<unsigned char>(std::lround(t * 255.0));
    }
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

}  // namespace hse
