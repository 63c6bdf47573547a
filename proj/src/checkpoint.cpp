#include "hse/checkpoint.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hse/binary_io.hpp"
#include "hse/error.hpp"

namespace hse {
namespace {

constexpr const char* kMagic = "S2HSE1";

std::string read_line(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DecodeError("checkpoint: unexpected end of header");
  return line;
}

int parse_int(std::string_view text, const std::string& what) {
  int value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw DecodeError("checkpoint: bad integer for " + what + ": '" + std::string(text) + "'");
  }
  return value;
}

int read_keyed(std::istream& in, const std::string& key) {
  const std::string line = read_line(in);
  const std::string prefix = key + "=";
  if (line.rfind(prefix, 0) != 0) throw DecodeError("checkpoint: expected '" + prefix + "', got '" + line + "'");
  return parse_int(std::string_view(line).substr(prefix.size()), key);
}

}  // namespace

void write_checkpoint(const Model& model, std::ostream& out) {
  const auto convs = model.conv_layers();
  out << kMagic << '\n'
      << "f=" << model.spec.f << '\n'
      << "d=" << model.spec.depth << '\n'
      << "layers=" << convs.size() << '\n';
  for (const auto* c : convs) {
    out << "conv " << c->out_channels() << ' ' << c->in_channels() << ' ' << c->kernel_size() << '\n';
    detail::write_le<double>(out, c->kernel.data());
    detail::write_le<double>(out, c->bias);
  }
  if (!out) throw IoError("checkpoint: write failed");
}

Model read_checkpoint(std::istream& in, double dropout_rate) {
  if (read_line(in) != kMagic) throw DecodeError("checkpoint: bad magic");
  ArchSpec spec;
  spec.f = read_keyed(in, "f");
  spec.depth = read_keyed(in, "d");
  const int layers = read_keyed(in, "layers");
  try {
    spec.validate();
  } catch (const InvalidConfig& e) {
    throw DecodeError(std::string("checkpoint: ") + e.what());
  }
  Rng unused(0);
  Model model = build(spec, unused, dropout_rate);
  auto convs = model.conv_layers();
  if (layers != static_cast<int>(convs.size())) {
    throw DecodeError("checkpoint: layers=" + std::to_string(layers) + " but f/d imply " +
                      std::to_string(convs.size()));
  }
  for (std::size_t i = 0; i < convs.size(); ++i) {
    auto* c = convs[i];
    std::istringstream header(read_line(in));
    std::string tag;
    int out_c = -1, in_c = -1, k = -1;
    header >> tag >> out_c >> in_c >> k;
    if (tag != "conv" || out_c != c->out_channels() || in_c != c->in_channels() || k != c->kernel_size()) {
      throw DecodeError("checkpoint: layer " + std::to_string(i) + " header does not match the architecture");
    }
    detail::read_le<double>(in, c->kernel.data(), "checkpoint");
    detail::read_le<double>(in, std::span<double>(c->bias), "checkpoint");
  }
  if (in.peek() != std::char_traits<char>::eof()) throw DecodeError("checkpoint: trailing bytes");
  return model;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  write_checkpoint(model, out);
}

Model load_checkpoint(const std::filesystem::path& path, double dropout_rate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in, dropout_rate);
}

}  // namespace hse
