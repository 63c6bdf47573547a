#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <span>
#include <type_traits>
#include <utility>
#include <string>
#include <vector>

#include "hse/error.hpp"

namespace hse::detail {

// Little-endian raw payloads for float32/float64/uint8 arrays.
template <typename T>
void write_le(std::ostream& out, std::span<const T> values) {
  static_assert(std::is_arithmetic_v<T>);
  if constexpr (std::endian::native == std::endian::little || sizeof(T) == 1) {
    out.write(reinterpret_cast<const char*>(values.data()),
              static_cast<std::streamsize>(values.size() * sizeof(T)));
  } else {
    std::vector<char> buf(values.size() * sizeof(T));
    for (std::size_t i = 0; i < values.size(); ++i) {
      char bytes[sizeof(T)];
      std::memcpy(bytes, &values[i], sizeof(T));
      for (std::size_t b = 0; b < sizeof(T); ++b) buf[i * sizeof(T) + b] = bytes[sizeof(T) - 1 - b];
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

template <typename T>
void read_le(std::istream& in, std::span<T> values, const std::string& what) {
  in.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != values.size() * sizeof(T)) {
    throw DecodeError(what + ": truncated payload");
  }
  if constexpr (std::endian::native != std::endian::little && sizeof(T) > 1) {
    for (T& v : values) {
      char bytes[sizeof(T)];
      std::memcpy(bytes, &v, sizeof(T));
      for (std::size_t b = 0; b < sizeof(T) / 2; ++b) std::swap(bytes[b], bytes[sizeof(T) - 1 - b]);
      std::memcpy(&v, bytes, sizeof(T));
    }
  }
}

}  // namespace hse::detail
