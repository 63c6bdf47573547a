#pragma once

#include <atomic>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "hse/rng.hpp"
#include "hse/tensor.hpp"

namespace hse::test {

template <typename T>
Tensor4<T> random_tensor(Shape4 shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor4<T> t(shape);
  for (T& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Scratch directory removed when the object goes out of scope.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("hse_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace hse::test
