#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace hse {

struct NadamParams {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Nesterov-accelerated Adam (Dozat). Moment buffers are created lazily on
// the first step to match the parameter groups passed in.
class Nadam {
 public:
  explicit Nadam(NadamParams params = {}) : params_(params) {}

  // One update of every parameter group. Throws NumericError naming the
  // group and element if any gradient is non-finite; parameters are left
  // untouched in that case.
  void step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
            double lr);

  std::int64_t steps() const { return t_; }
  const NadamParams& params() const { return params_; }
  const std::vector<std::vector<double>>& first_moments() const { return m_; }
  const std::vector<std::vector<double>>& second_moments() const { return v_; }

 private:
  NadamParams params_;
  std::int64_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace hse
