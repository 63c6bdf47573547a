#include "hse/optim.hpp"

#include <cmath>
#include <string>

#include "hse/error.hpp"

namespace hse {

void Nadam::step(std::span<const std::span<double>> params, std::span<const std::span<const double>> grads,
                 double lr) {
  if (params.size() != grads.size()) throw ContractError("nadam: parameter/gradient group count mismatch");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ContractError("nadam: parameter groups changed between steps");
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (params[g].size() != grads[g].size() || params[g].size() != m_[g].size()) {
      throw ContractError("nadam: shape mismatch in group " + std::to_string(g));
    }
    for (std::size_t i = 0; i < grads[g].size(); ++i) {
      if (!std::isfinite(grads[g][i])) {
        throw NumericError("nadam: non-finite gradient " + std::to_string(grads[g][i]) + " in group " +
                           std::to_string(g) + " element " + std::to_string(i) + " at step " +
                           std::to_string(t_ + 1));
      }
    }
  }

  ++t_;
  const double b1 = params_.beta1;
  const double b2 = params_.beta2;
  const double m_corr = 1.0 - std::pow(b1, static_cast<double>(t_ + 1));
  const double g_corr = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double v_corr = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t g = 0; g < params.size(); ++g) {
    auto& m = m_[g];
    auto& v = v_[g];
    const auto grad = grads[g];
    auto theta = params[g];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
      v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
      const double m_hat = m[i] / m_corr;
      const double g_hat = grad[i] / g_corr;
      const double v_hat = v[i] / v_corr;
      theta[i] -= lr * (b1 * m_hat + (1.0 - b1) * g_hat) / (std::sqrt(v_hat) + params_.epsilon);
    }
  }
}

}  // namespace hse
