#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hse {

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-5;
  int instances = 20;
  std::uint64_t seed = 42;
};

struct GradCheckResult {
  std::string layer;
  int instance = 0;
  std::size_t entries = 0;
  double max_rel_error = 0.0;
  bool passed = false;
};

// Compare every analytic gradient entry of each layer kind (conv 3x3,
// conv 1x1, max pool, avg pool, concat, relu, dropout, softmax loss and a
// whole small network) against central finite differences of the forward
// map, on `instances` seeded random cases per kind. The relative error of
// an entry is |analytic - numeric| / max(1e-3, |analytic|, |numeric|).
std::vector<GradCheckResult> run_gradcheck(const GradCheckOptions& options = {});

double gradcheck_rel_error(double analytic, double numeric);

}  // namespace hse
