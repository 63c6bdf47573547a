#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hse/assess.hpp"

namespace hse {

// One row of an accuracy comparison. Point-based products carry a confusion
// matrix; building-mask products carry only a recall.
struct ProductReport {
  std::string name;
  std::optional<ConfusionMatrix> cm;
  std::optional<double> building_recall;
  std::size_t nodata_points = 0;
};

// {"products": [...]}; metrics that are undefined for a matrix are null.
std::string report_json(const std::vector<ProductReport>& products);

// Aligned table: kappa and F1 to three decimals, AA / CME / recall as
// percentages with one decimal.
std::string report_text(const std::vector<ProductReport>& products);

}  // namespace hse
