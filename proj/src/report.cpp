#include "hse/report.hpp"

#include <cstdio>
#include <functional>
#include <json.hpp>

#include "hse/error.hpp"

namespace hse {
namespace {

std::optional<double> try_metric(const std::function<double(const ConfusionMatrix&)>& fn, const ConfusionMatrix& cm) {
  try {
    return fn(cm);
  } catch (const UndefinedValue&) {
    return std::nullopt;
  }
}

nlohmann::json or_null(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

std::string fmt(const std::optional<double>& v, bool percent) {
  if (!v) return "n/a";
  char buf[32];
  if (percent) {
    std::snprintf(buf, sizeof buf, "%.1f%%", *v * 100.0);
  } else {
    std::snprintf(buf, sizeof buf, "%.3f", *v);
  }
  return buf;
}

}  // namespace

std::string report_json(const std::vector<ProductReport>& products) {
  nlohmann::json doc;
  doc["products"] = nlohmann::json::array();
  for (const auto& p : products) {
    nlohmann::json row;
    row["name"] = p.name;
    if (p.cm) {
      const ConfusionMatrix& cm = *p.cm;
      row["counts"] = {{"tp", cm.tp}, {"fp", cm.fp}, {"fn", cm.fn}, {"tn", cm.tn}};
      row["kappa"] = or_null(try_metric(kappa, cm));
      row["aa"] = or_null(try_metric(average_accuracy, cm));
      row["cme"] = or_null(try_metric(commission_error, cm));
      row["recall"] = or_null(try_metric(recall, cm));
      row["f1"] = or_null(try_metric(f1_score, cm));
      row["nodata_points"] = p.nodata_points;
    }
    if (p.building_recall) row["building_recall"] = *p.building_recall;
    doc["products"].push_back(std::move(row));
  }
  return doc.dump(2) + "\n";
}

std::string report_text(const std::vector<ProductReport>& products) {
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-20s %7s %7s %7s %9s %7s %8s %8s %8s %8s %10s\n", "product", "kappa", "AA",
                "CME", "recall", "F1", "TP", "FP", "FN", "TN", "bldg_rec");
  out += line;
  for (const auto& p : products) {
    std::string k = "-", aa = "-", cme = "-", rec = "-", f1 = "-", tp = "-", fp = "-", fn = "-", tn = "-";
    if (p.cm) {
      const ConfusionMatrix& cm = *p.cm;
      k = fmt(try_metric(kappa, cm), false);
      aa = fmt(try_metric(average_accuracy, cm), true);
      cme = fmt(try_metric(commission_error, cm), true);
      rec = fmt(try_metric(recall, cm), true);
      f1 = fmt(try_metric(f1_score, cm), false);
      tp = std::to_string(cm.tp);
      fp = std::to_string(cm.fp);
      fn = std::to_string(cm.fn);
      tn = std::to_string(cm.tn);
    }
    const std::string br = p.building_recall ? fmt(p.building_recall, true) : "-";
    std::snprintf(line, sizeof line, "%-20s %7s %7s %7s %9s %7s %8s %8s %8s %8s %10s\n", p.name.c_str(), k.c_str(),
                  aa.c_str(), cme.c_str(), rec.c_str(), f1.c_str(), tp.c_str(), fp.c_str(), fn.c_str(), tn.c_str(),
                  br.c_str());
    out += line;
  }
  return out;
}

}  // namespace hse
