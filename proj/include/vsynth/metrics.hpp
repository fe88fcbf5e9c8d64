#pragma once

#include <cstdint>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vsynth/errors.hpp"
#include "vsynth/volume.hpp"

namespace vsynth {

struct MetricsReport {
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
  double dice = 0.0;
  double fpr = 0.0;
  double fnr = 0.0;

  std::uint64_t total() const { return tp + fp + fn + tn; }
};

/// Derived ratios from counts. Empty-vs-empty is a perfect match (dice 1); a zero
/// denominator gives a rate of 0.
inline MetricsReport report_from_counts(std::uint64_t tp, std::uint64_t fp, std::uint64_t fn,
                                        std::uint64_t tn) {
  MetricsReport r{tp, fp, fn, tn};
  const std::uint64_t dice_den = 2 * tp + fp + fn;
  r.dice = dice_den == 0 ? 1.0 : static_cast<double>(2 * tp) / static_cast<double>(dice_den);
  r.fpr = (fp + tn) == 0 ? 0.0 : static_cast<double>(fp) / static_cast<double>(fp + tn);
  r.fnr = (fn + tp) == 0 ? 0.0 : static_cast<double>(fn) / static_cast<double>(fn + tp);
  return r;
}

inline MetricsReport confusion(const LabelVolume& pred, const LabelVolume& truth) {
  require_same_shape(pred, truth, "confusion");
  // counts[2 * truth + pred]
  std::uint64_t counts[4] = {0, 0, 0, 0};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const std::uint8_t p = pred.data[i], t = truth.data[i];
    if (p > 1 || t > 1) throw DataError("confusion: volumes must be binary (0/1)");
    ++counts[2 * t + p];
  }
  return report_from_counts(counts[3], counts[1], counts[2], counts[0]);
}

inline nlohmann::json to_json(const MetricsReport& r) {
  return {{"tp", r.tp},   {"fp", r.fp},   {"fn", r.fn},   {"tn", r.tn},
          {"dice", r.dice}, {"fpr", r.fpr}, {"fnr", r.fnr}, {"total", r.total()}};
}

inline std::string format_table(const MetricsReport& r) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "metric" << "value\n";
  os << std::setw(8) << "dice" << std::fixed << std::setprecision(6) << r.dice << '\n';
  os << std::setw(8) << "fpr" << r.fpr << '\n';
  os << std::setw(8) << "fnr" << r.fnr << '\n';
  os << std::setw(8) << "tp" << r.tp << '\n';
  os << std::setw(8) << "fp" << r.fp << '\n';
  os << std::setw(8) << "fn" << r.fn << '\n';
  os << std::setw(8) << "tn" << r.tn << '\n';
  return os.str();
}

}  // namespace vsynth
