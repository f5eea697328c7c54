#pragma once

// Brute-force metric recomputation used as an independent oracle for the
// evaluator: per-class counts come straight from the prediction list.

#include <vector>

#include "triage/evaluator.hpp"

namespace oracle {

struct Metrics {
  double accuracy = 0;
  double macro_p = 0, macro_r = 0, macro_f1 = 0;
  double weighted_p = 0, weighted_r = 0, weighted_f1 = 0;
  std::vector<double> precision, recall, f1;  // indexed by category, -1 when class absent
};

inline Metrics recompute(const std::vector<triage::eval::LabeledPrediction>& preds) {
  using triage::kNumCategories;
  Metrics m;
  m.precision.assign(kNumCategories, -1);
  m.recall.assign(kNumCategories, -1);
  m.f1.assign(kNumCategories, -1);
  std::size_t correct = 0;
  for (const auto& p : preds) correct += p.gold == p.predicted ? 1 : 0;
  m.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
  double present = 0, total_support = 0;
  for (std::size_t c = 0; c < kNumCategories; ++c) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& p : preds) {
      const bool g = triage::index_of(p.gold) == c;
      const bool q = triage::index_of(p.predicted) == c;
      if (g && q) ++tp;
      if (!g && q) ++fp;
      if (g && !q) ++fn;
    }
    if (tp + fp + fn == 0) continue;
    const double prec = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    const double rec = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    const double f = prec + rec > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
    m.precision[c] = prec;
    m.recall[c] = rec;
    m.f1[c] = f;
    const double s = static_cast<double>(tp + fn);
    m.macro_p += prec;
    m.macro_r += rec;
    m.macro_f1 += f;
    m.weighted_p += s * prec;
    m.weighted_r += s * rec;
    m.weighted_f1 += s * f;
    present += 1;
    total_support += s;
  }
  m.macro_p /= present;
  m.macro_r /= present;
  m.macro_f1 /= present;
  m.weighted_p /= total_support;
  m.weighted_r /= total_support;
  m.weighted_f1 /= total_support;
  return m;
}

}  // namespace oracle
