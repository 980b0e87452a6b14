#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "promofraud/synth.hpp"
#include "promofraud/txn.hpp"

namespace promofraud {

// Confusion counts plus derived metrics. A metric whose denominator is zero
// is reported as the undefined sentinel (nullopt), never as a crash or 0/0.
struct Metrics {
  std::int64_t tp = 0;
  std::int64_t fp = 0;
  std::int64_t tn = 0;
  std::int64_t fn = 0;
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

inline Metrics metrics_from_counts(std::int64_t tp, std::int64_t fp,
                                   std::int64_t tn, std::int64_t fn) {
  Metrics m;
  m.tp = tp;
  m.fp = fp;
  m.tn = tn;
  m.fn = fn;
  if (tp + fp > 0) m.precision = static_cast<double>(tp) / (tp + fp);
  if (tp + fn > 0) m.recall = static_cast<double>(tp) / (tp + fn);
  if (m.precision && m.recall && (*m.precision + *m.recall) > 0.0) {
    m.f1 = 2.0 * *m.precision * *m.recall / (*m.precision + *m.recall);
  }
  const std::int64_t n = tp + fp + tn + fn;
  if (n > 0) m.accuracy = static_cast<double>(tp + tn) / n;
  return m;
}

enum class MetricPolicy {
  kExcludeUnknown,  // score only users with a ground label in {0,1}
  kOracle,          // planted ground-truth groups stand in for verification
};

inline MetricPolicy metric_policy_from_name(const std::string& name) {
  if (name == "exclude") return MetricPolicy::kExcludeUnknown;
  if (name == "oracle") return MetricPolicy::kOracle;
  throw std::invalid_argument("unknown metric policy: " + name);
}

// `predicted` holds the users flagged as fraudsters. Under kExcludeUnknown the
// universe is the labeled users; under kOracle it is `universe` with planted
// membership as truth.
inline Metrics compute_metrics(const std::set<std::string>& predicted,
                               const LabelSet& labels, MetricPolicy policy,
                               const GroundTruthGroups* truth = nullptr,
                               const std::vector<std::string>* universe = nullptr) {
  std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
  if (policy == MetricPolicy::kExcludeUnknown) {
    for (const auto& [user, label] : labels.entries()) {
      if (label == LabelSet::kUnknown) continue;
      const bool pred = predicted.count(user) > 0;
      const bool pos = label == LabelSet::kFraud;
      tp += pred && pos;
      fp += pred && !pos;
      fn += !pred && pos;
      tn += !pred && !pos;
    }
  } else {
    if (truth == nullptr || universe == nullptr) {
      throw std::invalid_argument("oracle policy needs ground truth and universe");
    }
    for (const auto& user : *universe) {
      const bool pred = predicted.count(user) > 0;
      const bool pos = truth->is_planted(user);
      tp += pred && pos;
      fp += pred && !pos;
      fn += !pred && pos;
      tn += !pred && !pos;
    }
  }
  return metrics_from_counts(tp, fp, tn, fn);
}

}  // namespace promofraud
