#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "said/error.hpp"

namespace said {

class UndefinedMetricError : public DataError {
 public:
  using DataError::DataError;
};

// Mann-Whitney AUC with midranks for ties. The rank sum is accumulated as an
// integer (twice the midrank) so the result equals exhaustive pair counting
// (concordant + ties/2) / (P * N) bit for bit.
inline double auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw DataError("auc: scores/labels length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  std::int64_t n_pos = 0;
  std::int64_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i + 1;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    std::int64_t pos_in_group = 0;
    for (std::size_t k = i; k < j; ++k) pos_in_group += labels[order[k]] == 1 ? 1 : 0;
    twice_rank_sum += pos_in_group * static_cast<std::int64_t>(i + j + 1);
    n_pos += pos_in_group;
    i = j;
  }
  const std::int64_t n_neg = static_cast<std::int64_t>(n) - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw UndefinedMetricError("AUC undefined: need at least one positive and one negative");
  }
  const std::int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / (2.0 * static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

inline double auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  return auc(std::span<const double>(scores), std::span<const int>(labels));
}

inline constexpr double kDefaultClipEpsilon = 1e-7;

inline double logloss(std::span<const double> scores, std::span<const int> labels,
                      double clip_epsilon = kDefaultClipEpsilon) {
  if (scores.size() != labels.size()) throw DataError("logloss: scores/labels length mismatch");
  if (scores.empty()) throw DataError("logloss: empty input");
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double p = std::clamp(scores[i], clip_epsilon, 1.0 - clip_epsilon);
    sum -= labels[i] == 1 ? std::log(p) : std::log1p(-p);
  }
  return sum / static_cast<double>(scores.size());
}

inline double logloss(const std::vector<double>& scores, const std::vector<int>& labels,
                      double clip_epsilon = kDefaultClipEpsilon) {
  return logloss(std::span<const double>(scores), std::span<const int>(labels), clip_epsilon);
}

struct EvalResult {
  double auc = 0.0;
  double logloss = 0.0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

inline EvalResult evaluate(std::span<const double> scores, std::span<const int> labels,
                           double clip_epsilon = kDefaultClipEpsilon) {
  EvalResult r;
  r.auc = auc(scores, labels);
  r.logloss = logloss(scores, labels, clip_epsilon);
  for (int y : labels) (y == 1 ? r.n_pos : r.n_neg) += 1;
  return r;
}

struct MetricSummary {
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) deviation; 0 for a single value
  double min = 0.0;
  double max = 0.0;
};

inline MetricSummary summarize(std::vector<double> values) {
  if (values.empty()) throw DataError("summarize: no values");
  // Sorting first makes the floating-point sums independent of input order.
  std::sort(values.begin(), values.end());
  MetricSummary s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  s.min = values.front();
  s.max = values.back();
  s.mean = std::clamp(s.mean, s.min, s.max);
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / (n - 1.0));
  }
  return s;
}

struct AggregateResult {
  MetricSummary auc;
  MetricSummary logloss;
  std::vector<EvalResult> per_seed;
};

inline AggregateResult aggregate(const std::vector<EvalResult>& results) {
  if (results.empty()) throw DataError("aggregate: no results");
  std::vector<double> aucs, losses;
  for (const auto& r : results) {
    aucs.push_back(r.auc);
    losses.push_back(r.logloss);
  }
  return {summarize(aucs), summarize(losses), results};
}

}  // namespace said
