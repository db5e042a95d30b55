#pragma once

#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "said/corpus.hpp"
#include "said/error.hpp"
#include "said/semantics.hpp"

namespace said {

struct WeightConfig {
  double alpha = 0.4;  // floor weight
  double beta = 5.0;   // sharpness
  double mu = 0.0;     // threshold, normally SimilarityTable::mu()

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ConfigError("beta must be positive");
    if (!std::isfinite(mu)) throw ConfigError("mu must be finite");
  }
};

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// alpha + (1 - alpha) * sigmoid(beta * (s - mu)), evaluated around the
// midpoint as (1 + alpha)/2 + (1 - alpha)/2 * tanh(beta * (s - mu) / 2) so that
// s == mu yields (1 + alpha)/2 and alpha == 1 yields 1 without rounding.
inline double weight_of(double similarity, const WeightConfig& cfg) {
  const double z = cfg.beta * (similarity - cfg.mu);
  return 0.5 * (1.0 + cfg.alpha) + 0.5 * (1.0 - cfg.alpha) * std::tanh(0.5 * z);
}

struct WeightedSample {
  Interaction interaction;
  double weight = 1.0;
};

// Positives get weight_of(s_ui), negatives and positives of users without a
// profile get 1. Origin tags are never consulted.
inline std::vector<WeightedSample> assign_weights(const std::vector<Interaction>& samples,
                                                  const SimilarityTable& sims,
                                                  const WeightConfig& cfg) {
  cfg.validate();
  std::vector<WeightedSample> out;
  out.reserve(samples.size());
  for (const auto& x : samples) {
    double w = 1.0;
    if (x.label == 1) {
      if (!sims.contains(x.user_id, x.item_id)) {
        throw DataError("no similarity for positive (" + std::to_string(x.user_id) + ", " +
                        std::to_string(x.item_id) + ")");
      }
      if (const auto s = sims.score(x.user_id, x.item_id)) w = weight_of(*s, cfg);
    }
    out.push_back({x, w});
  }
  return out;
}

inline std::vector<WeightedSample> assign_weights(const DatasetSplit& split,
                                                  const SimilarityTable& sims,
                                                  const WeightConfig& cfg) {
  return assign_weights(split.train, sims, cfg);
}

inline std::vector<WeightedSample> unit_weights(const std::vector<Interaction>& samples) {
  std::vector<WeightedSample> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back({x, 1.0});
  return out;
}

// Audit dump: user_id, item_id, similarity (empty for no-profile), weight.
inline void write_weight_audit(std::ostream& out, const SimilarityTable& sims,
                               const WeightConfig& cfg) {
  cfg.validate();
  out << "user_id\titem_id\tsimilarity\tweight\n";
  out.precision(17);
  for (const auto& e : sims.entries()) {
    out << e.user << '\t' << e.item << '\t';
    if (e.score) {
      out << *e.score << '\t' << weight_of(*e.score, cfg);
    } else {
      out << '\t' << 1.0;
    }
    out << '\n';
  }
}

}  // namespace said
