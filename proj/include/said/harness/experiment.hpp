#pragma once

// One experiment cell = (noise ratio, alpha, seed):
//   inject noise -> similarities -> mu -> weights -> train -> evaluate on test.
// Cells sharing (noise, seed) share the corrupted split and similarity table.

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <atomic>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "said/corpus.hpp"
#include "said/metrics.hpp"
#include "said/model.hpp"
#include "said/reweight.hpp"
#include "said/semantics.hpp"

namespace said {

struct PreparedData {
  DatasetSplit split;  // positives plus sampled negatives in every part
  ItemTextMap texts;
  std::vector<ProfileText> profiles;
  std::vector<std::string> warnings;
};

struct MuMode {
  std::optional<double> fixed;  // nullopt: global mean of train similarities

  static MuMode parse(const std::string& text) {
    if (text == "global_mean") return {};
    if (text.starts_with("fixed:")) {
      double v = 0;
      if (!detail::parse_number(std::string_view(text).substr(6), v) || !std::isfinite(v)) {
        throw ConfigError("bad mu value '" + text + "'");
      }
      return {v};
    }
    throw ConfigError("mu must be 'global_mean' or 'fixed:<value>', got '" + text + "'");
  }

  std::string str() const {
    if (!fixed) return "global_mean";
    std::ostringstream os;
    os.precision(17);
    os << "fixed:" << *fixed;
    return os.str();
  }
};

struct CellSpec {
  double noise = 0.0;
  double alpha = 1.0;
  std::uint64_t seed = 0;
};

struct CellOutcome {
  CellSpec spec;
  bool ok = false;
  std::string error;
  EvalResult test;
  std::vector<EpochStats> trace;
  std::size_t best_epoch = 0;
  double mu = 0.0;
  std::size_t injected = 0;
  double mean_weight_organic = 0.0;  // diagnostics only; never fed back
  double mean_weight_injected = 0.0;
  std::shared_ptr<const CtrModel> model;  // best snapshot; run_grid drops it after the callback
};

// Builds the prepared dataset: split, negatives, profiles.
inline PreparedData prepare_data(const Corpus& corpus, SplitRatios ratios, std::size_t negative_ratio,
                                 std::uint64_t seed, std::size_t profile_k) {
  PreparedData out;
  out.warnings = corpus.warnings;
  auto split = chronological_split(corpus.interactions, ratios, corpus.user_universe, corpus.item_universe);
  out.split = sample_negatives(std::move(split), negative_ratio, seed, &out.warnings);
  for (const auto& t : corpus.items) out.texts[t.item_id] = t;
  out.profiles = build_profiles(out.split, out.texts, profile_k);
  return out;
}

struct CorruptedTrain {
  DatasetSplit split;
  SimilarityTable sims;
  std::size_t injected = 0;
};

inline std::uint64_t noise_seed(std::uint64_t run_seed, double ratio) {
  return mix_seed(run_seed, 0x401'0000ULL + static_cast<std::uint64_t>(std::llround(ratio * 1e6)));
}

inline CorruptedTrain corrupt_and_score(const PreparedData& data, const EmbeddingTable& table,
                                        double noise, std::uint64_t seed, const GapFill* fill) {
  CorruptedTrain out;
  out.split = inject_noise(data.split, NoiseSpec{noise, noise_seed(seed, noise)});
  for (const auto& x : out.split.train) out.injected += x.origin == Origin::injected_noise ? 1 : 0;
  out.sims = compute_similarity_table(out.split, table, data.profiles, fill);
  return out;
}

inline CellOutcome run_cell(const PreparedData& data, const CorruptedTrain& corrupted, const CellSpec& spec,
                            double beta, const MuMode& mu_mode, TrainConfig train_cfg) {
  CellOutcome out;
  out.spec = spec;
  out.injected = corrupted.injected;
  try {
    train_cfg.seed = spec.seed;
    WeightConfig wc{spec.alpha, beta, mu_mode.fixed.value_or(corrupted.sims.mu())};
    out.mu = wc.mu;
    const auto weighted = assign_weights(corrupted.split, corrupted.sims, wc);
    double so = 0, si = 0;
    std::size_t no = 0, ni = 0;
    for (const auto& s : weighted) {
      if (s.interaction.origin == Origin::organic_positive) {
        so += s.weight;
        ++no;
      } else if (s.interaction.origin == Origin::injected_noise) {
        si += s.weight;
        ++ni;
      }
    }
    out.mean_weight_organic = no ? so / static_cast<double>(no) : 0.0;
    out.mean_weight_injected = ni ? si / static_cast<double>(ni) : 0.0;

    const auto vocab = Vocabulary::from_split(data.split);
    const auto samples = encode_samples(std::span<const WeightedSample>(weighted), vocab);
    const auto validation = encode_samples(std::span<const Interaction>(data.split.validation), vocab);
    const auto test = encode_samples(std::span<const Interaction>(data.split.test), vocab);
    auto result = train(make_model(vocab, train_cfg), samples, validation, train_cfg);
    out.trace = std::move(result.trace);
    out.best_epoch = result.best_epoch;
    out.test = evaluate_model(result.model, test);
    out.model = std::make_shared<const CtrModel>(std::move(result.model));
    out.ok = true;
  } catch (const std::exception& e) {
    out.ok = false;
    out.error = e.what();
  }
  return out;
}

struct GridSpec {
  std::vector<double> noise{0.0};
  std::vector<double> alphas{0.4, 1.0};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  double beta = 5.0;
  MuMode mu;
};

using CellCallback = std::function<void(const CellOutcome&)>;

// Runs every (noise, alpha, seed) cell. The result is in noise-major, seed,
// alpha order regardless of `jobs`; with jobs > 1 the callback fires in
// completion order, serialized. Failures are recorded in the outcome and do
// not stop the grid.
inline std::vector<CellOutcome> run_grid(const PreparedData& data, const EmbeddingTable& table,
                                         const GridSpec& grid, const TrainConfig& train_cfg,
                                         const GapFill* fill = nullptr, const CellCallback& on_cell = {},
                                         std::size_t jobs = 1) {
  const std::size_t n_alpha = grid.alphas.size();
  std::vector<std::pair<double, std::uint64_t>> groups;
  for (double noise : grid.noise) {
    for (auto seed : grid.seeds) groups.emplace_back(noise, seed);
  }
  std::vector<CellOutcome> out(groups.size() * n_alpha);
  std::mutex callback_mutex;
  std::atomic<std::size_t> next{0};

  const auto worker = [&] {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      const auto [noise, seed] = groups[g];
      std::optional<CorruptedTrain> corrupted;
      std::string failure;
      try {
        corrupted = corrupt_and_score(data, table, noise, seed, fill);
      } catch (const std::exception& e) {
        failure = e.what();
      }
      for (std::size_t a = 0; a < n_alpha; ++a) {
        const double alpha = grid.alphas[a];
        CellOutcome cell;
        if (corrupted) {
          cell = run_cell(data, *corrupted, {noise, alpha, seed}, grid.beta, grid.mu, train_cfg);
        } else {
          cell.spec = {noise, alpha, seed};
          cell.error = failure;
        }
        if (on_cell) {
          std::lock_guard lock(callback_mutex);
          on_cell(cell);
        }
        cell.model.reset();
        out[g * n_alpha + a] = std::move(cell);
      }
    }
  };

  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, groups.size()));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }
  return out;
}

}  // namespace said
