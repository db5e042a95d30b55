#pragma once

// Experiment report (JSON) and the CSV tables derived from it.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "said/error.hpp"
#include "said/harness/experiment.hpp"
#include "said/metrics.hpp"

namespace said {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kReportFormat = "said-report/1";

struct Provenance {
  std::string config_hash;
  std::string started;
  std::string finished;
  std::map<std::string, std::string> data_checksums;
};

struct AggregateRow {
  double noise = 0.0;
  double alpha = 0.0;
  std::size_t failed = 0;
  std::optional<AggregateResult> result;  // empty when every seed failed
};

// Aggregates ok cells per (noise, alpha), ascending by noise then alpha.
inline std::vector<AggregateRow> aggregate_cells(const std::vector<CellOutcome>& cells) {
  std::map<std::pair<double, double>, std::pair<std::vector<EvalResult>, std::size_t>> groups;
  for (const auto& c : cells) {
    auto& g = groups[{c.spec.noise, c.spec.alpha}];
    if (c.ok) {
      g.first.push_back(c.test);
    } else {
      ++g.second;
    }
  }
  std::vector<AggregateRow> rows;
  for (const auto& [key, g] : groups) {
    AggregateRow r{key.first, key.second, g.second, std::nullopt};
    if (!g.first.empty()) r.result = aggregate(g.first);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline Json cell_to_json(const CellOutcome& c) {
  Json j;
  j["noise"] = c.spec.noise;
  j["alpha"] = c.spec.alpha;
  j["seed"] = c.spec.seed;
  j["status"] = c.ok ? "ok" : "failed";
  if (!c.ok) {
    j["error"] = c.error;
    return j;
  }
  j["auc"] = c.test.auc;
  j["logloss"] = c.test.logloss;
  j["n_pos"] = c.test.n_pos;
  j["n_neg"] = c.test.n_neg;
  j["best_epoch"] = c.best_epoch;
  j["epochs_run"] = c.trace.size();
  j["mu"] = c.mu;
  j["injected"] = c.injected;
  j["mean_weight_organic"] = c.mean_weight_organic;
  j["mean_weight_injected"] = c.mean_weight_injected;
  return j;
}

inline CellOutcome cell_from_json(const Json& j) {
  CellOutcome c;
  c.spec.noise = j.at("noise").get<double>();
  c.spec.alpha = j.at("alpha").get<double>();
  c.spec.seed = j.at("seed").get<std::uint64_t>();
  c.ok = j.at("status").get<std::string>() == "ok";
  if (!c.ok) {
    c.error = j.value("error", std::string{});
    return c;
  }
  c.test.auc = j.at("auc").get<double>();
  c.test.logloss = j.at("logloss").get<double>();
  c.test.n_pos = j.value("n_pos", std::size_t{0});
  c.test.n_neg = j.value("n_neg", std::size_t{0});
  c.best_epoch = j.value("best_epoch", std::size_t{0});
  c.mu = j.value("mu", 0.0);
  c.injected = j.value("injected", std::size_t{0});
  c.mean_weight_organic = j.value("mean_weight_organic", 0.0);
  c.mean_weight_injected = j.value("mean_weight_injected", 0.0);
  return c;
}

struct ExperimentReport {
  Provenance provenance;
  Json config = Json::object();
  double said_alpha = 0.4;
  std::vector<CellOutcome> cells;

  bool any_failed() const {
    return std::any_of(cells.begin(), cells.end(), [](const CellOutcome& c) { return !c.ok; });
  }
};

inline Json summary_to_json(const MetricSummary& s) {
  return Json{{"mean", s.mean}, {"std", s.std}, {"min", s.min}, {"max", s.max}};
}

inline Json report_to_json(const ExperimentReport& r) {
  Json j;
  j["format"] = kReportFormat;
  j["config_hash"] = r.provenance.config_hash;
  j["provenance"] = {{"started", r.provenance.started},
                     {"finished", r.provenance.finished},
                     {"data_checksums", r.provenance.data_checksums}};
  j["config"] = r.config;
  j["said_alpha"] = r.said_alpha;
  Json cells = Json::array();
  for (const auto& c : r.cells) cells.push_back(cell_to_json(c));
  j["cells"] = std::move(cells);
  Json aggs = Json::array();
  for (const auto& row : aggregate_cells(r.cells)) {
    Json a{{"noise", row.noise}, {"alpha", row.alpha}, {"failed", row.failed}};
    if (row.result) {
      a["n_seeds"] = row.result->per_seed.size();
      a["auc"] = summary_to_json(row.result->auc);
      a["logloss"] = summary_to_json(row.result->logloss);
    } else {
      a["n_seeds"] = 0;
    }
    aggs.push_back(std::move(a));
  }
  j["aggregates"] = std::move(aggs);
  return j;
}

inline ExperimentReport report_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != kReportFormat) {
      throw DataError("unsupported report format '" + j.at("format").get<std::string>() + "'");
    }
    ExperimentReport r;
    r.provenance.config_hash = j.at("config_hash").get<std::string>();
    const auto& p = j.at("provenance");
    r.provenance.started = p.value("started", std::string{});
    r.provenance.finished = p.value("finished", std::string{});
    if (p.contains("data_checksums")) {
      r.provenance.data_checksums = p.at("data_checksums").get<std::map<std::string, std::string>>();
    }
    r.config = j.value("config", Json::object());
    r.said_alpha = j.at("said_alpha").get<double>();
    for (const auto& c : j.at("cells")) r.cells.push_back(cell_from_json(c));
    return r;
  } catch (const Json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
}

inline void save_report(const std::string& path, const ExperimentReport& r) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << report_to_json(r).dump(2) << '\n';
}

inline ExperimentReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report '" + path + "'");
  Json j;
  try {
    j = Json::parse(in);
  } catch (const Json::exception& e) {
    throw DataError("malformed report '" + path + "': " + e.what());
  }
  return report_from_json(j);
}

// ---------------------------------------------------------------------------
// CSV tables.

namespace detail {

inline std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

inline const AggregateRow* find_row(const std::vector<AggregateRow>& rows, double noise, double alpha) {
  for (const auto& r : rows) {
    if (r.noise == noise && r.alpha == alpha && r.result) return &r;
  }
  return nullptr;
}

}  // namespace detail

inline constexpr double kBaselineAlpha = 1.0;

// AUC/Logloss vs alpha for every noise level, ascending by noise then alpha.
inline void write_alpha_sweep(std::ostream& out, const std::vector<AggregateRow>& rows) {
  out << "noise,alpha,n_seeds,failed,auc_mean,auc_std,logloss_mean,logloss_std\n";
  for (const auto& r : rows) {
    out << detail::fmt(r.noise) << ',' << detail::fmt(r.alpha) << ','
        << (r.result ? r.result->per_seed.size() : 0) << ',' << r.failed << ',';
    if (r.result) {
      out << detail::fmt(r.result->auc.mean) << ',' << detail::fmt(r.result->auc.std) << ','
          << detail::fmt(r.result->logloss.mean) << ',' << detail::fmt(r.result->logloss.std);
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

// Baseline (alpha = 1) and SAID series against noise ratio.
inline void write_noise_sweep(std::ostream& out, const std::vector<AggregateRow>& rows, double said_alpha) {
  out << "noise,baseline_auc_mean,baseline_auc_std,said_auc_mean,said_auc_std,auc_gap,"
         "baseline_logloss_mean,said_logloss_mean\n";
  std::vector<double> noises;
  for (const auto& r : rows) noises.push_back(r.noise);
  std::sort(noises.begin(), noises.end());
  noises.erase(std::unique(noises.begin(), noises.end()), noises.end());
  for (double n : noises) {
    const auto* base = detail::find_row(rows, n, kBaselineAlpha);
    const auto* said = detail::find_row(rows, n, said_alpha);
    out << detail::fmt(n) << ',';
    out << (base ? detail::fmt(base->result->auc.mean) : "") << ','
        << (base ? detail::fmt(base->result->auc.std) : "") << ',';
    out << (said ? detail::fmt(said->result->auc.mean) : "") << ','
        << (said ? detail::fmt(said->result->auc.std) : "") << ',';
    out << (base && said ? detail::fmt(said->result->auc.mean - base->result->auc.mean) : "") << ',';
    out << (base ? detail::fmt(base->result->logloss.mean) : "") << ','
        << (said ? detail::fmt(said->result->logloss.mean) : "") << '\n';
  }
}

// Method comparison at the lowest noise level present: unweighted baseline
// versus SAID, with relative AUC change.
inline void write_comparison(std::ostream& out, const std::vector<AggregateRow>& rows, double said_alpha) {
  out << "method,alpha,noise,n_seeds,auc_mean,logloss_mean,relative_auc_change_pct\n";
  if (rows.empty()) return;
  double noise = rows.front().noise;
  for (const auto& r : rows) noise = std::min(noise, r.noise);
  const auto* base = detail::find_row(rows, noise, kBaselineAlpha);
  const auto* said = detail::find_row(rows, noise, said_alpha);
  const auto line = [&](const char* name, const AggregateRow* r, double alpha) {
    if (!r) return;
    out << name << ',' << detail::fmt(alpha) << ',' << detail::fmt(noise) << ','
        << r->result->per_seed.size() << ',' << detail::fmt(r->result->auc.mean) << ','
        << detail::fmt(r->result->logloss.mean) << ',';
    if (base && r != base) {
      out << detail::fmt(100.0 * (r->result->auc.mean - base->result->auc.mean) / base->result->auc.mean);
    }
    out << '\n';
  };
  line("unweighted", base, kBaselineAlpha);
  if (said_alpha != kBaselineAlpha) line("said", said, said_alpha);
}

}  // namespace said
