#pragma once

// prepare / run / report / weights-audit on top of the experiment pieces.
//
// Layout under output.dir:
//   data/        train.tsv validation.tsv test.tsv items.tsv profiles.tsv
//                texts.tsv (embedding manifest) prepare.json
//   report.json  traces/  checkpoints/
// Tables from `report` land next to the report unless another dir is given.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "said/corpus.hpp"
#include "said/harness/config.hpp"
#include "said/harness/experiment.hpp"
#include "said/harness/report.hpp"
#include "said/hash.hpp"
#include "said/reweight.hpp"
#include "said/semantics.hpp"
#include "said/synthetic.hpp"

namespace said {

namespace fs = std::filesystem;

inline constexpr std::string_view kPreparedFormat = "said-prepared/1";

using LogFn = std::function<void(const std::string&)>;

namespace detail {

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw DataError("cannot write '" + path.string() + "'");
}

template <typename F>
std::string render(F&& f) {
  std::ostringstream os;
  f(os);
  return os.str();
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void require_file(const std::string& path, const std::string& key) {
  if (!fs::is_regular_file(path)) {
    throw DataError("input file '" + path + "' not found; set " + key + " to an existing file");
  }
}

inline std::string fmt_key(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace detail

// Keys that shape the prepared artifacts; `run` refuses data prepared under
// different values.
inline std::string data_signature(const ExperimentConfig& cfg) {
  std::string text;
  for (const auto& [k, v] : cfg.values) {
    if (k.starts_with("dataset.") || k.starts_with("synthetic.") || k == "semantics.k") {
      text += k + " = " + v + "\n";
    }
  }
  return hex64(fnv1a(text));
}

inline Corpus load_corpus(const ExperimentConfig& cfg) {
  Corpus corpus;
  if (cfg.kind == "synthetic") {
    corpus = generate_synthetic(cfg.synthetic).corpus;
  } else {
    detail::require_file(cfg.ratings_path, "dataset.ratings");
    detail::require_file(cfg.items_path, "dataset.items");
    corpus = cfg.kind == "movielens" ? load_movielens(cfg.ratings_path, cfg.items_path, cfg.min_rating)
                                     : load_tsv_corpus(cfg.ratings_path, cfg.items_path, cfg.min_rating);
  }
  return core_filter(std::move(corpus), cfg.core);
}

inline PreparedData prepare(const ExperimentConfig& cfg) {
  return prepare_data(load_corpus(cfg), cfg.split, cfg.negatives, cfg.data_seed, cfg.profile_k);
}

inline fs::path data_dir(const ExperimentConfig& cfg) { return fs::path(cfg.output_dir) / "data"; }

// Writes every prepared artifact. No timestamps: reruns are byte-identical.
inline void write_prepared(const fs::path& dir, const PreparedData& data, const ExperimentConfig& cfg) {
  fs::create_directories(dir);
  const auto& s = data.split;
  detail::write_file(dir / "train.tsv", detail::render([&](std::ostream& o) { write_interactions(o, s.train); }));
  detail::write_file(dir / "validation.tsv",
                     detail::render([&](std::ostream& o) { write_interactions(o, s.validation); }));
  detail::write_file(dir / "test.tsv", detail::render([&](std::ostream& o) { write_interactions(o, s.test); }));
  detail::write_file(dir / "items.tsv", detail::render([&](std::ostream& o) {
    o << "item_id\ttitle\tcategory\n";
    std::vector<Id> ids;
    for (const auto& [id, t] : data.texts) ids.push_back(id);
    std::sort(ids.begin(), ids.end());
    for (Id id : ids) {
      const auto& t = data.texts.at(id);
      o << id << '\t' << escape_field(t.title) << '\t' << escape_field(t.category.value_or("")) << '\n';
    }
  }));
  detail::write_file(dir / "profiles.tsv", detail::render([&](std::ostream& o) {
    o << "user_id\ttext\tsource_items\n";
    for (const auto& p : data.profiles) {
      o << p.user_id << '\t' << escape_field(p.text) << '\t';
      for (std::size_t i = 0; i < p.source_items.size(); ++i) o << (i ? " " : "") << p.source_items[i];
      o << '\n';
    }
  }));
  detail::write_file(dir / "texts.tsv", detail::render([&](std::ostream& o) {
    write_manifest(o, make_manifest(s, data.texts, data.profiles));
  }));

  std::size_t pos = 0, neg = 0;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (const auto& x : *part) (x.label == 1 ? pos : neg) += 1;
  }
  Json j;
  j["format"] = kPreparedFormat;
  j["data_signature"] = data_signature(cfg);
  j["counts"] = {{"users", s.users.size()},
                 {"items", s.items.size()},
                 {"positives", pos},
                 {"negatives", neg},
                 {"train", s.train.size()},
                 {"validation", s.validation.size()},
                 {"test", s.test.size()},
                 {"profiles", data.profiles.size()}};
  j["warnings"] = data.warnings;
  j["users"] = s.users;
  j["items"] = s.items;
  detail::write_file(dir / "prepare.json", j.dump(1) + "\n");
}

inline PreparedData read_prepared(const fs::path& dir, const std::string& expected_signature = {}) {
  if (!fs::is_regular_file(dir / "prepare.json")) {
    throw DataError("no prepared data in '" + dir.string() + "'; run `said prepare` with the same config first");
  }
  Json meta;
  try {
    meta = Json::parse(detail::read_file(dir / "prepare.json"));
    if (meta.at("format").get<std::string>() != kPreparedFormat) throw DataError("unsupported prepared format");
  } catch (const Json::exception& e) {
    throw DataError("malformed '" + (dir / "prepare.json").string() + "': " + e.what());
  }
  if (!expected_signature.empty() && meta.value("data_signature", std::string{}) != expected_signature) {
    throw DataError("data in '" + dir.string() +
                    "' was prepared under different dataset settings; rerun `said prepare`");
  }
  PreparedData data;
  auto& s = data.split;
  s.users = meta.at("users").get<std::vector<Id>>();
  s.items = meta.at("items").get<std::vector<Id>>();
  data.warnings = meta.value("warnings", std::vector<std::string>{});
  const auto interactions = [&](const char* name) {
    auto in = detail::open_input((dir / name).string());
    return read_interactions(in, (dir / name).string());
  };
  s.train = interactions("train.tsv");
  s.validation = interactions("validation.tsv");
  s.test = interactions("test.tsv");
  rebuild_histories(s);

  const auto rows = [&](const char* name, std::size_t fields,
                        const std::function<void(const std::vector<std::string_view>&, std::size_t)>& f) {
    const std::string path = (dir / name).string();
    auto in = detail::open_input(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      detail::chomp(line);
      if (lineno == 1 || line.empty()) continue;
      const auto parts = detail::split_on(line, "\t");
      if (parts.size() != fields) throw ParseError(path, lineno, "expected " + std::to_string(fields) + " fields");
      f(parts, lineno);
    }
  };
  rows("items.tsv", 3, [&](const auto& f, std::size_t lineno) {
    Id id = 0;
    if (!detail::parse_number(f[0], id)) throw ParseError((dir / "items.tsv").string(), lineno, "bad item id");
    ItemText t{id, unescape_field(f[1]), std::nullopt};
    if (!f[2].empty()) t.category = unescape_field(f[2]);
    data.texts[id] = std::move(t);
  });
  rows("profiles.tsv", 3, [&](const auto& f, std::size_t lineno) {
    ProfileText p;
    if (!detail::parse_number(f[0], p.user_id)) {
      throw ParseError((dir / "profiles.tsv").string(), lineno, "bad user id");
    }
    p.text = unescape_field(f[1]);
    if (!f[2].empty()) {
      for (auto tok : detail::split_on(f[2], " ")) {
        Id id = 0;
        if (!detail::parse_number(tok, id)) {
          throw ParseError((dir / "profiles.tsv").string(), lineno, "bad source item id");
        }
        p.source_items.push_back(id);
      }
    }
    data.profiles.push_back(std::move(p));
  });
  return data;
}

// Embedding table for a run: the configured SAIDEMB/TSV file, or the
// fallback encoder over the prepared manifest.
inline EmbeddingTable embeddings_for(const ExperimentConfig& cfg, const fs::path& dir) {
  if (cfg.uses_table()) return load_embedding_table(cfg.table_path());
  auto in = detail::open_input((dir / "texts.tsv").string());
  return encode_manifest(read_manifest(in, (dir / "texts.tsv").string()), cfg.fallback);
}

inline std::optional<GapFill> gap_fill_for(const ExperimentConfig& cfg, const EmbeddingTable& table,
                                           const PreparedData& data) {
  if (!cfg.fill_gaps) return std::nullopt;
  FallbackEncoder enc = cfg.fallback;
  enc.dim = table.dim();
  return GapFill{enc, &data.texts};
}

inline std::string cell_stem(const CellSpec& c) {
  return "noise" + detail::fmt_key(c.noise) + "_alpha" + detail::fmt_key(c.alpha) + "_seed" +
         std::to_string(c.seed);
}

inline Json config_json(const ExperimentConfig& cfg) {
  Json j = Json::object();
  for (const auto& [k, v] : cfg.values) j[k] = v;
  return j;
}

// Full grid over prepared data. Writes report.json, per-cell loss traces and,
// if enabled, checkpoints. Never throws for a failed cell.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg, const LogFn& log = {}) {
  const fs::path dir = data_dir(cfg);
  const auto data = read_prepared(dir, data_signature(cfg));
  const auto table = embeddings_for(cfg, dir);
  const auto fill = gap_fill_for(cfg, table, data);

  ExperimentReport report;
  report.provenance.config_hash = cfg.hash();
  report.provenance.started = detail::utc_now();
  for (const char* name : {"train.tsv", "validation.tsv", "test.tsv", "texts.tsv"}) {
    report.provenance.data_checksums[name] = hex64(fnv1a(detail::read_file(dir / name)));
  }
  if (cfg.uses_table()) {
    report.provenance.data_checksums["embeddings"] = hex64(fnv1a(detail::read_file(cfg.table_path())));
  }
  report.config = config_json(cfg);
  report.said_alpha = cfg.said_alpha;

  const fs::path out(cfg.output_dir);
  fs::create_directories(out / "traces");
  if (cfg.checkpoints) fs::create_directories(out / "checkpoints");
  std::size_t done = 0;
  const std::size_t total = cfg.grid.noise.size() * cfg.grid.alphas.size() * cfg.grid.seeds.size();
  report.cells = run_grid(
      data, table, cfg.grid, cfg.train, fill ? &*fill : nullptr,
      [&](const CellOutcome& c) {
        ++done;
        std::string line = "[" + std::to_string(done) + "/" + std::to_string(total) + "] " + cell_stem(c.spec);
        if (c.ok) {
          try {
            const auto stem = cell_stem(c.spec);
            detail::write_file(out / "traces" / (stem + ".csv"),
                               detail::render([&](std::ostream& o) { write_loss_trace(o, c.trace); }));
            if (cfg.checkpoints && c.model) {
              std::ofstream ck(out / "checkpoints" / (stem + ".ckpt"), std::ios::binary);
              write_checkpoint(ck, *c.model);
            }
          } catch (const std::exception& e) {
            line += " (artifact write failed: " + std::string(e.what()) + ")";
          }
          line += " auc=" + detail::fmt(c.test.auc) + " best_epoch=" + std::to_string(c.best_epoch);
        } else {
          line += " FAILED: " + c.error;
        }
        if (log) log(line);
      },
      cfg.jobs);
  report.provenance.finished = detail::utc_now();
  save_report((out / "report.json").string(), report);
  return report;
}

struct ReportTables {
  fs::path noise_sweep, alpha_sweep, comparison;
};

inline ReportTables write_report_tables(const ExperimentReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  const auto rows = aggregate_cells(report.cells);
  ReportTables t{out_dir / "noise_sweep.csv", out_dir / "alpha_sweep.csv", out_dir / "comparison.csv"};
  detail::write_file(t.noise_sweep,
                     detail::render([&](std::ostream& o) { write_noise_sweep(o, rows, report.said_alpha); }));
  detail::write_file(t.alpha_sweep, detail::render([&](std::ostream& o) { write_alpha_sweep(o, rows); }));
  detail::write_file(t.comparison,
                     detail::render([&](std::ostream& o) { write_comparison(o, rows, report.said_alpha); }));
  return t;
}

// Similarities and weights for one corrupted train split.
inline void weights_audit(const ExperimentConfig& cfg, double noise, std::uint64_t seed, std::ostream& out) {
  const fs::path dir = data_dir(cfg);
  const auto data = read_prepared(dir, data_signature(cfg));
  const auto table = embeddings_for(cfg, dir);
  const auto fill = gap_fill_for(cfg, table, data);
  const auto corrupted = corrupt_and_score(data, table, noise, seed, fill ? &*fill : nullptr);
  const WeightConfig wc{cfg.said_alpha, cfg.grid.beta, cfg.grid.mu.fixed.value_or(corrupted.sims.mu())};
  write_weight_audit(out, corrupted.sims, wc);
}

}  // namespace said
