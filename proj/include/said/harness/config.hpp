#pragma once

// Experiment configuration: a line-oriented `key = value` file with
// `[section]` headers. Keys are addressed as `section.key`; `#` starts a
// comment. Every key has a default, unknown keys are rejected, and the config
// hash is FNV-1a over the canonical `section.key = value` listing of all
// effective values in key order.

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "said/corpus.hpp"
#include "said/error.hpp"
#include "said/harness/experiment.hpp"
#include "said/hash.hpp"
#include "said/model.hpp"
#include "said/synthetic.hpp"

namespace said {

using ConfigMap = std::map<std::string, std::string>;

inline const ConfigMap& config_defaults() {
  static const ConfigMap defaults = {
      {"dataset.kind", "movielens"},
      {"dataset.ratings", "data/ml-1m/ratings.dat"},
      {"dataset.items", "data/ml-1m/movies.dat"},
      {"dataset.min_rating", "4"},
      {"dataset.core", "0"},
      {"dataset.split", "0.8,0.1,0.1"},
      {"dataset.negatives", "1"},
      {"dataset.seed", "2024"},
      {"synthetic.users", "500"},
      {"synthetic.items", "200"},
      {"synthetic.topics", "2"},
      {"synthetic.positives_per_user", "40"},
      {"synthetic.exploration", "0"},
      {"synthetic.subtopics", "5"},
      {"synthetic.preferred_subtopics", "2"},
      {"synthetic.subtopic_affinity", "0.65"},
      {"synthetic.groups", "5"},
      {"synthetic.cluster_size", "10"},
      {"synthetic.popularity_exponent", "1"},
      {"synthetic.seed", "7"},
      {"semantics.k", "10"},
      {"semantics.encoder", "fallback"},
      {"semantics.fallback_dim", "384"},
      {"semantics.hash_seed", "0"},
      {"semantics.fill_gaps", "true"},
      {"weights.alpha", "0.4"},
      {"weights.beta", "5"},
      {"weights.mu", "global_mean"},
      {"grid.noise", "0,0.1,0.2,0.3,0.4,0.5"},
      {"grid.alpha", "0,0.2,0.4,0.6,0.8,1"},
      {"grid.seeds", "1,2,3,4,5"},
      {"grid.jobs", "1"},
      {"train.learning_rate", "0.001"},
      {"train.batch_size", "2048"},
      {"train.epochs", "30"},
      {"train.patience", "3"},
      {"train.embedding_dim", "64"},
      {"train.hidden", "256,128,64"},
      {"train.clip_epsilon", "1e-7"},
      {"train.adam_beta1", "0.9"},
      {"train.adam_beta2", "0.999"},
      {"train.adam_eps", "1e-8"},
      {"train.init_scale", "0.05"},
      {"output.dir", "out"},
      {"output.checkpoints", "false"},
  };
  return defaults;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return std::string(s.substr(b, e - b + 1));
}

inline void set_key(ConfigMap& map, const std::string& key, const std::string& value, const std::string& where) {
  if (!config_defaults().contains(key)) throw ConfigError(where + ": unknown config key '" + key + "'");
  map[key] = value;
}

template <typename T>
T number_of(const ConfigMap& m, const std::string& key) {
  T v{};
  if (!parse_number(std::string_view(m.at(key)), v)) {
    throw ConfigError("config key '" + key + "': cannot parse '" + m.at(key) + "'");
  }
  return v;
}

template <typename T>
std::vector<T> list_of(const ConfigMap& m, const std::string& key) {
  std::vector<T> out;
  const std::string& text = m.at(key);
  if (trim(text).empty()) return out;
  for (auto tok : split_on(text, ",")) {
    T v{};
    if (!parse_number(std::string_view(trim(tok)), v)) {
      throw ConfigError("config key '" + key + "': cannot parse list element '" + std::string(tok) + "'");
    }
    out.push_back(v);
  }
  return out;
}

inline bool bool_of(const ConfigMap& m, const std::string& key) {
  const auto& v = m.at(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

}  // namespace detail

inline ConfigMap parse_config_text(std::string_view text, const std::string& source = "<config>") {
  ConfigMap map;
  std::string section;
  std::size_t lineno = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(where + ": expected key = value");
    const std::string key = detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = detail::trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + ": empty key");
    detail::set_key(map, section.empty() ? key : section + "." + key, value, where);
  }
  return map;
}

inline ConfigMap load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

// Applies `section.key=value` overrides.
inline void apply_overrides(ConfigMap& map, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    detail::set_key(map, detail::trim(std::string_view(o).substr(0, eq)),
                    detail::trim(std::string_view(o).substr(eq + 1)), "override");
  }
}

struct ExperimentConfig {
  ConfigMap values;  // effective values, defaults filled in

  std::string kind;
  std::string ratings_path, items_path;
  double min_rating = 4.0;
  std::size_t core = 0;
  SplitRatios split;
  std::size_t negatives = 1;
  std::uint64_t data_seed = 2024;
  SyntheticSpec synthetic;

  std::size_t profile_k = 10;
  std::string encoder;  // "fallback" or "table:<path>"
  FallbackEncoder fallback;
  bool fill_gaps = true;

  GridSpec grid;
  std::size_t jobs = 1;  // cells trained concurrently
  double said_alpha = 0.4;
  TrainConfig train;

  std::string output_dir;
  bool checkpoints = false;

  std::string canonical_text() const {
    std::string out;
    for (const auto& [k, v] : values) out += k + " = " + v + "\n";
    return out;
  }

  std::string hash() const { return hex64(fnv1a(canonical_text())); }

  bool uses_table() const { return encoder.starts_with("table:"); }
  std::string table_path() const { return encoder.substr(6); }
};

inline ExperimentConfig make_config(const ConfigMap& user) {
  using namespace detail;
  ExperimentConfig c;
  c.values = config_defaults();
  for (const auto& [k, v] : user) c.values[k] = v;
  const auto& m = c.values;

  c.kind = m.at("dataset.kind");
  if (c.kind != "movielens" && c.kind != "tsv" && c.kind != "synthetic") {
    throw ConfigError("dataset.kind must be movielens, tsv or synthetic");
  }
  c.ratings_path = m.at("dataset.ratings");
  c.items_path = m.at("dataset.items");
  c.min_rating = number_of<double>(m, "dataset.min_rating");
  c.core = number_of<std::size_t>(m, "dataset.core");
  const auto ratios = list_of<double>(m, "dataset.split");
  if (ratios.size() != 3) throw ConfigError("dataset.split needs three fractions");
  c.split = {ratios[0], ratios[1], ratios[2]};
  c.split.validate();
  c.negatives = number_of<std::size_t>(m, "dataset.negatives");
  if (c.negatives == 0) throw ConfigError("dataset.negatives must be positive");
  c.data_seed = number_of<std::uint64_t>(m, "dataset.seed");

  c.synthetic.n_users = number_of<std::size_t>(m, "synthetic.users");
  c.synthetic.n_items = number_of<std::size_t>(m, "synthetic.items");
  c.synthetic.n_topics = number_of<std::size_t>(m, "synthetic.topics");
  c.synthetic.positives_per_user = number_of<std::size_t>(m, "synthetic.positives_per_user");
  c.synthetic.exploration_fraction = number_of<double>(m, "synthetic.exploration");
  c.synthetic.subtopics_per_topic = number_of<std::size_t>(m, "synthetic.subtopics");
  c.synthetic.preferred_subtopics = number_of<std::size_t>(m, "synthetic.preferred_subtopics");
  c.synthetic.subtopic_affinity = number_of<double>(m, "synthetic.subtopic_affinity");
  c.synthetic.groups_per_topic = number_of<std::size_t>(m, "synthetic.groups");
  c.synthetic.cluster_size = number_of<std::size_t>(m, "synthetic.cluster_size");
  c.synthetic.popularity_exponent = number_of<double>(m, "synthetic.popularity_exponent");
  c.synthetic.seed = number_of<std::uint64_t>(m, "synthetic.seed");

  c.profile_k = number_of<std::size_t>(m, "semantics.k");
  if (c.profile_k == 0) throw ConfigError("semantics.k must be positive");
  c.encoder = m.at("semantics.encoder");
  if (c.encoder != "fallback" && !(c.encoder.starts_with("table:") && c.encoder.size() > 6)) {
    throw ConfigError("semantics.encoder must be 'fallback' or 'table:<path>'");
  }
  c.fallback.dim = number_of<std::size_t>(m, "semantics.fallback_dim");
  if (c.fallback.dim < 16) throw ConfigError("semantics.fallback_dim must be >= 16");
  c.fallback.hash_seed = number_of<std::uint64_t>(m, "semantics.hash_seed");
  c.fill_gaps = bool_of(m, "semantics.fill_gaps");

  c.said_alpha = number_of<double>(m, "weights.alpha");
  c.grid.beta = number_of<double>(m, "weights.beta");
  c.grid.mu = MuMode::parse(m.at("weights.mu"));
  WeightConfig{c.said_alpha, c.grid.beta, 0.0}.validate();

  c.grid.noise = list_of<double>(m, "grid.noise");
  c.grid.alphas = list_of<double>(m, "grid.alpha");
  c.grid.seeds = list_of<std::uint64_t>(m, "grid.seeds");
  if (c.grid.noise.empty() || c.grid.alphas.empty() || c.grid.seeds.empty()) {
    throw ConfigError("grid.noise, grid.alpha and grid.seeds must be non-empty");
  }
  for (double r : c.grid.noise) NoiseSpec{r, 0}.validate();
  for (double a : c.grid.alphas) WeightConfig{a, c.grid.beta, 0.0}.validate();
  c.jobs = number_of<std::size_t>(m, "grid.jobs");
  if (c.jobs == 0) throw ConfigError("grid.jobs must be positive");
  {
    auto seeds = c.grid.seeds;
    std::sort(seeds.begin(), seeds.end());
    if (std::adjacent_find(seeds.begin(), seeds.end()) != seeds.end()) {
      throw ConfigError("grid.seeds must be distinct");
    }
  }

  c.train.learning_rate = number_of<double>(m, "train.learning_rate");
  c.train.batch_size = number_of<std::size_t>(m, "train.batch_size");
  c.train.epochs = number_of<std::size_t>(m, "train.epochs");
  c.train.patience = number_of<std::size_t>(m, "train.patience");
  c.train.embedding_dim = number_of<std::size_t>(m, "train.embedding_dim");
  c.train.hidden = list_of<std::size_t>(m, "train.hidden");
  c.train.clip_epsilon = number_of<double>(m, "train.clip_epsilon");
  c.train.adam_beta1 = number_of<double>(m, "train.adam_beta1");
  c.train.adam_beta2 = number_of<double>(m, "train.adam_beta2");
  c.train.adam_eps = number_of<double>(m, "train.adam_eps");
  c.train.init_scale = number_of<double>(m, "train.init_scale");
  c.train.validate();

  c.output_dir = m.at("output.dir");
  c.checkpoints = bool_of(m, "output.checkpoints");
  return c;
}

}  // namespace said
