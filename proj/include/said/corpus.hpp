#pragma once

// Interaction data: ingestion, chronological splitting, negative sampling and
// controlled label-noise injection.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "said/error.hpp"
#include "said/rng.hpp"

namespace said {

using Id = std::int64_t;

enum class Origin : std::uint8_t { organic_positive, sampled_negative, injected_noise };

inline std::string_view to_string(Origin o) {
  switch (o) {
    case Origin::organic_positive: return "organic_positive";
    case Origin::sampled_negative: return "sampled_negative";
    case Origin::injected_noise: return "injected_noise";
  }
  return "?";
}

inline Origin origin_from_string(std::string_view s) {
  if (s == "organic_positive") return Origin::organic_positive;
  if (s == "sampled_negative") return Origin::sampled_negative;
  if (s == "injected_noise") return Origin::injected_noise;
  throw DataError("unknown interaction origin '" + std::string(s) + "'");
}

struct Interaction {
  Id user_id = 0;
  Id item_id = 0;
  int label = 1;
  std::int64_t timestamp = 0;
  Origin origin = Origin::organic_positive;

  friend bool operator==(const Interaction&, const Interaction&) = default;
};

struct ItemText {
  Id item_id = 0;
  std::string title;
  std::optional<std::string> category;
};

using ItemTextMap = std::unordered_map<Id, ItemText>;

struct DatasetSplit {
  std::vector<Interaction> train;
  std::vector<Interaction> validation;
  std::vector<Interaction> test;
  std::vector<Id> users;  // sorted, unique
  std::vector<Id> items;  // sorted, unique; the catalog negatives are drawn from
  std::map<Id, std::vector<Id>> histories;  // train positives, ascending timestamp
};

struct NoiseSpec {
  double ratio = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(ratio >= 0.0 && ratio <= 0.5)) {
      throw ConfigError("noise ratio must lie in [0, 0.5], got " + std::to_string(ratio));
    }
  }
};

struct Corpus {
  std::vector<Interaction> interactions;  // retained positives
  std::vector<ItemText> items;            // one per catalog item, ascending id
  std::vector<Id> user_universe;          // every user with any rating
  std::vector<Id> item_universe;          // every item with any rating
  std::vector<std::string> warnings;
};

namespace detail {

inline std::vector<std::string_view> split_on(std::string_view line, std::string_view delim) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + delim.size();
  }
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  while (!s.empty() && (s.front() == ' ')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ')) s.remove_suffix(1);
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  return in;
}

inline void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

inline bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      extra = 3;
    } else {
      return false;
    }
    for (std::size_t k = 1; k <= extra; ++k) {
      if (i + k >= s.size() || (static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

}  // namespace detail

// MovieLens titles are ISO-8859-1. Text that is already valid UTF-8 is kept.
inline std::string to_utf8(std::string_view text) {
  if (detail::valid_utf8(text)) return std::string(text);
  std::string out;
  out.reserve(text.size() + 8);
  for (unsigned char c : text) {
    if (c < 0x80) {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back(static_cast<char>(0xc0 | (c >> 6)));
      out.push_back(static_cast<char>(0x80 | (c & 0x3f)));
    }
  }
  return out;
}

inline std::string synthetic_title(Id item) { return "item " + std::to_string(item); }

namespace detail {

struct RatingRow {
  Id user;
  Id item;
  double rating;
  std::int64_t ts;
};

inline Corpus assemble_corpus(const std::vector<RatingRow>& rows, ItemTextMap texts,
                              double min_rating) {
  Corpus c;
  std::set<Id> users, items;
  for (const auto& r : rows) {
    users.insert(r.user);
    items.insert(r.item);
    if (r.rating >= min_rating) {
      c.interactions.push_back({r.user, r.item, 1, r.ts, Origin::organic_positive});
    }
  }
  c.user_universe.assign(users.begin(), users.end());
  c.item_universe.assign(items.begin(), items.end());
  std::size_t missing = 0;
  for (Id item : c.item_universe) {
    auto it = texts.find(item);
    if (it == texts.end() || it->second.title.empty()) {
      ++missing;
      ItemText t{item, synthetic_title(item), std::nullopt};
      if (it != texts.end()) t.category = it->second.category;
      c.items.push_back(std::move(t));
    } else {
      c.items.push_back(std::move(it->second));
    }
  }
  if (missing > 0) {
    c.warnings.push_back(std::to_string(missing) +
                         " rated item(s) have no text; synthesized 'item <id>' titles");
  }
  return c;
}

}  // namespace detail

// Reads `UserID::MovieID::Rating::Timestamp` and `MovieID::Title::Genres`.
// Ratings >= min_rating become positives; the user and item universes cover
// every rating line regardless of the threshold.
inline Corpus load_movielens(const std::string& ratings_path, const std::string& movies_path,
                             double min_rating = 4.0) {
  std::vector<detail::RatingRow> rows;
  {
    auto in = detail::open_input(ratings_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      detail::chomp(line);
      if (line.empty()) continue;
      const auto f = detail::split_on(line, "::");
      detail::RatingRow r{};
      if (f.size() != 4 || !detail::parse_number(f[0], r.user) ||
          !detail::parse_number(f[1], r.item) || !detail::parse_number(f[2], r.rating) ||
          !detail::parse_number(f[3], r.ts)) {
        throw ParseError(ratings_path, lineno, "expected UserID::MovieID::Rating::Timestamp");
      }
      rows.push_back(r);
    }
  }
  ItemTextMap texts;
  {
    auto in = detail::open_input(movies_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      detail::chomp(line);
      if (line.empty()) continue;
      const auto f = detail::split_on(line, "::");
      Id id = 0;
      if (f.size() != 3 || !detail::parse_number(f[0], id)) {
        throw ParseError(movies_path, lineno, "expected MovieID::Title::Genres");
      }
      texts[id] = ItemText{id, to_utf8(f[1]), std::string(to_utf8(f[2]))};
    }
  }
  return detail::assemble_corpus(rows, std::move(texts), min_rating);
}

// Generic TSV layout: `user<TAB>item<TAB>rating<TAB>timestamp` plus
// `item<TAB>title<TAB>category` (category column optional).
inline Corpus load_tsv_corpus(const std::string& ratings_path, const std::string& items_path,
                              double min_rating = 4.0) {
  std::vector<detail::RatingRow> rows;
  {
    auto in = detail::open_input(ratings_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      detail::chomp(line);
      if (line.empty()) continue;
      const auto f = detail::split_on(line, "\t");
      detail::RatingRow r{};
      if (f.size() != 4 || !detail::parse_number(f[0], r.user) ||
          !detail::parse_number(f[1], r.item) || !detail::parse_number(f[2], r.rating) ||
          !detail::parse_number(f[3], r.ts)) {
        throw ParseError(ratings_path, lineno, "expected user<TAB>item<TAB>rating<TAB>timestamp");
      }
      rows.push_back(r);
    }
  }
  ItemTextMap texts;
  {
    auto in = detail::open_input(items_path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      detail::chomp(line);
      if (line.empty()) continue;
      const auto f = detail::split_on(line, "\t");
      Id id = 0;
      if (f.size() < 2 || f.size() > 3 || !detail::parse_number(f[0], id)) {
        throw ParseError(items_path, lineno, "expected item<TAB>title[<TAB>category]");
      }
      ItemText t{id, to_utf8(f[1]), std::nullopt};
      if (f.size() == 3 && !f[2].empty()) t.category = to_utf8(f[2]);
      texts[id] = std::move(t);
    }
  }
  return detail::assemble_corpus(rows, std::move(texts), min_rating);
}

// Iterative k-core pass over positives: drops users and items with fewer than
// min_count positives until stable. Universes shrink to the survivors.
inline Corpus core_filter(Corpus corpus, std::size_t min_count) {
  if (min_count <= 1) return corpus;
  auto& xs = corpus.interactions;
  while (true) {
    std::unordered_map<Id, std::size_t> uc, ic;
    for (const auto& x : xs) {
      ++uc[x.user_id];
      ++ic[x.item_id];
    }
    const auto before = xs.size();
    std::erase_if(xs, [&](const Interaction& x) {
      return uc[x.user_id] < min_count || ic[x.item_id] < min_count;
    });
    if (xs.size() == before) break;
  }
  std::set<Id> users, items;
  for (const auto& x : xs) {
    users.insert(x.user_id);
    items.insert(x.item_id);
  }
  corpus.user_universe.assign(users.begin(), users.end());
  corpus.item_universe.assign(items.begin(), items.end());
  std::erase_if(corpus.items, [&](const ItemText& t) { return !items.contains(t.item_id); });
  return corpus;
}

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;

  void validate() const {
    if (!(train > 0 && validation > 0 && test > 0) ||
        std::abs(train + validation + test - 1.0) > 1e-9) {
      throw ConfigError("split ratios must be positive and sum to 1");
    }
  }
};

inline void rebuild_histories(DatasetSplit& split) {
  split.histories.clear();
  std::map<Id, std::vector<const Interaction*>> by_user;
  for (const auto& x : split.train) {
    if (x.label == 1 && x.origin == Origin::organic_positive) by_user[x.user_id].push_back(&x);
  }
  for (auto& [user, xs] : by_user) {
    std::stable_sort(xs.begin(), xs.end(), [](const Interaction* a, const Interaction* b) {
      return a->timestamp < b->timestamp;
    });
    auto& h = split.histories[user];
    h.reserve(xs.size());
    for (const auto* x : xs) h.push_back(x->item_id);
  }
}

// Per-user time-ordered partition of positives. Users with fewer than three
// positives go entirely to train; otherwise validation and test each receive
// round(ratio * n) of the latest positives, at least one.
inline DatasetSplit chronological_split(const std::vector<Interaction>& interactions,
                                        SplitRatios ratios, std::vector<Id> users = {},
                                        std::vector<Id> items = {}) {
  ratios.validate();
  std::map<Id, std::vector<Interaction>> by_user;
  std::set<Id> user_set(users.begin(), users.end()), item_set(items.begin(), items.end());
  for (const auto& x : interactions) {
    by_user[x.user_id].push_back(x);
    user_set.insert(x.user_id);
    item_set.insert(x.item_id);
  }
  DatasetSplit split;
  for (auto& [user, xs] : by_user) {
    std::stable_sort(xs.begin(), xs.end(), [](const Interaction& a, const Interaction& b) {
      return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.item_id < b.item_id;
    });
    const std::size_t n = xs.size();
    std::size_t n_val = 0, n_test = 0;
    if (n >= 3) {
      const auto share = [n](double r) {
        return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(r * n)));
      };
      n_val = share(ratios.validation);
      n_test = share(ratios.test);
      while (n_val + n_test >= n) {
        if (n_val >= n_test && n_val > 1) {
          --n_val;
        } else if (n_test > 1) {
          --n_test;
        } else {
          break;
        }
      }
    }
    const std::size_t n_train = n - n_val - n_test;
    for (std::size_t i = 0; i < n; ++i) {
      auto& dst = i < n_train ? split.train : (i < n_train + n_val ? split.validation : split.test);
      dst.push_back(xs[i]);
    }
  }
  split.users.assign(user_set.begin(), user_set.end());
  split.items.assign(item_set.begin(), item_set.end());
  rebuild_histories(split);
  return split;
}

// Draws `ratio` unseen items per positive in every split. Negative (u, i)
// pairs are unique across the whole dataset and never collide with any of
// u's positives.
inline DatasetSplit sample_negatives(DatasetSplit split, std::size_t ratio, std::uint64_t seed,
                                     std::vector<std::string>* warnings = nullptr) {
  if (ratio == 0) throw ConfigError("negative sampling ratio must be positive");
  if (split.train.empty() && split.validation.empty() && split.test.empty()) {
    throw DataError("cannot sample negatives: split has no positives");
  }
  std::unordered_map<Id, std::unordered_set<Id>> excluded;
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (const auto& x : *part) excluded[x.user_id].insert(x.item_id);
  }
  const std::uint64_t n_items = split.items.size();
  Rng rng(seed);
  std::set<Id> exhausted;
  for (auto* part : {&split.train, &split.validation, &split.test}) {
    std::vector<Interaction> negatives;
    negatives.reserve(part->size() * ratio);
    for (const auto& pos : *part) {
      if (pos.label != 1) continue;
      auto& seen = excluded[pos.user_id];
      for (std::size_t r = 0; r < ratio; ++r) {
        if (seen.size() >= n_items) {
          exhausted.insert(pos.user_id);
          break;
        }
        Id item;
        do {
          item = split.items[rng.index(n_items)];
        } while (seen.contains(item));
        seen.insert(item);
        negatives.push_back({pos.user_id, item, 0, pos.timestamp, Origin::sampled_negative});
      }
    }
    part->insert(part->end(), negatives.begin(), negatives.end());
  }
  if (warnings) {
    for (Id u : exhausted) {
      warnings->push_back("user " + std::to_string(u) +
                          " interacted with every item; negatives skipped");
    }
  }
  return split;
}

// Flips floor(ratio * #train negatives) uniformly chosen train negatives to
// label 1 tagged injected_noise. Validation and test are untouched.
inline DatasetSplit inject_noise(DatasetSplit split, const NoiseSpec& spec) {
  spec.validate();
  std::vector<std::size_t> negatives;
  for (std::size_t i = 0; i < split.train.size(); ++i) {
    if (split.train[i].label == 0) negatives.push_back(i);
  }
  if (spec.ratio == 0.0) return split;
  if (negatives.empty()) throw DataError("noise injection requested but train has no negatives");
  const auto count = static_cast<std::size_t>(
      std::floor(spec.ratio * static_cast<double>(negatives.size()) + 1e-9));
  Rng rng(spec.seed);
  for (std::size_t k = 0; k < count; ++k) {
    std::swap(negatives[k], negatives[k + rng.index(negatives.size() - k)]);
    auto& x = split.train[negatives[k]];
    x.label = 1;
    x.origin = Origin::injected_noise;
  }
  return split;
}

// ---------------------------------------------------------------------------
// Plain-text artifacts written by `prepare` and read back by `run`.

inline std::string escape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline std::string unescape_field(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\\' && i + 1 < text.size()) {
      switch (text[++i]) {
        case 't': out.push_back('\t'); break;
        case 'n': out.push_back('\n'); break;
        case 'r': out.push_back('\r'); break;
        case '\\': out.push_back('\\'); break;
        default:
          out.push_back('\\');
          out.push_back(text[i]);
      }
    } else {
      out.push_back(text[i]);
    }
  }
  return out;
}

enum class TextKind : std::uint8_t { item = 0, profile = 1 };

struct ManifestRow {
  TextKind kind = TextKind::item;
  Id id = 0;
  std::string text;
};

inline void write_manifest(std::ostream& out, const std::vector<ManifestRow>& rows) {
  for (const auto& r : rows) {
    out << (r.kind == TextKind::item ? "item" : "profile") << '\t' << r.id << '\t'
        << escape_field(r.text) << '\n';
  }
}

inline std::vector<ManifestRow> read_manifest(std::istream& in, const std::string& source) {
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::chomp(line);
    if (line.empty()) continue;
    const auto f = detail::split_on(line, "\t");
    ManifestRow r;
    if (f.size() != 3 || !detail::parse_number(f[1], r.id) ||
        (f[0] != "item" && f[0] != "profile")) {
      throw ParseError(source, lineno, "expected kind<TAB>id<TAB>text");
    }
    r.kind = f[0] == "item" ? TextKind::item : TextKind::profile;
    r.text = unescape_field(f[2]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline void write_interactions(std::ostream& out, const std::vector<Interaction>& xs) {
  out << "user_id\titem_id\tlabel\ttimestamp\torigin\n";
  for (const auto& x : xs) {
    out << x.user_id << '\t' << x.item_id << '\t' << x.label << '\t' << x.timestamp << '\t'
        << to_string(x.origin) << '\n';
  }
}

inline std::vector<Interaction> read_interactions(std::istream& in, const std::string& source) {
  std::vector<Interaction> xs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::chomp(line);
    if (line.empty() || lineno == 1) continue;
    const auto f = detail::split_on(line, "\t");
    Interaction x;
    if (f.size() != 5 || !detail::parse_number(f[0], x.user_id) ||
        !detail::parse_number(f[1], x.item_id) || !detail::parse_number(f[2], x.label) ||
        !detail::parse_number(f[3], x.timestamp) || (x.label != 0 && x.label != 1)) {
      throw ParseError(source, lineno, "expected user_id<TAB>item_id<TAB>label<TAB>timestamp<TAB>origin");
    }
    try {
      x.origin = origin_from_string(f[4]);
    } catch (const DataError& e) {
      throw ParseError(source, lineno, e.what());
    }
    xs.push_back(x);
  }
  return xs;
}

}  // namespace said
