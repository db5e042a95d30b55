#pragma once

// User interest profiles, text embeddings and profile/item cosine similarity.

#include <algorithm>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "said/corpus.hpp"
#include "said/error.hpp"
#include "said/hash.hpp"

namespace said {

inline constexpr std::string_view kProfileSeparator = "; ";

struct ProfileText {
  Id user_id = 0;
  std::string text;
  std::vector<Id> source_items;  // chronological
};

inline std::string_view title_of(const ItemTextMap& texts, Id item, std::string& scratch) {
  auto it = texts.find(item);
  if (it != texts.end() && !it->second.title.empty()) return it->second.title;
  scratch = synthetic_title(item);
  return scratch;
}

// Concatenates the titles of the last min(k, |history|) items, oldest first.
inline ProfileText build_profile_text(Id user, std::span<const Id> history,
                                      const ItemTextMap& texts, std::size_t k) {
  if (k == 0) throw ConfigError("profile length k must be positive");
  ProfileText p;
  p.user_id = user;
  const std::size_t take = std::min(k, history.size());
  p.source_items.assign(history.end() - static_cast<std::ptrdiff_t>(take), history.end());
  std::string scratch;
  for (std::size_t i = 0; i < p.source_items.size(); ++i) {
    if (i > 0) p.text += kProfileSeparator;
    p.text += title_of(texts, p.source_items[i], scratch);
  }
  return p;
}

inline std::vector<ProfileText> build_profiles(const DatasetSplit& split, const ItemTextMap& texts,
                                               std::size_t k) {
  std::vector<ProfileText> out;
  out.reserve(split.histories.size());
  for (const auto& [user, history] : split.histories) {
    out.push_back(build_profile_text(user, history, texts, k));
  }
  return out;
}

// Items (ascending id) followed by non-empty profiles (ascending user).
inline std::vector<ManifestRow> make_manifest(const DatasetSplit& split, const ItemTextMap& texts,
                                              const std::vector<ProfileText>& profiles) {
  std::vector<ManifestRow> rows;
  std::string scratch;
  for (Id item : split.items) {
    rows.push_back({TextKind::item, item, std::string(title_of(texts, item, scratch))});
  }
  std::vector<const ProfileText*> sorted;
  for (const auto& p : profiles) {
    if (!p.text.empty()) sorted.push_back(&p);
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const ProfileText* a, const ProfileText* b) { return a->user_id < b->user_id; });
  for (const auto* p : sorted) rows.push_back({TextKind::profile, p->user_id, p->text});
  return rows;
}

// ---------------------------------------------------------------------------

// Character 3-gram term frequencies, signed-hashed into `dim` buckets and
// L2-normalized. ASCII letters are lower-cased first. Texts shorter than three
// bytes contribute a single gram. Empty text maps to the zero vector.
inline std::vector<double> encode_fallback(std::string_view text, std::size_t dim,
                                           std::uint64_t hash_seed) {
  if (dim < 16) throw ConfigError("fallback encoder dim must be >= 16");
  std::vector<double> v(dim, 0.0);
  if (text.empty()) return v;
  std::string lower(text);
  for (char& c : lower) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  const auto add = [&](std::string_view gram) {
    const std::uint64_t h = seeded_hash(gram, hash_seed);
    v[h % dim] += (h >> 63) ? -1.0 : 1.0;
  };
  if (lower.size() < 3) {
    add(lower);
  } else {
    for (std::size_t i = 0; i + 3 <= lower.size(); ++i) add(std::string_view(lower).substr(i, 3));
  }
  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 == 0.0) return v;
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& x : v) x *= inv;
  return v;
}

struct FallbackEncoder {
  std::size_t dim = 256;
  std::uint64_t hash_seed = 0;

  std::vector<double> operator()(std::string_view text) const {
    return encode_fallback(text, dim, hash_seed);
  }
};

// a.b / (|a||b|), clamped to [-1, 1]; 0 when either vector has zero norm.
template <typename T, typename U>
double cosine(std::span<const T> a, std::span<const U> b) {
  if (a.size() != b.size()) {
    throw DataError("cosine: length mismatch (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double x = static_cast<double>(a[i]);
    const double y = static_cast<double>(b[i]);
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  return cosine(std::span<const double>(a), std::span<const double>(b));
}

// ---------------------------------------------------------------------------

class EmbeddingFormatError : public DataError {
 public:
  enum class Kind { io, bad_magic, bad_dim, truncated_row, duplicate_entry, bad_value };

  EmbeddingFormatError(Kind kind, const std::string& what) : DataError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class EmbeddingTable {
 public:
  using Key = std::pair<TextKind, Id>;

  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) throw EmbeddingFormatError(EmbeddingFormatError::Kind::bad_dim, "embedding dim must be positive");
  }

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return entries_.size(); }

  template <typename T>
  void insert(TextKind kind, Id id, std::span<const T> values) {
    if (values.size() != dim_) {
      throw EmbeddingFormatError(EmbeddingFormatError::Kind::truncated_row,
                                 "embedding for id " + std::to_string(id) + " has length " +
                                     std::to_string(values.size()) + ", expected " +
                                     std::to_string(dim_));
    }
    std::vector<float> row(dim_);
    for (std::size_t i = 0; i < dim_; ++i) {
      row[i] = static_cast<float>(values[i]);
      if (!std::isfinite(row[i])) {
        throw EmbeddingFormatError(EmbeddingFormatError::Kind::bad_value,
                                   "non-finite component in embedding for id " + std::to_string(id));
      }
    }
    if (!entries_.emplace(Key{kind, id}, std::move(row)).second) {
      throw EmbeddingFormatError(EmbeddingFormatError::Kind::duplicate_entry,
                                 "duplicate embedding for id " + std::to_string(id));
    }
  }

  void insert(TextKind kind, Id id, const std::vector<double>& values) {
    insert(kind, id, std::span<const double>(values));
  }

  const std::vector<float>* find(TextKind kind, Id id) const {
    auto it = entries_.find(Key{kind, id});
    return it == entries_.end() ? nullptr : &it->second;
  }

  bool contains(TextKind kind, Id id) const { return find(kind, id) != nullptr; }

  const std::map<Key, std::vector<float>>& entries() const noexcept { return entries_; }

  friend bool operator==(const EmbeddingTable&, const EmbeddingTable&) = default;

 private:
  std::size_t dim_;
  std::map<Key, std::vector<float>> entries_;
};

inline EmbeddingTable encode_manifest(const std::vector<ManifestRow>& rows,
                                      const FallbackEncoder& encoder) {
  EmbeddingTable table(encoder.dim);
  for (const auto& r : rows) table.insert(r.kind, r.id, encoder(r.text));
  return table;
}

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>(u & 0xff);
    u = static_cast<U>(u >> 8);
  }
  out.write(buf, sizeof buf);
}

template <typename T>
bool get_le(std::istream& in, T& value) {
  unsigned char buf[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof buf)) return false;
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = sizeof(T); i-- > 0;) u = static_cast<decltype(u)>((u << 8) | buf[i]);
  value = static_cast<T>(u);
  return true;
}

inline void put_f32(std::ostream& out, float f) { put_le(out, std::bit_cast<std::uint32_t>(f)); }

inline bool get_f32(std::istream& in, float& f) {
  std::uint32_t u;
  if (!get_le(in, u)) return false;
  f = std::bit_cast<float>(u);
  return true;
}

}  // namespace detail

inline constexpr char kEmbeddingMagic[8] = {'S', 'A', 'I', 'D', 'E', 'M', 'B', '1'};

// SAIDEMB1: magic, u32 dim, u64 count, then per row u8 kind, u64 id, dim x f32.
// All integers and floats little-endian.
inline void write_embedding_table(std::ostream& out, const EmbeddingTable& table) {
  out.write(kEmbeddingMagic, sizeof kEmbeddingMagic);
  detail::put_le(out, static_cast<std::uint32_t>(table.dim()));
  detail::put_le(out, static_cast<std::uint64_t>(table.size()));
  for (const auto& [key, row] : table.entries()) {
    detail::put_le(out, static_cast<std::uint8_t>(key.first));
    detail::put_le(out, static_cast<std::uint64_t>(key.second));
    for (float f : row) detail::put_f32(out, f);
  }
}

inline EmbeddingTable read_embedding_table(std::istream& in) {
  using K = EmbeddingFormatError::Kind;
  char magic[sizeof kEmbeddingMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kEmbeddingMagic, sizeof magic) != 0) {
    throw EmbeddingFormatError(K::bad_magic, "not a SAIDEMB1 file (magic mismatch)");
  }
  std::uint32_t dim = 0;
  std::uint64_t count = 0;
  if (!detail::get_le(in, dim) || !detail::get_le(in, count)) {
    throw EmbeddingFormatError(K::truncated_row, "truncated SAIDEMB header");
  }
  if (dim == 0 || dim > (1u << 24)) {
    throw EmbeddingFormatError(K::bad_dim, "invalid embedding dim " + std::to_string(dim));
  }
  EmbeddingTable table(dim);
  std::vector<float> row(dim);
  for (std::uint64_t r = 0; r < count; ++r) {
    std::uint8_t kind = 0;
    std::uint64_t id = 0;
    if (!detail::get_le(in, kind) || !detail::get_le(in, id)) {
      throw EmbeddingFormatError(K::truncated_row, "truncated SAIDEMB record " + std::to_string(r));
    }
    if (kind > 1) {
      throw EmbeddingFormatError(K::bad_value, "invalid kind " + std::to_string(kind) +
                                                   " for id " + std::to_string(static_cast<Id>(id)));
    }
    for (std::uint32_t i = 0; i < dim; ++i) {
      if (!detail::get_f32(in, row[i])) {
        throw EmbeddingFormatError(K::truncated_row, "truncated row for id " +
                                                         std::to_string(static_cast<Id>(id)));
      }
    }
    table.insert(static_cast<TextKind>(kind), static_cast<Id>(id), std::span<const float>(row));
  }
  return table;
}

// Debug layout: `kind<TAB>id<TAB>v1,v2,...` with kind in {item, profile, 0, 1}.
// An optional first line `# dim <n>` fixes the dimension for empty tables.
inline EmbeddingTable read_embedding_tsv(std::istream& in, const std::string& source) {
  using K = EmbeddingFormatError::Kind;
  std::optional<EmbeddingTable> table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    detail::chomp(line);
    if (line.empty()) continue;
    if (line.starts_with("# dim")) {
      std::size_t d = 0;
      if (!detail::parse_number(std::string_view(line).substr(5), d) || d == 0) {
        throw EmbeddingFormatError(K::bad_dim, source + ":" + std::to_string(lineno) + ": bad dim header");
      }
      table.emplace(d);
      continue;
    }
    const auto f = detail::split_on(line, "\t");
    Id id = 0;
    if (f.size() != 3 || !detail::parse_number(f[1], id)) {
      throw ParseError(source, lineno, "expected kind<TAB>id<TAB>v1,v2,...");
    }
    TextKind kind;
    if (f[0] == "item" || f[0] == "0") {
      kind = TextKind::item;
    } else if (f[0] == "profile" || f[0] == "user" || f[0] == "1") {
      kind = TextKind::profile;
    } else {
      throw ParseError(source, lineno, "unknown kind '" + std::string(f[0]) + "'");
    }
    std::vector<double> values;
    for (auto tok : detail::split_on(f[2], ",")) {
      double x = 0;
      if (!detail::parse_number(tok, x)) throw ParseError(source, lineno, "bad vector component");
      values.push_back(x);
    }
    if (!table) table.emplace(values.size());
    table->insert(kind, id, values);
  }
  if (!table) throw EmbeddingFormatError(K::bad_dim, source + ": empty TSV without '# dim' header");
  return std::move(*table);
}

// Shortest round-trip float text, so the TSV layout reloads bit-exactly.
inline void write_embedding_tsv(std::ostream& out, const EmbeddingTable& table) {
  out << "# dim " << table.dim() << '\n';
  char buf[32];
  for (const auto& [key, row] : table.entries()) {
    out << (key.first == TextKind::item ? "item" : "profile") << '\t' << key.second << '\t';
    for (std::size_t i = 0; i < row.size(); ++i) {
      const auto r = std::to_chars(buf, buf + sizeof buf, row[i]);
      if (i > 0) out << ',';
      out.write(buf, r.ptr - buf);
    }
    out << '\n';
  }
}

// ".tsv" suffix selects the text layout.
inline void save_embedding_table(const std::string& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  if (path.ends_with(".tsv")) {
    write_embedding_tsv(out, table);
  } else {
    write_embedding_table(out, table);
  }
}

inline EmbeddingTable load_embedding_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EmbeddingFormatError(EmbeddingFormatError::Kind::io, "cannot open '" + path + "'");
  if (path.ends_with(".tsv")) return read_embedding_tsv(in, path);
  return read_embedding_table(in);
}

// ---------------------------------------------------------------------------

struct PairHash {
  std::size_t operator()(const std::pair<Id, Id>& p) const noexcept {
    return std::hash<std::uint64_t>{}(static_cast<std::uint64_t>(p.first) * 0x9e3779b97f4a7c15ULL ^
                                      static_cast<std::uint64_t>(p.second));
  }
};

// One entry per distinct train positive (u, i). A nullopt score marks a user
// without profile text; those samples bypass weighting.
class SimilarityTable {
 public:
  void add(Id user, Id item, std::optional<double> score) {
    if (score && !(*score >= -1.0 && *score <= 1.0)) {
      throw DataError("similarity out of [-1, 1] for (" + std::to_string(user) + ", " +
                      std::to_string(item) + ")");
    }
    if (index_.emplace(std::pair{user, item}, order_.size()).second) {
      order_.push_back({user, item, score});
    }
  }

  // Arithmetic mean of defined scores, summed in insertion order.
  double recompute_mean() const {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& e : order_) {
      if (e.score) {
        sum += *e.score;
        ++n;
      }
    }
    return n == 0 ? 0.0 : sum / static_cast<double>(n);
  }

  void finalize() { mu_ = recompute_mean(); }

  bool contains(Id user, Id item) const { return index_.contains({user, item}); }

  // nullopt if absent or sentinel; use contains() to tell the two apart.
  std::optional<double> score(Id user, Id item) const {
    auto it = index_.find({user, item});
    if (it == index_.end()) return std::nullopt;
    return order_[it->second].score;
  }

  double mu() const noexcept { return mu_; }
  std::size_t size() const noexcept { return order_.size(); }

  struct Entry {
    Id user;
    Id item;
    std::optional<double> score;
  };
  const std::vector<Entry>& entries() const noexcept { return order_; }

 private:
  std::vector<Entry> order_;
  std::unordered_map<std::pair<Id, Id>, std::size_t, PairHash> index_;
  double mu_ = 0.0;
};

// Gap filling for compute_similarity_table: missing item or profile vectors
// are encoded on the fly instead of raising.
struct GapFill {
  FallbackEncoder encoder;
  const ItemTextMap* items = nullptr;
};

inline SimilarityTable compute_similarity_table(const DatasetSplit& split,
                                                const EmbeddingTable& table,
                                                const std::vector<ProfileText>& profiles,
                                                const GapFill* fill = nullptr) {
  if (fill && fill->encoder.dim != table.dim()) {
    throw ConfigError("fallback encoder dim does not match embedding table dim");
  }
  std::unordered_map<Id, const ProfileText*> by_user;
  for (const auto& p : profiles) by_user[p.user_id] = &p;

  std::unordered_map<Id, std::vector<float>> filled_items, filled_profiles;
  std::vector<std::string> missing;
  std::string scratch;

  const auto vector_for = [&](TextKind kind, Id id, const std::string* text) -> const std::vector<float>* {
    if (const auto* v = table.find(kind, id)) return v;
    if (!fill) {
      missing.push_back(std::string(kind == TextKind::item ? "item " : "profile ") + std::to_string(id));
      return nullptr;
    }
    auto& cache = kind == TextKind::item ? filled_items : filled_profiles;
    auto it = cache.find(id);
    if (it == cache.end()) {
      std::string t = text ? *text
                           : (fill->items ? std::string(title_of(*fill->items, id, scratch))
                                          : synthetic_title(id));
      const auto d = fill->encoder(t);
      it = cache.emplace(id, std::vector<float>(d.begin(), d.end())).first;
    }
    return &it->second;
  };

  SimilarityTable sims;
  for (const auto& x : split.train) {
    if (x.label != 1 || sims.contains(x.user_id, x.item_id)) continue;
    auto pit = by_user.find(x.user_id);
    if (pit == by_user.end() || pit->second->text.empty()) {
      sims.add(x.user_id, x.item_id, std::nullopt);
      continue;
    }
    const auto* eu = vector_for(TextKind::profile, x.user_id, &pit->second->text);
    const auto* ei = vector_for(TextKind::item, x.item_id, nullptr);
    if (!eu || !ei) continue;
    sims.add(x.user_id, x.item_id,
             cosine(std::span<const float>(*eu), std::span<const float>(*ei)));
  }
  if (!missing.empty()) {
    std::sort(missing.begin(), missing.end());
    missing.erase(std::unique(missing.begin(), missing.end()), missing.end());
    std::string msg = "missing embeddings (" + std::to_string(missing.size()) + "):";
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) msg += " [" + missing[i] + "]";
    if (missing.size() > 20) msg += " ...";
    throw DataError(msg);
  }
  sims.finalize();
  return sims;
}

}  // namespace said
