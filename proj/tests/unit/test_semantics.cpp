#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "said/rng.hpp"
#include "said/semantics.hpp"
#include "temp_dir.hpp"

using namespace said;
using said::testing::TempDir;

namespace {

ItemTextMap titles(std::initializer_list<std::pair<Id, const char*>> xs) {
  ItemTextMap m;
  for (const auto& [id, t] : xs) m[id] = ItemText{id, t, std::nullopt};
  return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

EmbeddingTable sample_table() {
  EmbeddingTable t(4);
  t.insert(TextKind::item, 10, std::vector<double>{0.5, -1.25, 3.0, 0.0});
  t.insert(TextKind::profile, 10, std::vector<double>{1.0, 2.0, 3.0, 4.0});
  t.insert(TextKind::item, -3, std::vector<double>{1e-30, 7.0, -0.0, 2.5});
  return t;
}

}  // namespace

TEST(ProfileText, KeepsLastKTitlesOldestFirst) {
  const auto texts = titles({{1, "Alpha"}, {2, "Beta"}, {3, "Gamma"}});
  const std::vector<Id> history{1, 2, 3};
  const auto p = build_profile_text(9, history, texts, 2);
  EXPECT_EQ(p.text, "Beta; Gamma");
  EXPECT_EQ(p.source_items, (std::vector<Id>{2, 3}));
}

TEST(ProfileText, ShortHistoryUsesEverything) {
  const auto texts = titles({{1, "Alpha"}});
  const std::vector<Id> history{1};
  EXPECT_EQ(build_profile_text(9, history, texts, 10).text, "Alpha");
}

TEST(ProfileText, EmptyHistoryGivesEmptyProfile) {
  const auto p = build_profile_text(9, std::span<const Id>{}, {}, 10);
  EXPECT_TRUE(p.text.empty());
  EXPECT_TRUE(p.source_items.empty());
}

TEST(ProfileText, MissingTitleFallsBackToSyntheticTitle) {
  const std::vector<Id> history{42};
  EXPECT_EQ(build_profile_text(1, history, {}, 3).text, "item 42");
}

TEST(Manifest, ItemsThenNonEmptyProfilesAscending) {
  DatasetSplit s;
  s.items = {1, 2};
  const auto texts = titles({{1, "A"}, {2, "B"}});
  std::vector<ProfileText> profiles = {{5, "B", {2}}, {3, "A", {1}}, {4, "", {}}};
  const auto rows = make_manifest(s, texts, profiles);
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0].kind, TextKind::item);
  EXPECT_EQ(rows[1].id, 2);
  EXPECT_EQ(rows[2].kind, TextKind::profile);
  EXPECT_EQ(rows[2].id, 3);
  EXPECT_EQ(rows[3].id, 5);
}

TEST(FallbackEncoder, DeterministicUnitNorm) {
  const auto a = encode_fallback("The Matrix (1999)", 384, 0);
  const auto b = encode_fallback("The Matrix (1999)", 384, 0);
  EXPECT_EQ(a, b);
  double n2 = 0;
  for (double x : a) n2 += x * x;
  EXPECT_NEAR(std::sqrt(n2), 1.0, 1e-9);
  EXPECT_NEAR(cosine(a, b), 1.0, 1e-12);
}

TEST(FallbackEncoder, EmptyTextIsZeroVector) {
  const auto v = encode_fallback("", 64, 0);
  EXPECT_EQ(v, std::vector<double>(64, 0.0));
}

TEST(FallbackEncoder, ShortTextAndCaseFolding) {
  const auto a = encode_fallback("ab", 32, 1);
  double n2 = 0;
  for (double x : a) n2 += x * x;
  EXPECT_NEAR(n2, 1.0, 1e-12);
  EXPECT_EQ(encode_fallback("HeLLo", 64, 0), encode_fallback("hello", 64, 0));
}

TEST(FallbackEncoder, SeedChangesHashing) {
  EXPECT_NE(encode_fallback("space odyssey", 64, 0), encode_fallback("space odyssey", 64, 1));
}

TEST(FallbackEncoder, SharedWordsRaiseSimilarity) {
  const auto a = encode_fallback("Star Wars: Episode IV", 384, 0);
  const auto b = encode_fallback("Star Wars: Episode V", 384, 0);
  const auto c = encode_fallback("Sense and Sensibility", 384, 0);
  EXPECT_GT(cosine(a, b), cosine(a, c));
}

TEST(FallbackEncoder, RejectsTinyDim) { EXPECT_THROW(encode_fallback("x", 8, 0), ConfigError); }

TEST(Cosine, HandExamples) {
  const std::vector<double> v{0.3, -2.0, 5.0};
  EXPECT_DOUBLE_EQ(cosine(v, v), 1.0);
  EXPECT_DOUBLE_EQ(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}), 0.0);
  // 1 / sqrt(2)
  EXPECT_NEAR(cosine(std::vector<double>{1, 1, 0}, std::vector<double>{1, 0, 0}), 0.70711, 1e-5);
}

TEST(Cosine, ZeroNormIsZeroAndLengthMismatchThrows) {
  EXPECT_EQ(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 2}), 0.0);
  EXPECT_THROW(cosine(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DataError);
}

TEST(CosineProperty, SymmetricScaleInvariantBounded) {
  Rng rng(31);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + rng.index(40);
    const auto a = random_vector(rng, n);
    const auto b = random_vector(rng, n);
    const double lambda = std::exp(rng.uniform(-5.0, 5.0));
    auto scaled = a;
    for (auto& x : scaled) x *= lambda;
    const double c = cosine(a, b);
    EXPECT_EQ(c, cosine(b, a));
    EXPECT_NEAR(cosine(scaled, b), c, 1e-12);
    EXPECT_GE(c, -1.0 - 1e-9);
    EXPECT_LE(c, 1.0 + 1e-9);
  }
}

TEST(EmbeddingTable, BinaryRoundTripIsExact) {
  const auto t = sample_table();
  std::stringstream ss;
  write_embedding_table(ss, t);
  const auto back = read_embedding_table(ss);
  EXPECT_EQ(back, t);
  EXPECT_EQ(back.dim(), 4u);
  EXPECT_EQ(back.size(), 3u);
}

TEST(EmbeddingTable, FileRoundTripBinaryAndTsv) {
  TempDir dir;
  const auto t = sample_table();
  save_embedding_table(dir.file("e.bin"), t);
  EXPECT_EQ(load_embedding_table(dir.file("e.bin")), t);
  save_embedding_table(dir.file("e.tsv"), t);
  EXPECT_EQ(load_embedding_table(dir.file("e.tsv")), t);
}

TEST(EmbeddingTable, BinaryLayoutIsLittleEndian) {
  EmbeddingTable t(2);
  t.insert(TextKind::profile, 258, std::vector<double>{1.0, -2.0});
  std::stringstream ss;
  write_embedding_table(ss, t);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8u + 4 + 8 + (1 + 8 + 2 * 4));
  EXPECT_EQ(bytes.substr(0, 8), "SAIDEMB1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 2);  // dim
  EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 1);  // count
  EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 1);  // kind = profile
  EXPECT_EQ(static_cast<unsigned char>(bytes[21]), 2);  // id 258 = 0x0102
  EXPECT_EQ(static_cast<unsigned char>(bytes[22]), 1);
  // 1.0f = 0x3f800000
  EXPECT_EQ(static_cast<unsigned char>(bytes[31]), 0x80);
  EXPECT_EQ(static_cast<unsigned char>(bytes[32]), 0x3f);
}

TEST(EmbeddingTable, EmptyFileKeepsDim) {
  std::stringstream ss;
  write_embedding_table(ss, EmbeddingTable(384));
  const auto back = read_embedding_table(ss);
  EXPECT_EQ(back.dim(), 384u);
  EXPECT_EQ(back.size(), 0u);
}

namespace {

EmbeddingFormatError::Kind load_error_kind(const std::string& bytes) {
  std::stringstream ss(bytes);
  try {
    read_embedding_table(ss);
  } catch (const EmbeddingFormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return EmbeddingFormatError::Kind::io;
}

}  // namespace

TEST(EmbeddingTable, DistinctLoadErrors) {
  std::stringstream good;
  write_embedding_table(good, sample_table());
  const std::string bytes = good.str();

  std::string bad_magic = bytes;
  bad_magic[3] = 'X';
  EXPECT_EQ(load_error_kind(bad_magic), EmbeddingFormatError::Kind::bad_magic);

  std::string zero_dim = bytes;
  zero_dim[8] = 0;
  EXPECT_EQ(load_error_kind(zero_dim), EmbeddingFormatError::Kind::bad_dim);

  EXPECT_EQ(load_error_kind(bytes.substr(0, bytes.size() - 3)), EmbeddingFormatError::Kind::truncated_row);

  // Claim one more record and append a copy of the last one.
  const std::size_t record = 1 + 8 + 4 * 4;
  std::string dup = bytes + bytes.substr(bytes.size() - record);
  dup[12] = static_cast<char>(dup[12] + 1);
  EXPECT_EQ(load_error_kind(dup), EmbeddingFormatError::Kind::duplicate_entry);
}

TEST(EmbeddingTable, RowOfWrongLengthNamesId) {
  EmbeddingTable t(3);
  try {
    t.insert(TextKind::item, 77, std::vector<double>{1.0, 2.0});
    FAIL();
  } catch (const EmbeddingFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("77"), std::string::npos);
  }
  std::stringstream tsv("item\t5\t1,2,3\nitem\t6\t1,2\n");
  try {
    read_embedding_tsv(tsv, "e.tsv");
    FAIL();
  } catch (const EmbeddingFormatError& e) {
    EXPECT_NE(std::string(e.what()).find("6"), std::string::npos);
  }
}

namespace {

// Three train positives for users 1 and 2 plus a negative.
DatasetSplit small_split() {
  DatasetSplit s;
  s.train = {{1, 10, 1, 0, Origin::organic_positive},
             {1, 11, 1, 1, Origin::organic_positive},
             {2, 10, 1, 2, Origin::organic_positive},
             {2, 12, 0, 3, Origin::sampled_negative}};
  s.users = {1, 2};
  s.items = {10, 11, 12};
  rebuild_histories(s);
  return s;
}

}  // namespace

TEST(SimilarityTable, IdenticalEmbeddingsGiveOnes) {
  const auto s = small_split();
  EmbeddingTable t(3);
  const std::vector<double> v{0.2, 0.3, 0.4};
  for (Id i : s.items) t.insert(TextKind::item, i, v);
  for (Id u : s.users) t.insert(TextKind::profile, u, v);
  const std::vector<ProfileText> profiles = {{1, "x", {10}}, {2, "y", {10}}};
  const auto sims = compute_similarity_table(s, t, profiles);
  EXPECT_EQ(sims.size(), 3u);
  for (const auto& e : sims.entries()) EXPECT_NEAR(*e.score, 1.0, 1e-7);
  EXPECT_NEAR(sims.mu(), 1.0, 1e-7);
}

TEST(SimilarityTable, MeanOfScores) {
  SimilarityTable t;
  t.add(1, 1, 0.2);
  t.add(1, 2, 0.4);
  t.add(2, 1, 0.6);
  t.add(3, 1, std::nullopt);
  t.finalize();
  EXPECT_NEAR(t.mu(), 0.4, 1e-15);
  EXPECT_EQ(t.recompute_mean(), t.mu());
  EXPECT_THROW(t.add(4, 4, 1.5), DataError);
}

TEST(SimilarityTable, MissingEmbeddingsListedWithoutFallback) {
  const auto s = small_split();
  EmbeddingTable t(3);
  t.insert(TextKind::item, 10, std::vector<double>{1, 0, 0});
  const std::vector<ProfileText> profiles = {{1, "x", {10}}, {2, "y", {10}}};
  try {
    compute_similarity_table(s, t, profiles);
    FAIL();
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("item 11"), std::string::npos) << msg;
    EXPECT_NE(msg.find("profile 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find("profile 2"), std::string::npos) << msg;
  }
}

TEST(SimilarityTable, GapFillEncodesMissingTexts) {
  const auto s = small_split();
  const ItemTextMap texts = titles({{10, "Heat"}, {11, "Ronin"}, {12, "Casino"}});
  const std::vector<ProfileText> profiles = {{1, "Heat; Ronin", {10, 11}}, {2, "Heat", {10}}};
  const FallbackEncoder enc{64, 0};
  const EmbeddingTable empty(64);
  const GapFill fill{enc, &texts};
  const auto filled = compute_similarity_table(s, empty, profiles, &fill);
  const auto full = compute_similarity_table(s, encode_manifest(make_manifest(s, texts, profiles), enc), profiles);
  ASSERT_EQ(filled.size(), full.size());
  for (std::size_t k = 0; k < full.size(); ++k) EXPECT_EQ(filled.entries()[k].score, full.entries()[k].score);
}

TEST(SimilarityTable, EmptyProfileIsSentinel) {
  const auto s = small_split();
  EmbeddingTable t(3);
  for (Id i : s.items) t.insert(TextKind::item, i, std::vector<double>{1, 0, 0});
  t.insert(TextKind::profile, 1, std::vector<double>{1, 0, 0});
  const std::vector<ProfileText> profiles = {{1, "x", {10}}, {2, "", {}}};
  const auto sims = compute_similarity_table(s, t, profiles);
  EXPECT_TRUE(sims.contains(2, 10));
  EXPECT_FALSE(sims.score(2, 10).has_value());
  EXPECT_NEAR(sims.mu(), 1.0, 1e-7);
}

TEST(SimilarityTableProperty, MeanRecomputesAndScoresBounded) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    DatasetSplit s;
    const std::size_t n_users = 1 + rng.index(10), n_items = 2 + rng.index(15);
    for (std::size_t u = 0; u < n_users; ++u) s.users.push_back(static_cast<Id>(u));
    for (std::size_t i = 0; i < n_items; ++i) s.items.push_back(static_cast<Id>(i));
    for (std::size_t k = 0; k < 40; ++k) {
      s.train.push_back({static_cast<Id>(rng.index(n_users)), static_cast<Id>(rng.index(n_items)), 1,
                         static_cast<std::int64_t>(k), Origin::organic_positive});
    }
    rebuild_histories(s);
    EmbeddingTable t(8);
    for (Id i : s.items) t.insert(TextKind::item, i, random_vector(rng, 8));
    std::vector<ProfileText> profiles;
    for (const auto& [u, h] : s.histories) {
      profiles.push_back({u, "p", h});
      t.insert(TextKind::profile, u, random_vector(rng, 8));
    }
    const auto sims = compute_similarity_table(s, t, profiles);
    EXPECT_NEAR(sims.recompute_mean(), sims.mu(), 1e-12);
    for (const auto& e : sims.entries()) {
      ASSERT_TRUE(e.score.has_value());
      EXPECT_GE(*e.score, -1.0 - 1e-9);
      EXPECT_LE(*e.score, 1.0 + 1e-9);
    }
  }
}
