#include <gtest/gtest.h>

#include <sstream>

#include "oracles.hpp"
#include "said/reweight.hpp"
#include "said/rng.hpp"

using namespace said;

TEST(WeightOf, MidpointAndCollapse) {
  EXPECT_EQ(weight_of(0.3, {0.4, 5.0, 0.3}), (1.0 + 0.4) / 2);
  EXPECT_NEAR(weight_of(0.3, {0.4, 5.0, 0.3}), 0.7, 1e-15);
  for (double s : {-1.0, -0.2, 0.0, 0.5, 1.0}) EXPECT_EQ(weight_of(s, {1.0, 5.0, 0.1}), 1.0);
}

TEST(WeightOf, MatchesDirectEvaluation) {
  // 0.4 + 0.6 / (1 + e^-3.5)
  EXPECT_NEAR(weight_of(0.9, {0.4, 5.0, 0.2}), 0.98241, 1e-4);
  EXPECT_NEAR(weight_of(0.9, {0.4, 5.0, 0.2}), static_cast<double>(oracle::weight(0.9L, 0.4L, 5.0L, 0.2L)), 1e-15);
}

TEST(WeightOfProperty, AgreesWithLogisticFormOverRandomDraws) {
  Rng rng(12);
  for (int k = 0; k < 10000; ++k) {
    const double s = rng.uniform(-1, 1), a = rng.uniform(0, 1), b = rng.uniform(0.01, 50), mu = rng.uniform(-1, 1);
    EXPECT_NEAR(weight_of(s, {a, b, mu}), static_cast<double>(oracle::weight(s, a, b, mu)), 1e-14);
  }
}

TEST(WeightOfProperty, MonotoneAndBounded) {
  Rng rng(13);
  for (int k = 0; k < 10000; ++k) {
    const double a = rng.uniform(0, 0.99), b = rng.uniform(0.1, 10), mu = rng.uniform(-0.5, 0.5);
    const double s1 = rng.uniform(-1, 1), s2 = rng.uniform(-1, 1);
    const WeightConfig cfg{a, b, mu};
    const double w1 = weight_of(s1, cfg), w2 = weight_of(s2, cfg);
    if (s1 > s2) EXPECT_GT(w1, w2) << s1 << " " << s2;
    EXPECT_GT(w1, a);
    EXPECT_LT(w1, 1.0);
  }
  EXPECT_NEAR(weight_of(-1e6, {0.3, 5, 0}), 0.3, 1e-15);
  EXPECT_NEAR(weight_of(1e6, {0.3, 5, 0}), 1.0, 1e-15);
}

TEST(WeightConfig, Validation) {
  EXPECT_THROW((WeightConfig{-0.1, 5, 0}.validate()), ConfigError);
  EXPECT_THROW((WeightConfig{1.1, 5, 0}.validate()), ConfigError);
  EXPECT_THROW((WeightConfig{0.4, 0, 0}.validate()), ConfigError);
  EXPECT_NO_THROW((WeightConfig{0.0, 5, 0}.validate()));
}

namespace {

SimilarityTable sims_for(std::initializer_list<std::tuple<Id, Id, std::optional<double>>> xs) {
  SimilarityTable t;
  for (const auto& [u, i, s] : xs) t.add(u, i, s);
  t.finalize();
  return t;
}

}  // namespace

TEST(AssignWeights, NegativesGetOne) {
  const std::vector<Interaction> xs = {{1, 2, 0, 0, Origin::sampled_negative}, {1, 3, 0, 0, Origin::sampled_negative}};
  for (const auto& w : assign_weights(xs, SimilarityTable{}, {})) EXPECT_EQ(w.weight, 1.0);
}

TEST(AssignWeights, AlphaOneGivesUnitWeights) {
  const std::vector<Interaction> xs = {{1, 2, 1, 0, Origin::organic_positive}, {1, 3, 1, 0, Origin::injected_noise}};
  const auto sims = sims_for({{1, 2, -0.8}, {1, 3, 0.9}});
  for (const auto& w : assign_weights(xs, sims, {1.0, 5.0, sims.mu()})) EXPECT_EQ(w.weight, 1.0);
}

TEST(AssignWeights, HigherSimilarityHigherWeight) {
  const std::vector<Interaction> xs = {{1, 2, 1, 0, Origin::organic_positive}, {1, 3, 1, 0, Origin::organic_positive}};
  const auto sims = sims_for({{1, 2, 0.6}, {1, 3, 0.1}});
  const auto w = assign_weights(xs, sims, {0.4, 5.0, sims.mu()});
  EXPECT_GT(w[0].weight, w[1].weight);
}

TEST(AssignWeights, IgnoresOriginTags) {
  const auto sims = sims_for({{1, 2, 0.25}});
  const Interaction organic{1, 2, 1, 0, Origin::organic_positive};
  Interaction injected = organic;
  injected.origin = Origin::injected_noise;
  const WeightConfig cfg{0.4, 5.0, 0.5};
  EXPECT_EQ(assign_weights({organic}, sims, cfg)[0].weight, assign_weights({injected}, sims, cfg)[0].weight);
}

TEST(AssignWeights, SentinelBypassesAndMissingPositiveThrows) {
  const auto sims = sims_for({{1, 2, std::nullopt}});
  const std::vector<Interaction> ok = {{1, 2, 1, 0, Origin::organic_positive}};
  EXPECT_EQ(assign_weights(ok, sims, {0.0, 5.0, 0.9})[0].weight, 1.0);
  const std::vector<Interaction> bad = {{1, 9, 1, 0, Origin::organic_positive}};
  EXPECT_THROW(assign_weights(bad, sims, {}), DataError);
}

TEST(WeightAudit, WritesOneRowPerEntry) {
  const auto sims = sims_for({{1, 2, 0.5}, {3, 4, std::nullopt}});
  std::stringstream ss;
  write_weight_audit(ss, sims, {0.4, 5.0, 0.5});
  std::string header, first, second, rest;
  std::getline(ss, header);
  std::getline(ss, first);
  std::getline(ss, second);
  EXPECT_FALSE(std::getline(ss, rest));
  EXPECT_EQ(header, "user_id\titem_id\tsimilarity\tweight");
  ASSERT_TRUE(first.starts_with("1\t2\t0.5\t"));
  EXPECT_EQ(std::stod(first.substr(8)), (1.0 + 0.4) / 2);
  EXPECT_EQ(second, "3\t4\t\t1");
}
