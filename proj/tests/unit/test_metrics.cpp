#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "said/metrics.hpp"
#include "said/rng.hpp"

using namespace said;

TEST(Auc, HandExamples) {
  EXPECT_EQ(auc(std::vector<double>{0.9, 0.1}, std::vector<int>{1, 0}), 1.0);
  EXPECT_EQ(auc(std::vector<double>{0.1, 0.9}, std::vector<int>{1, 0}), 0.0);
  EXPECT_EQ(auc(std::vector<double>{0.8, 0.4, 0.6, 0.2}, std::vector<int>{1, 1, 0, 0}), 0.75);
  EXPECT_EQ(auc(std::vector<double>{0.5, 0.5}, std::vector<int>{1, 0}), 0.5);
}

TEST(Auc, SingleClassIsUndefined) {
  EXPECT_THROW(auc(std::vector<double>{0.1, 0.2}, std::vector<int>{1, 1}), UndefinedMetricError);
  EXPECT_THROW(auc(std::vector<double>{}, std::vector<int>{}), UndefinedMetricError);
}

TEST(AucProperty, EqualsPairCountingWithTies) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.index(49);
    std::vector<double> scores(n);
    std::vector<int> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = static_cast<double>(rng.index(8)) / 8.0;
      labels[k] = static_cast<int>(rng.index(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    EXPECT_EQ(auc(scores, labels), oracle::pair_auc(scores, labels)) << "trial " << trial;
  }
}

TEST(AucProperty, InvariantUnderIncreasingTransform) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> scores(n), transformed(n);
    std::vector<int> labels(n);
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = std::round(rng.uniform(-2, 2) * 10) / 10;
      transformed[k] = std::exp(3 * scores[k]) + 5;
      labels[k] = static_cast<int>(rng.index(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    EXPECT_EQ(auc(scores, labels), auc(transformed, labels));
  }
}

TEST(AucProperty, ComplementSumsToOneWithoutTies) {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(60);
    std::vector<double> scores(n);
    std::vector<int> labels(n), flipped(n);
    for (std::size_t k = 0; k < n; ++k) {
      scores[k] = rng.uniform();
      labels[k] = static_cast<int>(rng.index(2));
    }
    labels[0] = 1;
    labels[1] = 0;
    for (std::size_t k = 0; k < n; ++k) flipped[k] = 1 - labels[k];
    EXPECT_NEAR(auc(scores, labels) + auc(scores, flipped), 1.0, 1e-15);
  }
}

TEST(Logloss, HandExamples) {
  EXPECT_NEAR(logloss(std::vector<double>{0.5}, std::vector<int>{1}), 0.693147, 1e-6);
  const double eps = kDefaultClipEpsilon;
  const double perfect = logloss(std::vector<double>{1.0, 0.0}, std::vector<int>{1, 0});
  EXPECT_NEAR(perfect, -std::log(1 - eps), 1e-15);
  EXPECT_LT(perfect, 1e-6);
  EXPECT_THROW(logloss(std::vector<double>{}, std::vector<int>{}), DataError);
}

TEST(Logloss, DuplicatedListHasSameMean) {
  const std::vector<double> s{0.2, 0.7, 0.9};
  const std::vector<int> y{0, 1, 0};
  std::vector<double> s2 = s;
  std::vector<int> y2 = y;
  s2.insert(s2.end(), s.begin(), s.end());
  y2.insert(y2.end(), y.begin(), y.end());
  EXPECT_NEAR(logloss(s, y), logloss(s2, y2), 1e-15);
}

TEST(Aggregate, SingleResultHasZeroStd) {
  const auto a = aggregate({EvalResult{0.8, 0.4, 1, 1}});
  EXPECT_EQ(a.auc.mean, 0.8);
  EXPECT_EQ(a.auc.std, 0.0);
  EXPECT_EQ(a.per_seed.size(), 1u);
}

TEST(Aggregate, MeanAndSampleStd) {
  const auto a = aggregate({EvalResult{0.7, 0.5, 1, 1}, EvalResult{0.8, 0.3, 1, 1}});
  EXPECT_NEAR(a.auc.mean, 0.75, 1e-15);
  EXPECT_NEAR(a.auc.std, std::sqrt(0.005), 1e-15);
  EXPECT_NEAR(a.logloss.mean, 0.4, 1e-15);
}

TEST(AggregateProperty, OrderInvariantAndMeanWithinRange) {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<EvalResult> rs;
    const std::size_t n = 1 + rng.index(8);
    for (std::size_t k = 0; k < n; ++k) rs.push_back({rng.uniform(), rng.uniform(0, 2), 1, 1});
    auto shuffled = rs;
    rng.shuffle(shuffled);
    const auto a = aggregate(rs), b = aggregate(shuffled);
    EXPECT_EQ(a.auc.mean, b.auc.mean);
    EXPECT_EQ(a.auc.std, b.auc.std);
    EXPECT_EQ(a.logloss.mean, b.logloss.mean);
    EXPECT_GE(a.auc.mean, a.auc.min);
    EXPECT_LE(a.auc.mean, a.auc.max);
  }
}
