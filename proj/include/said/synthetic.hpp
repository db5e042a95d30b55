#pragma once

// Synthetic implicit-feedback corpus with latent topics for controlled
// denoising experiments.
//
// Items belong to a topic and to one of its subtopics; titles combine one
// topic-wide word with subtopic words, all generated from a consonant
// inventory private to the topic, so character n-grams of different topics
// barely overlap. Each user follows one topic, prefers a few of its
// subtopics, and optionally keeps a genuine side interest in a small
// exploration cluster of another topic shared by its user group.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "said/corpus.hpp"
#include "said/rng.hpp"

namespace said {

struct SyntheticSpec {
  std::size_t n_users = 500;
  std::size_t n_items = 200;
  std::size_t n_topics = 2;
  std::size_t subtopics_per_topic = 5;
  std::size_t preferred_subtopics = 2;
  double subtopic_affinity = 0.65;  // share of core positives from preferred subtopics
  std::size_t positives_per_user = 40;
  // Share of each user's positives drawn from its group's exploration
  // cluster. These are real interests: they also land in validation/test.
  double exploration_fraction = 0.0;
  std::size_t groups_per_topic = 5;
  std::size_t cluster_size = 10;
  double popularity_exponent = 1.0;  // Zipf exponent within a subtopic pool
  std::size_t words_per_subtopic = 6;
  std::size_t words_per_topic = 4;
  std::uint64_t seed = 7;
};

struct SyntheticData {
  Corpus corpus;
  std::vector<std::size_t> item_topic;     // by item id
  std::vector<std::size_t> item_subtopic;  // by item id, topic-local
  std::vector<std::size_t> user_topic;     // by user id
};

namespace detail {

inline constexpr std::string_view kTopicConsonants[] = {"bdkmrt", "fglnps", "chjvwz"};
inline constexpr std::string_view kVowels = "aeiou";

inline std::string make_word(Rng& rng, std::string_view consonants, std::set<std::string>& used) {
  while (true) {
    std::string w;
    const std::size_t syllables = 2 + rng.index(2);
    for (std::size_t s = 0; s < syllables; ++s) {
      w.push_back(consonants[rng.index(consonants.size())]);
      w.push_back(kVowels[rng.index(kVowels.size())]);
    }
    w.push_back(consonants[rng.index(consonants.size())]);
    w[0] = static_cast<char>(w[0] - 'a' + 'A');
    if (used.insert(w).second) return w;
  }
}

// Weighted draw without replacement.
inline std::vector<Id> weighted_sample(Rng& rng, std::vector<Id> pool, std::vector<double> w,
                                       std::size_t count) {
  std::vector<Id> out;
  count = std::min(count, pool.size());
  for (std::size_t k = 0; k < count; ++k) {
    const double total = std::accumulate(w.begin(), w.end(), 0.0);
    double r = rng.uniform() * total;
    std::size_t pick = pool.size() - 1;
    for (std::size_t j = 0; j < pool.size(); ++j) {
      r -= w[j];
      if (r < 0) {
        pick = j;
        break;
      }
    }
    out.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  return out;
}

}  // namespace detail

inline SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  constexpr std::size_t max_topics = std::size(detail::kTopicConsonants);
  if (spec.n_topics == 0 || spec.n_topics > max_topics) {
    throw ConfigError("synthetic topics must be between 1 and " + std::to_string(max_topics));
  }
  if (spec.subtopics_per_topic == 0 || spec.n_items < spec.n_topics * spec.subtopics_per_topic ||
      spec.n_users == 0 || spec.positives_per_user == 0 || spec.groups_per_topic == 0) {
    throw ConfigError("synthetic corpus too small");
  }
  if (spec.exploration_fraction < 0.0 || spec.exploration_fraction >= 1.0 ||
      spec.subtopic_affinity < 0.0 || spec.subtopic_affinity > 1.0) {
    throw ConfigError("synthetic fractions must lie in [0, 1)");
  }
  Rng rng(spec.seed);
  SyntheticData data;
  auto& corpus = data.corpus;

  // Vocabulary.
  std::set<std::string> used;
  std::vector<std::vector<std::string>> topic_words(spec.n_topics);
  std::vector<std::vector<std::vector<std::string>>> sub_words(spec.n_topics);
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    for (std::size_t w = 0; w < spec.words_per_topic; ++w) {
      topic_words[t].push_back(detail::make_word(rng, detail::kTopicConsonants[t], used));
    }
    sub_words[t].resize(spec.subtopics_per_topic);
    for (auto& words : sub_words[t]) {
      for (std::size_t w = 0; w < spec.words_per_subtopic; ++w) {
        words.push_back(detail::make_word(rng, detail::kTopicConsonants[t], used));
      }
    }
  }

  // Items: contiguous topic blocks, subtopics contiguous inside each block.
  std::vector<std::vector<std::vector<Id>>> pools(spec.n_topics,
                                                  std::vector<std::vector<Id>>(spec.subtopics_per_topic));
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    const std::size_t topic = i * spec.n_topics / spec.n_items;
    const std::size_t begin = topic * spec.n_items / spec.n_topics;
    const std::size_t end = (topic + 1) * spec.n_items / spec.n_topics;
    const std::size_t sub = (i - begin) * spec.subtopics_per_topic / (end - begin);
    data.item_topic.push_back(topic);
    data.item_subtopic.push_back(sub);
    pools[topic][sub].push_back(static_cast<Id>(i));

    const auto& tw = topic_words[topic];
    auto sw = sub_words[topic][sub];
    rng.shuffle(sw);
    std::string title = tw[rng.index(tw.size())] + " " + sw[0] + " " + sw[1];
    corpus.items.push_back({static_cast<Id>(i), title,
                            "topic " + std::to_string(topic) + "/" + std::to_string(sub)});
    corpus.item_universe.push_back(static_cast<Id>(i));
  }

  std::vector<double> popularity(spec.n_items, 1.0);
  for (const auto& topic_pools : pools) {
    for (const auto& pool : topic_pools) {
      std::vector<std::size_t> rank(pool.size());
      std::iota(rank.begin(), rank.end(), std::size_t{1});
      rng.shuffle(rank);
      for (std::size_t k = 0; k < pool.size(); ++k) {
        popularity[static_cast<std::size_t>(pool[k])] =
            1.0 / std::pow(static_cast<double>(rank[k]), spec.popularity_exponent);
      }
    }
  }
  const auto weights_of = [&](const std::vector<Id>& ids) {
    std::vector<double> w;
    w.reserve(ids.size());
    for (Id i : ids) w.push_back(popularity[static_cast<std::size_t>(i)]);
    return w;
  };

  // Per (topic, group): preferred subtopics and an exploration cluster taken
  // from the next topic over.
  const std::size_t n_groups = spec.n_topics * spec.groups_per_topic;
  std::vector<std::vector<std::size_t>> group_subs(n_groups);
  std::vector<std::vector<Id>> clusters(n_groups);
  for (std::size_t t = 0; t < spec.n_topics; ++t) {
    for (std::size_t g = 0; g < spec.groups_per_topic; ++g) {
      const std::size_t gi = t * spec.groups_per_topic + g;
      std::vector<std::size_t> subs(spec.subtopics_per_topic);
      std::iota(subs.begin(), subs.end(), std::size_t{0});
      rng.shuffle(subs);
      subs.resize(std::min(spec.preferred_subtopics, subs.size()));
      group_subs[gi] = subs;
      if (spec.n_topics > 1) {
        std::vector<Id> other;
        for (const auto& pool : pools[(t + 1) % spec.n_topics]) other.insert(other.end(), pool.begin(), pool.end());
        rng.shuffle(other);
        other.resize(std::min(spec.cluster_size, other.size()));
        std::sort(other.begin(), other.end());
        clusters[gi] = other;
      }
    }
  }

  const std::int64_t t0 = 1'000'000'000;
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    const std::size_t topic = u % spec.n_topics;
    const std::size_t group = (u / spec.n_topics) % spec.groups_per_topic;
    const std::size_t gi = topic * spec.groups_per_topic + group;
    data.user_topic.push_back(topic);
    corpus.user_universe.push_back(static_cast<Id>(u));

    std::vector<Id> preferred, rest;
    for (std::size_t s = 0; s < spec.subtopics_per_topic; ++s) {
      auto& dst = std::find(group_subs[gi].begin(), group_subs[gi].end(), s) != group_subs[gi].end()
                      ? preferred
                      : rest;
      dst.insert(dst.end(), pools[topic][s].begin(), pools[topic][s].end());
    }
    const auto& cluster = clusters[gi];
    const std::size_t n_explore = std::min(
        cluster.size(), static_cast<std::size_t>(std::llround(
                            spec.exploration_fraction * static_cast<double>(spec.positives_per_user))));
    const std::size_t n_core = spec.positives_per_user - n_explore;
    const std::size_t n_pref = std::min(
        preferred.size(),
        static_cast<std::size_t>(std::llround(spec.subtopic_affinity * static_cast<double>(n_core))));

    auto chosen = detail::weighted_sample(rng, preferred, weights_of(preferred), n_pref);
    auto more = detail::weighted_sample(rng, rest, weights_of(rest), n_core - n_pref);
    chosen.insert(chosen.end(), more.begin(), more.end());
    if (n_explore > 0) {
      auto extra = detail::weighted_sample(rng, cluster, weights_of(cluster), n_explore);
      chosen.insert(chosen.end(), extra.begin(), extra.end());
    }
    rng.shuffle(chosen);
    std::int64_t ts = t0 + static_cast<std::int64_t>(u) * 10'000;
    for (Id item : chosen) {
      ts += 1 + static_cast<std::int64_t>(rng.index(50));
      corpus.interactions.push_back({static_cast<Id>(u), item, 1, ts, Origin::organic_positive});
    }
  }
  return data;
}

}  // namespace said
