#include "headlab/observation.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"
#include "headlab/summation.hpp"

namespace headlab {

namespace {

constexpr std::int64_t kSecondsPerDay = 86400;

/// Post indices ordered by (timestamp, id): results must not depend on the
/// order posts were stored in.
std::vector<std::size_t> canonical_order(const Corpus& corpus) {
  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  const auto posts = corpus.posts();
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (posts[a].timestamp != posts[b].timestamp) return posts[a].timestamp < posts[b].timestamp;
    return posts[a].id < posts[b].id;
  });
  return order;
}

std::vector<std::size_t> in_range(const Corpus& corpus, const std::vector<std::size_t>& order, std::int64_t start,
                                  std::int64_t end) {
  std::vector<std::size_t> out;
  for (const std::size_t i : order) {
    const auto ts = corpus.posts()[i].timestamp;
    if (ts >= start && ts < end) out.push_back(i);
  }
  return out;
}

/// Runs body(shard_begin, shard_end, shard_index) over [0, n) on up to
/// `threads` workers.
template <class Body>
void parallel_shards(std::size_t n, unsigned threads, Body&& body) {
  const std::size_t shards = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
  if (shards == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::jthread> workers;
  workers.reserve(shards);
  for (std::size_t s = 0; s < shards; ++s) {
    const std::size_t lo = n * s / shards;
    const std::size_t hi = n * (s + 1) / shards;
    workers.emplace_back([&body, lo, hi, s] { body(lo, hi, s); });
  }
}

std::size_t shard_count(std::size_t n, unsigned threads) {
  return std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
}

TrendReport run_trend(const Corpus& corpus, const SeasonSpec& spec, const SimilarityMetric& metric,
                      unsigned threads, bool with_likes) {
  spec.validate();
  const auto order = canonical_order(corpus);
  Rng rng(spec.seed);

  const auto window = in_range(corpus, order, spec.window_start, spec.window_end);
  if (window.size() < spec.n_observed) {
    throw Error("observation window holds " + std::to_string(window.size()) + " posts, " +
                std::to_string(spec.n_observed) + " requested");
  }
  std::vector<std::size_t> observed;
  for (auto k : rng.sample_without_replacement(window.size(), spec.n_observed)) observed.push_back(window[k]);

  const auto n_seasons = static_cast<std::size_t>(spec.seasons);
  std::vector<std::vector<TokenSeq>> season_tokens(n_seasons);
  for (int k = 1; k <= spec.seasons; ++k) {
    const auto pool = in_range(corpus, order, spec.season_start(k), spec.season_end(k));
    if (pool.size() < spec.per_season_sample) {
      throw Error("season " + std::to_string(k) + " holds " + std::to_string(pool.size()) + " posts, " +
                  std::to_string(spec.per_season_sample) + " requested");
    }
    for (auto j : rng.sample_without_replacement(pool.size(), spec.per_season_sample)) {
      season_tokens[static_cast<std::size_t>(k - 1)].push_back(tokenize(corpus.posts()[pool[j]].headline));
    }
  }
  std::vector<TokenSeq> observed_tokens;
  observed_tokens.reserve(observed.size());
  for (auto i : observed) observed_tokens.push_back(tokenize(corpus.posts()[i].headline));

  // Per observed headline: mean similarity to each season sample.
  const std::size_t shards = shard_count(observed.size(), threads);
  std::vector<std::vector<MeanAccumulator>> shard_acc(shards, std::vector<MeanAccumulator>(n_seasons));
  std::vector<int> assignment(observed.size(), 0);
  parallel_shards(observed.size(), threads, [&](std::size_t lo, std::size_t hi, std::size_t s) {
    auto& acc = shard_acc[s];
    for (std::size_t o = lo; o < hi; ++o) {
      double best = -1.0;
      int best_season = 1;
      for (std::size_t k = 0; k < n_seasons; ++k) {
        CompensatedSum row;
        for (const auto& other : season_tokens[k]) {
          const double v = metric(observed_tokens[o], other);
          row.add(v);
          acc[k].add(v);
        }
        const double mean = row.value() / static_cast<double>(season_tokens[k].size());
        if (mean > best) {  // strict: ties keep the more recent season
          best = mean;
          best_season = static_cast<int>(k) + 1;
        }
      }
      assignment[o] = best_season;
    }
  });

  TrendReport report;
  report.observed = observed.size();
  for (std::size_t k = 0; k < n_seasons; ++k) {
    MeanAccumulator total;
    for (const auto& acc : shard_acc) total.merge(acc[k]);
    const int season = static_cast<int>(k) + 1;
    report.similarity.push_back(
        {season, spec.season_start(season), spec.season_end(season), total.mean(), total.stderr_of_mean(), total.count()});
  }
  if (with_likes) {
    std::vector<MeanAccumulator> groups(n_seasons);
    for (std::size_t o = 0; o < observed.size(); ++o) {
      groups[static_cast<std::size_t>(assignment[o] - 1)].add(static_cast<double>(corpus.posts()[observed[o]].likes));
    }
    for (std::size_t k = 0; k < n_seasons; ++k) {
      report.likes.push_back({static_cast<int>(k) + 1, groups[k].mean(), groups[k].stderr_of_mean(), groups[k].count()});
    }
  }
  return report;
}

}  // namespace

std::int64_t SeasonSpec::season_start(int k) const {
  return window_start - static_cast<std::int64_t>(k) * season_length_days * kSecondsPerDay;
}

std::int64_t SeasonSpec::season_end(int k) const { return season_start(k) + season_length_days * kSecondsPerDay; }

void SeasonSpec::validate() const {
  if (seasons < 1) throw Error("season spec: seasons must be >= 1");
  if (season_length_days < 1) throw Error("season spec: season length must be >= 1 day");
  if (window_end <= window_start) throw Error("season spec: empty observation window");
  if (n_observed < 1 || per_season_sample < 1) throw Error("season spec: sample sizes must be positive");
}

TrendReport trend_similarity_study(const Corpus& corpus, const SeasonSpec& spec, const SimilarityMetric& metric,
                                   unsigned threads) {
  return run_trend(corpus, spec, metric, threads, false);
}

TrendReport trend_likes_study(const Corpus& corpus, const SeasonSpec& spec, const SimilarityMetric& metric,
                              unsigned threads) {
  return run_trend(corpus, spec, metric, threads, true);
}

int psi_bucket(double value) {
  int b = 0;
  for (std::size_t e = 1; e + 1 < kPsiBucketEdges.size(); ++e) {
    if (value >= kPsiBucketEdges[e]) b = static_cast<int>(e);
  }
  return b;
}

StyleReport style_pair_study(const Corpus& corpus, std::size_t n_pairs, const SimilarityMetric& metric,
                             std::uint64_t seed, unsigned threads) {
  const auto& users = corpus.by_user();
  if (users.size() < 2) throw Error("style_pair_study: need at least two users");
  std::vector<const std::vector<std::size_t>*> multi;
  std::vector<std::uint64_t> cumulative;
  std::uint64_t total_weight = 0;
  for (const auto& [user, posts] : users) {
    if (posts.size() < 2) continue;
    const auto n = static_cast<std::uint64_t>(posts.size());
    total_weight += n * (n - 1);
    multi.push_back(&posts);
    cumulative.push_back(total_weight);
  }
  if (multi.empty()) throw Error("style_pair_study: no user has two posts");

  const auto order = canonical_order(corpus);
  Rng rng(seed);
  std::vector<std::pair<std::size_t, std::size_t>> same(n_pairs);
  std::vector<std::pair<std::size_t, std::size_t>> diff(n_pairs);
  for (auto& pr : same) {
    const auto r = rng.below(total_weight);
    const auto u = static_cast<std::size_t>(std::upper_bound(cumulative.begin(), cumulative.end(), r) - cumulative.begin());
    const auto& posts = *multi[u];
    const auto a = rng.below(posts.size());
    auto b = rng.below(posts.size() - 1);
    if (b >= a) ++b;
    pr = {posts[a], posts[b]};
  }
  const auto all = corpus.posts();
  for (auto& pr : diff) {
    for (;;) {
      const auto a = order[rng.below(order.size())];
      const auto b = order[rng.below(order.size())];
      if (all[a].user_id != all[b].user_id) {
        pr = {a, b};
        break;
      }
    }
  }

  std::vector<TokenSeq> tokens(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) tokens[i] = tokenize(all[i].headline);

  const auto mean_of = [&](const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    const std::size_t shards = shard_count(pairs.size(), threads);
    std::vector<MeanAccumulator> acc(shards);
    parallel_shards(pairs.size(), threads, [&](std::size_t lo, std::size_t hi, std::size_t s) {
      for (std::size_t i = lo; i < hi; ++i) acc[s].add(metric(tokens[pairs[i].first], tokens[pairs[i].second]));
    });
    MeanAccumulator total;
    for (const auto& a : acc) total.merge(a);
    return total;
  };
  const auto same_acc = mean_of(same);
  const auto diff_acc = mean_of(diff);

  StyleReport report;
  report.same_user_mean_sim = same_acc.mean();
  report.diff_user_mean_sim = diff_acc.mean();
  report.same_user_stderr = same_acc.stderr_of_mean();
  report.diff_user_stderr = diff_acc.stderr_of_mean();
  report.pair_count = n_pairs;
  return report;
}

double psi(std::span<const TokenSeq> headlines, const SimilarityMetric& metric) {
  if (headlines.empty()) throw Error("psi: no headlines");
  CompensatedSum sum;
  for (const auto& a : headlines) {
    for (const auto& b : headlines) sum.add(metric(a, b));
  }
  const double n = static_cast<double>(headlines.size());
  return sum.value() / (n * n);
}

double popularity_index(std::span<const std::int64_t> likes) {
  if (likes.empty()) throw Error("popularity_index: no posts");
  CompensatedSum sum;
  for (const auto l : likes) sum.add(std::log1p(static_cast<double>(l)));
  return sum.value() / static_cast<double>(likes.size());
}

double popularity_index(std::span<const Post> posts) {
  std::vector<std::int64_t> likes;
  likes.reserve(posts.size());
  for (const auto& p : posts) likes.push_back(p.likes);
  return popularity_index(likes);
}

StyleReport psi_popularity_study(const Corpus& corpus, std::size_t headlines_per_user,
                                 const SimilarityMetric& metric) {
  if (headlines_per_user < 1) throw Error("psi_popularity_study: headlines_per_user must be >= 1");
  StyleReport report;
  std::vector<std::vector<double>> bucket_pi(kPsiBucketEdges.size() - 1);
  CompensatedSum all_pi;
  for (const auto& [user, posts] : corpus.by_user()) {
    if (posts.size() < headlines_per_user) continue;
    std::vector<TokenSeq> heads;
    std::vector<std::int64_t> likes;
    for (std::size_t k = posts.size() - headlines_per_user; k < posts.size(); ++k) {
      const Post& p = corpus.posts()[posts[k]];
      heads.push_back(tokenize(p.headline));
      likes.push_back(p.likes);
    }
    UserStyle u{user, psi(heads, metric), popularity_index(likes), 0};
    u.bucket = psi_bucket(u.psi);
    bucket_pi[static_cast<std::size_t>(u.bucket)].push_back(u.pi);
    all_pi.add(u.pi);
    report.users.push_back(std::move(u));
  }
  if (report.users.empty()) throw Error("psi_popularity_study: no user has enough posts");
  report.overall_pi = all_pi.value() / static_cast<double>(report.users.size());
  for (std::size_t b = 0; b + 1 < kPsiBucketEdges.size(); ++b) {
    PsiGroup g{kPsiBucketEdges[b], kPsiBucketEdges[b + 1], 0.0, 0.0, bucket_pi[b].size()};
    if (!bucket_pi[b].empty()) {
      CompensatedSum s;
      for (double v : bucket_pi[b]) s.add(v);
      const double n = static_cast<double>(bucket_pi[b].size());
      g.mean_pi = s.value() / n;
      if (bucket_pi[b].size() > 1) {
        CompensatedSum sq;
        for (double v : bucket_pi[b]) sq.add((v - g.mean_pi) * (v - g.mean_pi));
        g.stderr_of_mean = std::sqrt(sq.value() / (n - 1.0)) / std::sqrt(n);
      }
    }
    report.psi_groups.push_back(g);
  }
  return report;
}

}  // namespace headlab
