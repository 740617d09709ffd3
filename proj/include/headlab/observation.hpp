#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "headlab/corpus.hpp"
#include "headlab/similarity.hpp"

namespace headlab {

/// Observation window plus the seasons preceding it. Season k (1-based)
/// covers [window_start - k*L, window_start - (k-1)*L) with L the season
/// length, so season 1 is the most recent.
struct SeasonSpec {
  std::int64_t window_start = 0;
  std::int64_t window_end = 0;  // exclusive
  std::size_t n_observed = 50000;
  int seasons = 5;
  int season_length_days = 90;
  std::size_t per_season_sample = 500;
  std::uint64_t seed = 3407;

  std::int64_t season_start(int k) const;
  std::int64_t season_end(int k) const;
  void validate() const;
};

struct SeasonSimilarity {
  int season = 0;
  std::int64_t start = 0;
  std::int64_t end = 0;
  double mean = 0.0;
  double stderr_of_mean = 0.0;
  std::size_t pairs = 0;
};

struct SeasonLikes {
  int season = 0;
  double mean_likes = 0.0;
  double stderr_of_mean = 0.0;
  std::size_t count = 0;
};

struct TrendReport {
  std::vector<SeasonSimilarity> similarity;  // one per season
  std::vector<SeasonLikes> likes;            // one per season group; empty for part (a) only
  std::size_t observed = 0;
};

/// Mean similarity between sampled observed headlines and each season's
/// sample, over the full cross product. Throws if the observation window or
/// any season holds fewer posts than requested.
TrendReport trend_similarity_study(const Corpus& corpus, const SeasonSpec& spec, const SimilarityMetric& metric,
                                   unsigned threads = 1);

/// As above, plus each observed headline is assigned to the season it is
/// most similar to on average (ties go to the more recent season) and the
/// mean raw likes of every group is reported.
TrendReport trend_likes_study(const Corpus& corpus, const SeasonSpec& spec, const SimilarityMetric& metric,
                              unsigned threads = 1);

inline constexpr std::array<double, 6> kPsiBucketEdges = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

/// [0,.2) [.2,.4) [.4,.6) [.6,.8) [.8,1.0]
int psi_bucket(double psi);

struct PsiGroup {
  double lo = 0.0;
  double hi = 0.0;
  double mean_pi = 0.0;
  double stderr_of_mean = 0.0;
  std::size_t users = 0;
};

struct UserStyle {
  std::string user_id;
  double psi = 0.0;
  double pi = 0.0;
  int bucket = 0;
};

struct StyleReport {
  double same_user_mean_sim = 0.0;
  double diff_user_mean_sim = 0.0;
  double same_user_stderr = 0.0;
  double diff_user_stderr = 0.0;
  std::size_t pair_count = 0;
  std::vector<PsiGroup> psi_groups;
  std::vector<UserStyle> users;
  double overall_pi = 0.0;
};

/// Mean similarity of n_pairs same-user pairs (two distinct posts) and
/// n_pairs different-user pairs, both drawn uniformly with replacement.
StyleReport style_pair_study(const Corpus& corpus, std::size_t n_pairs, const SimilarityMetric& metric,
                             std::uint64_t seed, unsigned threads = 1);

/// Mean pairwise similarity including the i == j terms. Throws on empty input.
double psi(std::span<const TokenSeq> headlines, const SimilarityMetric& metric);

/// Mean of ln(1 + likes). Throws on empty input.
double popularity_index(std::span<const Post> posts);
double popularity_index(std::span<const std::int64_t> likes);

/// PSI and PI over each user's latest `headlines_per_user` posts (users with
/// fewer posts are skipped), grouped into the five PSI intervals.
StyleReport psi_popularity_study(const Corpus& corpus, std::size_t headlines_per_user,
                                 const SimilarityMetric& metric);

}  // namespace headlab
