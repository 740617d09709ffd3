#pragma once

#include <string>
#include <string_view>

#include "headlab/text.hpp"

namespace headlab {

// All metrics return a value in [0, 1], are symmetric, and equal 1 on
// identical inputs (including two empty inputs).

/// |set(a) ∩ set(b)| / |set(a) ∪ set(b)|.
double jaccard(const TokenSeq& a, const TokenSeq& b);

/// Longest common contiguous token run, normalized by max(|a|, |b|).
double lcs_similarity(const TokenSeq& a, const TokenSeq& b);

/// Jaccard over the sets of token n-grams. n must be >= 1.
double ngram_similarity(const TokenSeq& a, const TokenSeq& b, int n);

/// Cosine of term-frequency vectors; 0 if either side is empty.
double cosine_similarity(const TokenSeq& a, const TokenSeq& b);

enum class MetricKind { jaccard, lcs, ngram, cosine };

struct SimilarityMetric {
  MetricKind kind = MetricKind::jaccard;
  int n = 2;  // only used by ngram

  double operator()(const TokenSeq& a, const TokenSeq& b) const;

  /// Accepts "jaccard", "lcs", "cosine", "ngram" and "ngram:<n>".
  static SimilarityMetric parse(std::string_view name);
  std::string name() const;
};

}  // namespace headlab
