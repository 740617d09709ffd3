#include "headlab/similarity.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "headlab/error.hpp"

namespace headlab {

namespace {

template <class T>
double set_jaccard(const std::set<T>& a, const std::set<T>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t inter = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (*ia < *ib) {
      ++ia;
    } else if (*ib < *ia) {
      ++ib;
    } else {
      ++inter;
      ++ia;
      ++ib;
    }
  }
  const std::size_t uni = a.size() + b.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::set<std::vector<std::string>> ngrams(const TokenSeq& s, int n) {
  std::set<std::vector<std::string>> out;
  const auto un = static_cast<std::size_t>(n);
  if (s.size() < un) return out;
  for (std::size_t i = 0; i + un <= s.size(); ++i) {
    out.emplace(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + un));
  }
  return out;
}

}  // namespace

double jaccard(const TokenSeq& a, const TokenSeq& b) {
  return set_jaccard(std::set<std::string>(a.begin(), a.end()), std::set<std::string>(b.begin(), b.end()));
}

double lcs_similarity(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() && b.empty()) return 1.0;
  // Longest common suffix table, one row at a time.
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  std::size_t best = 0;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : 0;
      best = std::max(best, cur[j]);
    }
    std::swap(prev, cur);
  }
  return static_cast<double>(best) / static_cast<double>(std::max(a.size(), b.size()));
}

double ngram_similarity(const TokenSeq& a, const TokenSeq& b, int n) {
  if (n < 1) throw Error("ngram_similarity: n must be >= 1");
  if (n == 1) return jaccard(a, b);
  return set_jaccard(ngrams(a, n), ngrams(b, n));
}

double cosine_similarity(const TokenSeq& a, const TokenSeq& b) {
  if (a.empty() || b.empty()) return a.empty() && b.empty() ? 1.0 : 0.0;
  std::map<std::string_view, std::pair<double, double>> tf;
  for (const auto& t : a) tf[t].first += 1.0;
  for (const auto& t : b) tf[t].second += 1.0;
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (const auto& [tok, c] : tf) {
    dot += c.first * c.second;
    na += c.first * c.first;
    nb += c.second * c.second;
  }
  const double v = dot / std::sqrt(na * nb);
  return std::clamp(v, 0.0, 1.0);
}

double SimilarityMetric::operator()(const TokenSeq& a, const TokenSeq& b) const {
  switch (kind) {
    case MetricKind::jaccard:
      return jaccard(a, b);
    case MetricKind::lcs:
      return lcs_similarity(a, b);
    case MetricKind::ngram:
      return ngram_similarity(a, b, n);
    case MetricKind::cosine:
      return cosine_similarity(a, b);
  }
  return 0.0;
}

SimilarityMetric SimilarityMetric::parse(std::string_view name) {
  if (name == "jaccard") return {MetricKind::jaccard, 2};
  if (name == "lcs") return {MetricKind::lcs, 2};
  if (name == "cosine") return {MetricKind::cosine, 2};
  if (name == "ngram") return {MetricKind::ngram, 2};
  if (name.starts_with("ngram:")) {
    int n = 0;
    const auto digits = name.substr(6);
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || n < 1) {
      throw Error("invalid n-gram order in metric '" + std::string(name) + "'");
    }
    return {MetricKind::ngram, n};
  }
  throw Error("unknown similarity metric '" + std::string(name) + "'");
}

std::string SimilarityMetric::name() const {
  switch (kind) {
    case MetricKind::jaccard:
      return "jaccard";
    case MetricKind::lcs:
      return "lcs";
    case MetricKind::ngram:
      return "ngram:" + std::to_string(n);
    case MetricKind::cosine:
      return "cosine";
  }
  return "?";
}

}  // namespace headlab
