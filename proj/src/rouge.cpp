#include "headlab/rouge.hpp"

#include <algorithm>
#include <map>
#include <vector>

#include "headlab/error.hpp"
#include "headlab/summation.hpp"

namespace headlab {

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, std::size_t> count_ngrams(const TokenSeq& s, std::size_t n) {
  std::map<Gram, std::size_t> counts;
  if (s.size() < n) return counts;
  for (std::size_t i = 0; i + n <= s.size(); ++i) {
    ++counts[Gram(s.begin() + static_cast<std::ptrdiff_t>(i), s.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

RougeScore make_rouge_score(double precision, double recall) {
  RougeScore s{precision, recall, 0.0};
  if (precision + recall > 0.0) s.f1 = 2.0 * precision * recall / (precision + recall);
  return s;
}

RougeScore rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n) {
  if (n < 1) throw Error("rouge_n: n must be >= 1");
  const auto un = static_cast<std::size_t>(n);
  const auto cand = count_ngrams(candidate, un);
  const auto ref = count_ngrams(reference, un);
  if (cand.empty() || ref.empty()) return {};
  std::size_t cand_total = 0;
  std::size_t ref_total = 0;
  std::size_t overlap = 0;
  for (const auto& [g, c] : cand) {
    cand_total += c;
    if (auto it = ref.find(g); it != ref.end()) overlap += std::min(c, it->second);
  }
  for (const auto& [g, c] : ref) ref_total += c;
  return make_rouge_score(static_cast<double>(overlap) / static_cast<double>(cand_total),
                          static_cast<double>(overlap) / static_cast<double>(ref_total));
}

std::size_t lcs_subsequence_length(const TokenSeq& a, const TokenSeq& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

RougeScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference) {
  if (candidate.empty() || reference.empty()) return {};
  const auto l = static_cast<double>(lcs_subsequence_length(candidate, reference));
  return make_rouge_score(l / static_cast<double>(candidate.size()), l / static_cast<double>(reference.size()));
}

CorpusRouge corpus_rouge(std::span<const std::pair<TokenSeq, TokenSeq>> pairs) {
  if (pairs.empty()) throw Error("corpus_rouge: no candidate/reference pairs");
  CompensatedSum acc[3][3];
  for (const auto& [cand, ref] : pairs) {
    const RougeScore s[3] = {rouge_n(cand, ref, 1), rouge_n(cand, ref, 2), rouge_l(cand, ref)};
    for (int v = 0; v < 3; ++v) {
      acc[v][0].add(s[v].precision);
      acc[v][1].add(s[v].recall);
      acc[v][2].add(s[v].f1);
    }
  }
  const double n = static_cast<double>(pairs.size());
  const auto mean = [&](int v) {
    return RougeScore{acc[v][0].value() / n, acc[v][1].value() / n, acc[v][2].value() / n};
  };
  return {mean(0), mean(1), mean(2), pairs.size()};
}

}  // namespace headlab
