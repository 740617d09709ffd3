#pragma once

#include <span>
#include <utility>

#include "headlab/text.hpp"

namespace headlab {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

RougeScore make_rouge_score(double precision, double recall);

/// Clipped n-gram overlap. Empty candidate or reference gives all zeros.
RougeScore rouge_n(const TokenSeq& candidate, const TokenSeq& reference, int n);

/// Longest common subsequence based ROUGE-L.
RougeScore rouge_l(const TokenSeq& candidate, const TokenSeq& reference);

std::size_t lcs_subsequence_length(const TokenSeq& a, const TokenSeq& b);

struct CorpusRouge {
  RougeScore rouge1;
  RougeScore rouge2;
  RougeScore rougeL;
  std::size_t pairs = 0;
};

/// Macro average of per-pair precision, recall and F1. Throws on empty input.
CorpusRouge corpus_rouge(std::span<const std::pair<TokenSeq, TokenSeq>> pairs);

}  // namespace headlab
