#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "headlab/corpus.hpp"
#include "headlab/vocab.hpp"

namespace headlab {

/// Per-step token counts over a vocabulary. Step x is relative to origin()
/// (the earliest month of the counted corpus unless given explicitly);
/// steps outside the counted range read as zero.
class FrequencyTable {
 public:
  FrequencyTable() = default;
  FrequencyTable(TimeStep origin, int vocab_size);

  TimeStep origin() const { return origin_; }
  int vocab_size() const { return vocab_size_; }
  /// Number of materialized steps (0 .. num_steps()-1).
  int num_steps() const { return static_cast<int>(counts_.size()); }

  std::int64_t count(int step, int token_id) const;
  std::int64_t total(int step) const;
  void add(int step, int token_id, std::int64_t n = 1);

  int relative_step(TimeStep absolute) const { return absolute - origin_; }

 private:
  TimeStep origin_ = 0;
  int vocab_size_ = 0;
  std::vector<std::vector<std::int64_t>> counts_;
  std::vector<std::int64_t> totals_;
};

/// Counts in-vocabulary headline tokens per time step; out-of-vocabulary
/// tokens are ignored. Posts before `origin` are ignored.
FrequencyTable count_frequencies(const Corpus& corpus, const Vocabulary& vocab, TimeStep origin);
/// Origin defaults to the corpus' earliest time step.
FrequencyTable count_frequencies(const Corpus& corpus, const Vocabulary& vocab);

enum class BuzzStage { ratio1, ratio3, ratio6, fill };

std::string_view stage_name(BuzzStage s);
BuzzStage parse_stage(std::string_view s);

struct BuzzEntry {
  int token_id = 0;
  std::string token;
  BuzzStage stage = BuzzStage::fill;
  double score = 0.0;

  bool operator==(const BuzzEntry&) const = default;
};

struct BuzzwordList {
  int step = 0;  // relative step t_x
  std::vector<BuzzEntry> entries;

  bool operator==(const BuzzwordList&) const = default;
};

/// Stage sizes and smoothing; defaults match the production setting.
struct BuzzwordQuotas {
  std::size_t ratio1 = 128;
  std::size_t ratio3 = 64;
  std::size_t ratio6 = 32;
  std::size_t cap = 512;
  double smoothing = 1.0;  // added to numerator and denominator of every ratio
};

/// Buzzword list for relative step t_x, using counts from steps < t_x only.
///
/// Stage 1 (t_x >= 2) ranks by (tf[x-1]+e)/(tf[x-2]+e); stage 2 (t_x >= 6)
/// by summed windows x-1..x-3 over x-4..x-6; stage 3 (t_x >= 12) by x-1..x-6
/// over x-7..x-12. Each stage adds its quota of the best tokens not already
/// listed. The fill stage then appends tokens by tf[x-1] until the list holds
/// min(cap, |regular vocabulary|) entries. Ties go to the lower token id.
/// t_x <= 0 yields an empty list.
BuzzwordList generate_buzzwords(const FrequencyTable& table, const Vocabulary& vocab, int step,
                                const BuzzwordQuotas& quotas = {});

/// Buzzword tokens in list order, cut to max_tokens.
TokenSeq build_trend_text(const BuzzwordList& list, std::size_t max_tokens);

nlohmann::ordered_json to_json(const BuzzwordList& list);
BuzzwordList buzzwords_from_json(const nlohmann::json& j);

}  // namespace headlab
