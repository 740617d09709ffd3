#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "headlab/autodiff.hpp"
#include "headlab/buzzword.hpp"
#include "headlab/corpus.hpp"
#include "headlab/vocab.hpp"

namespace headlab {

class Model;
struct HiddenSeq;

struct GenerationConfig {
  int beam_size = 4;
  int max_length = 20;  // content tokens; eos is not counted
  double length_alpha = 1.0;
  double coverage_beta = 0.0;
  int bos_id = kBosId;
  int eos_id = kEosId;

  void validate() const;
};

struct Hypothesis {
  std::vector<int> tokens;  // generated tokens, ending with eos unless cut at max_length
  double raw = 0.0;         // sum of token log-probabilities
  double score = 0.0;       // raw / lp(|tokens|) - coverage term

  bool ends_with_eos(int eos_id) const { return !tokens.empty() && tokens.back() == eos_id; }
};

/// ((5 + length) / 6)^alpha
double length_penalty(std::size_t length, double alpha);

/// beta * -sum_i log(min(coverage_i, 1)) over source positions; coverage
/// entries are floored at 1e-12 so a never-attended position stays finite.
double coverage_term(std::span<const double> coverage, double beta);

struct StepOutput {
  std::vector<double> log_probs;      // over the vocabulary
  std::vector<double> attention;      // over source positions; may be empty when beta == 0
};

/// Next-token log-probabilities for a prefix that starts with bos.
using StepFn = std::function<StepOutput(std::span<const int> prefix)>;

/// Beam search. Each round expands every live hypothesis by every token and
/// walks the beam_size best candidates by raw log-probability: candidates
/// ending in eos, or reaching max_length content tokens, are finished, the
/// rest stay live. Runs until nothing is live. Returns every finished
/// hypothesis ordered by score, then raw, then tokens.
std::vector<Hypothesis> beam_search(const StepFn& step, const GenerationConfig& cfg);

/// StepFn over a model and a (fused) memory.
StepFn model_step_fn(const Model& model, const HiddenSeq& memory, bool with_attention);

/// Beam search over model inputs: encodes the article, extracts style and
/// trend encodings, fuses them and decodes.
std::vector<Hypothesis> generate_candidates(const Model& model, std::span<const int> article,
                                            std::span<const int> style, std::span<const int> trend,
                                            const GenerationConfig& cfg);

/// Generated token ids with a trailing eos removed.
std::vector<int> strip_eos(const Hypothesis& h, int eos_id);

/// Detokenized text of the hypothesis.
std::string hypothesis_text(const Hypothesis& h, const Vocabulary& vocab, int eos_id);

/// Token budgets for the three model inputs.
struct InputLimits {
  std::size_t article_max = 256;
  std::size_t style_max = 128;
  std::size_t trend_max = 128;
};

struct GeneratedHeadline {
  std::string text;
  Hypothesis hypothesis;
};

/// End-to-end generation for one post of `corpus`: style text from the
/// user's earlier posts, trend text from `buzz`, then beam search. Returns
/// at most `top_k` candidates in rank order. Throws if the article has no
/// tokens.
std::vector<GeneratedHeadline> generate_for_post(const Model& model, const Vocabulary& vocab, const Corpus& corpus,
                                                 const BuzzwordList& buzz, std::string_view post_id,
                                                 const GenerationConfig& cfg, const InputLimits& limits,
                                                 std::size_t top_k);

/// Text of the best candidate.
std::string generate_headline(const Model& model, const Vocabulary& vocab, const Corpus& corpus,
                              const BuzzwordList& buzz, std::string_view post_id, const GenerationConfig& cfg,
                              const InputLimits& limits = {});

}  // namespace headlab
