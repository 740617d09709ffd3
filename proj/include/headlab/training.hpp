#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "headlab/buzzword.hpp"
#include "headlab/corpus.hpp"
#include "headlab/generate.hpp"
#include "headlab/model.hpp"
#include "headlab/vocab.hpp"

namespace headlab {

class Rng;

// ---------------------------------------------------------------- data

/// Token-id inputs of one post.
struct Example {
  std::string id;
  std::vector<int> article;
  std::vector<int> headline;
  std::vector<int> style;
  std::vector<int> trend;
  TokenSeq reference;  // tokenized headline before vocabulary mapping
};

struct DataConfig {
  std::size_t article_max = 256;
  std::size_t headline_max = 32;
  std::size_t style_max = 128;
  std::size_t trend_max = 128;
  // Headline vocabulary used for buzzwords.
  std::int64_t buzz_tf_min = 10;
  double buzz_tf_max = 0.01;
  BuzzwordQuotas quotas;
  // Model vocabulary (headlines and articles).
  std::int64_t vocab_tf_min = 1;
  double vocab_tf_max = 1.0;
  std::size_t vocab_max = 4096;  // including reserved symbols

  InputLimits limits() const { return {article_max, style_max, trend_max}; }
  void validate() const;
};

/// Buzzword lists per absolute time step, computed lazily from one corpus.
class TrendIndex {
 public:
  TrendIndex(const Corpus& history, Vocabulary buzz_vocab, BuzzwordQuotas quotas);

  const BuzzwordList& at(TimeStep absolute);
  const Vocabulary& vocab() const { return vocab_; }
  const FrequencyTable& table() const { return table_; }

 private:
  Vocabulary vocab_;
  FrequencyTable table_;
  BuzzwordQuotas quotas_;
  std::map<TimeStep, BuzzwordList> cache_;
};

/// Model vocabulary over training headlines and articles, capped at
/// cfg.vocab_max entries.
Vocabulary build_generation_vocab(const Corpus& train, const DataConfig& cfg);

/// One example per post of `posts`. Style text comes from `history` (which
/// must contain every post of `posts`), trend text from `trends`.
std::vector<Example> make_examples(const Corpus& posts, const Corpus& history, const Vocabulary& vocab,
                                   TrendIndex& trends, const DataConfig& cfg);

Example make_example(const Post& post, const Corpus& history, TimeStep step, const Vocabulary& vocab,
                     TrendIndex& trends, const DataConfig& cfg);

// ---------------------------------------------------------------- corruption

struct CorruptionConfig {
  double select_rate = 0.15;
  double mask_fraction = 0.8;
  double random_fraction = 0.1;
  double keep_fraction = 0.1;
  std::uint64_t seed = 3407;

  void validate() const;
};

enum class CorruptionKind : std::uint8_t { mask, random, keep };

struct Corruption {
  std::vector<int> tokens;
  std::vector<int> positions;             // selected positions, ascending
  std::vector<CorruptionKind> kinds;      // parallel to positions
};

/// Selects each position independently with select_rate; a selected token
/// becomes <mask>, a uniform regular vocabulary token, or stays as is.
Corruption corrupt(std::span<const int> tokens, const CorruptionConfig& cfg, int vocab_size, Rng& rng);

/// Draws corruptions until at least one position is selected (at most
/// `max_tries`, after which one position is forced through the same split).
Corruption corrupt_nonempty(std::span<const int> tokens, const CorruptionConfig& cfg, int vocab_size, Rng& rng,
                            int max_tries = 64);

// ---------------------------------------------------------------- losses

/// Masked reconstruction loss: the encoder reads the corrupted headline, the
/// fused states feed the decoder under teacher forcing ([bos] + y[0..n-2]),
/// and cross-entropy is averaged over the selected positions.
ad::Var pretrain_loss(const Model& model, const Example& ex, const Corruption& c, Rng* dropout_rng = nullptr);

/// Teacher-forced NLL on the fused article states: decoder input [bos] + y,
/// targets y + [eos], averaged over the |y| + 1 target positions.
ad::Var train_loss(const Model& model, const Example& ex, Rng* dropout_rng = nullptr);

/// Mean of the per-example training losses (no gradients kept).
double mean_train_loss(const Model& model, std::span<const Example> examples);

/// Top-1 accuracy of the reconstruction at the selected positions.
struct MaskedAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};
MaskedAccuracy masked_accuracy(const Model& model, std::span<const Example> examples, const CorruptionConfig& cfg);

/// Macro ROUGE-L F1 of the top beam hypothesis against each reference.
double generation_rouge_l(const Model& model, std::span<const Example> examples, const Vocabulary& vocab,
                          const GenerationConfig& gen);

// ---------------------------------------------------------------- optimisation

/// peak * min(step^-0.5, step * warmup^-1.5); step >= 1.
double lr_at(std::int64_t step, std::int64_t warmup, double peak = 2e-3);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adam over the model's parameters; parameters without gradients (frozen
/// or unused) are left untouched and keep their moment estimates.
class Adam {
 public:
  Adam(const Model& model, AdamConfig cfg = {});
  void step(Model& model, double lr);
  std::int64_t steps_taken() const { return t_; }

 private:
  AdamConfig cfg_;
  std::vector<ad::Matrix> m_;
  std::vector<ad::Matrix> v_;
  std::vector<std::int64_t> count_;
  std::int64_t t_ = 0;
};

struct TrainConfig {
  int batch_size = 64;
  int grad_accum = 4;
  std::int64_t warmup = 100;
  double peak_lr = 2e-3;
  int epochs = 5;
  std::int64_t max_steps = 0;  // > 0 overrides epochs
  std::int64_t eval_interval = 100;
  std::uint64_t seed = 3407;
  AdamConfig adam;

  void validate() const;
};

struct MetricRow {
  std::int64_t step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double val_metric = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
  std::vector<MetricRow> log;
  ParamValues best;
  double best_metric = std::numeric_limits<double>::quiet_NaN();
  std::int64_t best_step = 0;
  std::int64_t steps = 0;
};

/// Optimizer steps implied by the config for a dataset of n examples.
std::int64_t planned_steps(const TrainConfig& cfg, std::size_t n);

/// Extractor pretraining: only style and trend extractor parameters are
/// updated. Validation metric is masked-token accuracy. Throws on a
/// non-finite loss.
RunResult run_pretraining(Model& model, std::span<const Example> train, std::span<const Example> validation,
                          const TrainConfig& cfg, const CorruptionConfig& corruption);

/// Full-parameter training. Validation metric is ROUGE-L F1 of beam output.
RunResult run_training(Model& model, std::span<const Example> train, std::span<const Example> validation,
                       const TrainConfig& cfg, const Vocabulary& vocab, const GenerationConfig& gen);

}  // namespace headlab
