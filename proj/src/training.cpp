#include "headlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"
#include "headlab/rouge.hpp"
#include "headlab/summation.hpp"
#include "headlab/text.hpp"

namespace headlab {

// ---------------------------------------------------------------- data

void DataConfig::validate() const {
  if (article_max < 1 || headline_max < 1) throw Error("data config: article_max and headline_max must be >= 1");
  if (vocab_max <= static_cast<std::size_t>(kFirstRegularId)) throw Error("data config: vocab_max too small");
  if (buzz_tf_min < 0 || vocab_tf_min < 0) throw Error("data config: tf_min must be >= 0");
  if (!(buzz_tf_max > 0.0 && buzz_tf_max <= 1.0) || !(vocab_tf_max > 0.0 && vocab_tf_max <= 1.0)) {
    throw Error("data config: tf_max must lie in (0, 1]");
  }
}

TrendIndex::TrendIndex(const Corpus& history, Vocabulary buzz_vocab, BuzzwordQuotas quotas)
    : vocab_(std::move(buzz_vocab)), table_(count_frequencies(history, vocab_)), quotas_(quotas) {}

const BuzzwordList& TrendIndex::at(TimeStep absolute) {
  auto it = cache_.find(absolute);
  if (it == cache_.end()) {
    it = cache_.emplace(absolute, generate_buzzwords(table_, vocab_, table_.relative_step(absolute), quotas_)).first;
  }
  return it->second;
}

Vocabulary build_generation_vocab(const Corpus& train, const DataConfig& cfg) {
  cfg.validate();
  const Vocabulary full = build_model_vocab(train, cfg.vocab_tf_min, cfg.vocab_tf_max);
  if (static_cast<std::size_t>(full.size()) <= cfg.vocab_max) return full;
  std::vector<std::string> regular(full.tokens().begin() + kFirstRegularId,
                                   full.tokens().begin() + static_cast<std::ptrdiff_t>(cfg.vocab_max));
  return Vocabulary(std::move(regular), full.tf_min(), full.tf_max());
}

namespace {

std::vector<int> encode_truncated(const TokenSeq& toks, const Vocabulary& vocab, std::size_t max_tokens) {
  std::vector<int> ids = vocab.encode(toks);
  if (ids.size() > max_tokens) ids.resize(max_tokens);
  return ids;
}

}  // namespace

Example make_example(const Post& post, const Corpus& history, TimeStep step, const Vocabulary& vocab,
                     TrendIndex& trends, const DataConfig& cfg) {
  Example ex;
  ex.id = post.id;
  ex.reference = tokenize(post.headline);
  ex.article = encode_truncated(tokenize(post.article), vocab, cfg.article_max);
  ex.headline = encode_truncated(ex.reference, vocab, cfg.headline_max);
  ex.style = encode_truncated(build_style_text(history, post.id, cfg.style_max), vocab, cfg.style_max);
  ex.trend = encode_truncated(build_trend_text(trends.at(step), cfg.trend_max), vocab, cfg.trend_max);
  return ex;
}

std::vector<Example> make_examples(const Corpus& posts, const Corpus& history, const Vocabulary& vocab,
                                   TrendIndex& trends, const DataConfig& cfg) {
  cfg.validate();
  std::vector<Example> out;
  out.reserve(posts.size());
  for (std::size_t i = 0; i < posts.size(); ++i) {
    const Post& p = posts.posts()[i];
    if (!history.contains(p.id)) throw Error("make_examples: post " + p.id + " missing from the history corpus");
    Example ex = make_example(p, history, posts.step_of(i), vocab, trends, cfg);
    // Posts whose text has no tokens at all cannot be trained on.
    if (ex.article.empty() || ex.headline.empty()) continue;
    out.push_back(std::move(ex));
  }
  return out;
}

// ---------------------------------------------------------------- corruption

void CorruptionConfig::validate() const {
  if (!(select_rate >= 0.0 && select_rate <= 1.0)) throw Error("corruption config: select_rate must lie in [0, 1]");
  for (double f : {mask_fraction, random_fraction, keep_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw Error("corruption config: fractions must lie in [0, 1]");
  }
  if (std::abs(mask_fraction + random_fraction + keep_fraction - 1.0) > 1e-9) {
    throw Error("corruption config: mask, random and keep fractions must sum to 1");
  }
}

namespace {

void apply_choice(Corruption& c, std::size_t pos, const CorruptionConfig& cfg, int vocab_size, Rng& rng) {
  const double u = rng.uniform();
  CorruptionKind kind;
  if (u < cfg.mask_fraction) {
    kind = CorruptionKind::mask;
    c.tokens[pos] = kMaskId;
  } else if (u < cfg.mask_fraction + cfg.random_fraction) {
    kind = CorruptionKind::random;
    const auto regular = static_cast<std::uint64_t>(vocab_size - kFirstRegularId);
    c.tokens[pos] = kFirstRegularId + static_cast<int>(rng.below(regular));
  } else {
    kind = CorruptionKind::keep;
  }
  c.positions.push_back(static_cast<int>(pos));
  c.kinds.push_back(kind);
}

}  // namespace

Corruption corrupt(std::span<const int> tokens, const CorruptionConfig& cfg, int vocab_size, Rng& rng) {
  cfg.validate();
  if (vocab_size <= kFirstRegularId) throw Error("corrupt: vocabulary has no regular tokens");
  Corruption c;
  c.tokens.assign(tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (rng.uniform() < cfg.select_rate) apply_choice(c, i, cfg, vocab_size, rng);
  }
  return c;
}

Corruption corrupt_nonempty(std::span<const int> tokens, const CorruptionConfig& cfg, int vocab_size, Rng& rng,
                            int max_tries) {
  if (tokens.empty()) throw Error("corrupt: empty token sequence");
  for (int i = 0; i < max_tries; ++i) {
    Corruption c = corrupt(tokens, cfg, vocab_size, rng);
    if (!c.positions.empty()) return c;
  }
  Corruption c;
  c.tokens.assign(tokens.begin(), tokens.end());
  apply_choice(c, rng.below(tokens.size()), cfg, vocab_size, rng);
  return c;
}

// ---------------------------------------------------------------- losses

namespace {

HiddenSeq fused_memory(const Model& model, std::span<const int> encoder_input, const Example& ex, Rng* rng) {
  return fuse(model.encode(encoder_input, rng), model.extract_style(ex.style, rng), model.extract_trend(ex.trend, rng));
}

ad::Var pretrain_logits(const Model& model, const Example& ex, const Corruption& c, Rng* rng) {
  if (ex.headline.empty()) throw Error("pretrain: empty headline in example " + ex.id);
  std::vector<int> dec_in;
  dec_in.reserve(ex.headline.size());
  dec_in.push_back(kBosId);
  dec_in.insert(dec_in.end(), ex.headline.begin(), ex.headline.end() - 1);
  return model.decode(fused_memory(model, c.tokens, ex, rng), dec_in, rng);
}

}  // namespace

ad::Var pretrain_loss(const Model& model, const Example& ex, const Corruption& c, Rng* dropout_rng) {
  if (c.positions.empty()) throw Error("pretrain_loss: no selected positions");
  if (c.tokens.size() != ex.headline.size()) throw Error("pretrain_loss: corruption does not match the headline");
  const ad::Var logits = pretrain_logits(model, ex, c, dropout_rng);
  std::vector<int> targets;
  targets.reserve(c.positions.size());
  for (int p : c.positions) targets.push_back(ex.headline[static_cast<std::size_t>(p)]);
  return ad::cross_entropy(logits, c.positions, targets);
}

ad::Var train_loss(const Model& model, const Example& ex, Rng* dropout_rng) {
  if (ex.headline.empty()) throw Error("train_loss: empty headline in example " + ex.id);
  std::vector<int> dec_in{kBosId};
  dec_in.insert(dec_in.end(), ex.headline.begin(), ex.headline.end());
  std::vector<int> targets(ex.headline.begin(), ex.headline.end());
  targets.push_back(kEosId);
  std::vector<int> rows(targets.size());
  std::iota(rows.begin(), rows.end(), 0);
  const ad::Var logits = model.decode(fused_memory(model, ex.article, ex, dropout_rng), dec_in, dropout_rng);
  return ad::cross_entropy(logits, rows, targets);
}

double mean_train_loss(const Model& model, std::span<const Example> examples) {
  if (examples.empty()) throw Error("mean_train_loss: no examples");
  CompensatedSum s;
  for (const auto& ex : examples) s.add(train_loss(model, ex).value()(0, 0));
  return s.value() / static_cast<double>(examples.size());
}

MaskedAccuracy masked_accuracy(const Model& model, std::span<const Example> examples, const CorruptionConfig& cfg) {
  MaskedAccuracy acc;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const Example& ex = examples[i];
    Rng rng(derive_seed(cfg.seed, 0xACC0, i));
    const Corruption c = corrupt_nonempty(ex.headline, cfg, model.config().vocab_size, rng);
    const ad::Matrix& logits = pretrain_logits(model, ex, c, nullptr).value();
    for (int p : c.positions) {
      Eigen::Index best = 0;
      logits.row(p).maxCoeff(&best);
      acc.correct += static_cast<int>(best) == ex.headline[static_cast<std::size_t>(p)] ? 1 : 0;
      ++acc.total;
    }
  }
  return acc;
}

double generation_rouge_l(const Model& model, std::span<const Example> examples, const Vocabulary& vocab,
                          const GenerationConfig& gen) {
  if (examples.empty()) throw Error("generation_rouge_l: no examples");
  CompensatedSum s;
  for (const auto& ex : examples) {
    const auto hyps = generate_candidates(model, ex.article, ex.style, ex.trend, gen);
    const TokenSeq cand = hyps.empty() ? TokenSeq{} : vocab.decode(strip_eos(hyps.front(), gen.eos_id));
    s.add(rouge_l(cand, ex.reference).f1);
  }
  return s.value() / static_cast<double>(examples.size());
}

// ---------------------------------------------------------------- optimisation

double lr_at(std::int64_t step, std::int64_t warmup, double peak) {
  if (step < 1) throw Error("lr_at: step must be >= 1");
  if (warmup < 1) throw Error("lr_at: warmup must be >= 1");
  const auto s = static_cast<double>(step);
  const auto w = static_cast<double>(warmup);
  return peak * std::min(std::pow(s, -0.5), s * std::pow(w, -1.5));
}

Adam::Adam(const Model& model, AdamConfig cfg) : cfg_(cfg) {
  for (const auto& p : model.parameters()) {
    m_.push_back(ad::Matrix::Zero(p.var.rows(), p.var.cols()));
    v_.push_back(ad::Matrix::Zero(p.var.rows(), p.var.cols()));
    count_.push_back(0);
  }
}

void Adam::step(Model& model, double lr) {
  ++t_;
  auto& params = model.parameters();
  if (params.size() != m_.size()) throw Error("adam: parameter list changed");
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Var& var = params[i].var;
    if (!var.requires_grad() || var.grad().size() == 0) continue;
    const ad::Matrix& g = var.grad();
    const auto k = static_cast<double>(++count_[i]);
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseAbs2();
    const double c1 = 1.0 - std::pow(cfg_.beta1, k);
    const double c2 = 1.0 - std::pow(cfg_.beta2, k);
    ad::Matrix& w = var.mutable_value();
    w.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + cfg_.eps);
  }
}

void TrainConfig::validate() const {
  if (batch_size < 1 || grad_accum < 1 || warmup < 1 || epochs < 1 || eval_interval < 1) {
    throw Error("train config: batch_size, grad_accum, warmup, epochs and eval_interval must be positive");
  }
  if (max_steps < 0) throw Error("train config: max_steps must be >= 0");
  if (!(peak_lr > 0.0)) throw Error("train config: peak_lr must be positive");
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0 && adam.beta2 >= 0.0 && adam.beta2 < 1.0 && adam.eps > 0.0)) {
    throw Error("train config: invalid Adam coefficients");
  }
}

std::int64_t planned_steps(const TrainConfig& cfg, std::size_t n) {
  if (cfg.max_steps > 0) return cfg.max_steps;
  const auto per_step = static_cast<std::int64_t>(cfg.batch_size) * cfg.grad_accum;
  const auto total = static_cast<std::int64_t>(n) * cfg.epochs;
  return std::max<std::int64_t>(1, (total + per_step - 1) / per_step);
}

namespace {

// Endless stream of example indices, reshuffled every epoch.
class ExampleStream {
 public:
  ExampleStream(std::size_t n, std::uint64_t seed) : n_(n), seed_(seed) { reshuffle(); }

  struct Draw {
    std::size_t index;
    std::uint64_t epoch;
  };

  Draw next() {
    if (pos_ == order_.size()) {
      ++epoch_;
      reshuffle();
    }
    return {order_[pos_++], epoch_};
  }

 private:
  void reshuffle() {
    order_.resize(n_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    Rng rng(derive_seed(seed_, 0x0D3E, epoch_));
    rng.shuffle(order_.begin(), order_.end());
    pos_ = 0;
  }

  std::size_t n_;
  std::uint64_t seed_;
  std::uint64_t epoch_ = 0;
  std::vector<std::size_t> order_;
  std::size_t pos_ = 0;
};

using LossFn = std::function<ad::Var(std::size_t index, std::uint64_t epoch, Rng* dropout_rng)>;
using EvalFn = std::function<double()>;

RunResult run_loop(Model& model, std::span<const Example> train, bool has_validation, const TrainConfig& cfg,
                   const LossFn& loss_fn, const EvalFn& eval_fn, const char* what) {
  cfg.validate();
  if (train.empty()) throw Error(std::string(what) + ": no training examples");
  const std::int64_t total = planned_steps(cfg, train.size());
  const double scale = 1.0 / static_cast<double>(cfg.batch_size * cfg.grad_accum);
  const bool use_dropout = model.config().dropout > 0.0;
  ExampleStream stream(train.size(), cfg.seed);
  Adam adam(model, cfg.adam);
  RunResult result;
  result.log.reserve(static_cast<std::size_t>(total));

  for (std::int64_t step = 1; step <= total; ++step) {
    model.zero_grad();
    CompensatedSum loss_sum;
    std::uint64_t slot = 0;
    for (int a = 0; a < cfg.grad_accum; ++a) {
      for (int b = 0; b < cfg.batch_size; ++b, ++slot) {
        const auto draw = stream.next();
        Rng dropout_rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(step), slot));
        const ad::Var loss = loss_fn(draw.index, draw.epoch, use_dropout ? &dropout_rng : nullptr);
        const double value = loss.value()(0, 0);
        if (!std::isfinite(value)) {
          std::ostringstream msg;
          msg << what << ": non-finite loss " << value << " at step " << step << " on example '"
              << train[draw.index].id << "'";
          throw Error(msg.str());
        }
        loss_sum.add(value);
        ad::backward(loss, scale);
      }
    }
    MetricRow row;
    row.step = step;
    row.loss = loss_sum.value() * scale;
    row.lr = lr_at(step, cfg.warmup, cfg.peak_lr);
    adam.step(model, row.lr);
    if (has_validation && (step % cfg.eval_interval == 0 || step == total)) {
      row.val_metric = eval_fn();
      if (result.best.empty() || row.val_metric > result.best_metric) {
        result.best = snapshot(model);
        result.best_metric = row.val_metric;
        result.best_step = step;
      }
    }
    result.log.push_back(row);
  }
  model.zero_grad();
  if (!has_validation) {
    result.best = snapshot(model);
    result.best_step = total;
  }
  result.steps = total;
  return result;
}

}  // namespace

RunResult run_pretraining(Model& model, std::span<const Example> train, std::span<const Example> validation,
                          const TrainConfig& cfg, const CorruptionConfig& corruption) {
  corruption.validate();
  const Component trainable[] = {Component::style, Component::trend};
  model.set_trainable(trainable);
  const int vocab_size = model.config().vocab_size;
  const LossFn loss = [&](std::size_t i, std::uint64_t epoch, Rng* rng) {
    Rng crng(derive_seed(corruption.seed, epoch, i));
    const Corruption c = corrupt_nonempty(train[i].headline, corruption, vocab_size, crng);
    return pretrain_loss(model, train[i], c, rng);
  };
  const EvalFn eval = [&] { return masked_accuracy(model, validation, corruption).value(); };
  try {
    RunResult r = run_loop(model, train, !validation.empty(), cfg, loss, eval, "pretrain");
    model.set_all_trainable();
    return r;
  } catch (...) {
    model.set_all_trainable();
    throw;
  }
}

RunResult run_training(Model& model, std::span<const Example> train, std::span<const Example> validation,
                       const TrainConfig& cfg, const Vocabulary& vocab, const GenerationConfig& gen) {
  gen.validate();
  model.set_all_trainable();
  const LossFn loss = [&](std::size_t i, std::uint64_t, Rng* rng) { return train_loss(model, train[i], rng); };
  const EvalFn eval = [&] { return generation_rouge_l(model, validation, vocab, gen); };
  return run_loop(model, train, !validation.empty(), cfg, loss, eval, "train");
}

}  // namespace headlab
