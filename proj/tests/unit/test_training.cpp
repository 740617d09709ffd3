#include <gtest/gtest.h>

#include <cmath>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"
#include "headlab/training.hpp"
#include "test_support.hpp"

using namespace headlab;
using ad::Matrix;

namespace {

constexpr int kVocab = 30;

ModelConfig small(std::uint64_t seed = 3) {
  ModelConfig c;
  c.vocab_size = kVocab;
  c.d = 16;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn = 32;
  c.max_positions = 32;
  c.seed = seed;
  return c;
}

std::vector<Example> dataset(std::size_t n, int vocab, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Example> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(fixtures::random_example(rng, vocab, 6, 4, 5, 5, "ex" + std::to_string(i)));
  }
  return out;
}

bool same_values(const ParamValues& a, const ParamValues& b, const std::function<bool(const std::string&)>& which) {
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (which(a[i].first) && a[i].second != b[i].second) return false;
  }
  return true;
}

}  // namespace

// ---------------------------------------------------------------- corruption

TEST(Corruption, ZeroRateIsIdentity) {
  CorruptionConfig cfg;
  cfg.select_rate = 0.0;
  Rng rng(1);
  const std::vector<int> toks{6, 7, 8, 9};
  const Corruption c = corrupt(toks, cfg, kVocab, rng);
  EXPECT_EQ(c.tokens, toks);
  EXPECT_TRUE(c.positions.empty());
}

TEST(Corruption, FullMaskReplacesEverything) {
  CorruptionConfig cfg;
  cfg.select_rate = 1.0;
  cfg.mask_fraction = 1.0;
  cfg.random_fraction = 0.0;
  cfg.keep_fraction = 0.0;
  Rng rng(2);
  const Corruption c = corrupt(std::vector<int>{6, 7, 8}, cfg, kVocab, rng);
  EXPECT_EQ(c.tokens, (std::vector<int>{kMaskId, kMaskId, kMaskId}));
  EXPECT_EQ(c.positions, (std::vector<int>{0, 1, 2}));
}

TEST(Corruption, DefaultRatesHold) {
  const CorruptionConfig cfg;
  Rng rng(3);
  std::size_t tokens = 0, selected = 0, masked = 0, random = 0, kept = 0;
  while (tokens < 200000) {
    std::vector<int> h(20);
    for (auto& t : h) t = kFirstRegularId + static_cast<int>(rng.below(kVocab - kFirstRegularId));
    const Corruption c = corrupt(h, cfg, kVocab, rng);
    tokens += h.size();
    selected += c.positions.size();
    for (std::size_t k = 0; k < c.positions.size(); ++k) {
      const int tok = c.tokens[static_cast<std::size_t>(c.positions[k])];
      switch (c.kinds[k]) {
        case CorruptionKind::mask:
          ++masked;
          EXPECT_EQ(tok, kMaskId);
          break;
        case CorruptionKind::random:
          ++random;
          EXPECT_GE(tok, kFirstRegularId);
          break;
        case CorruptionKind::keep:
          ++kept;
          EXPECT_EQ(tok, h[static_cast<std::size_t>(c.positions[k])]);
          break;
      }
    }
    EXPECT_TRUE(std::is_sorted(c.positions.begin(), c.positions.end()));
  }
  const auto frac = [](std::size_t a, std::size_t b) { return static_cast<double>(a) / static_cast<double>(b); };
  EXPECT_NEAR(frac(selected, tokens), 0.15, 0.01);
  EXPECT_NEAR(frac(masked, selected), 0.8, 0.02);
  EXPECT_NEAR(frac(random, selected), 0.1, 0.02);
  EXPECT_NEAR(frac(kept, selected), 0.1, 0.02);
}

TEST(Corruption, NonemptyAlwaysSelects) {
  CorruptionConfig cfg;
  cfg.select_rate = 0.0;
  Rng rng(4);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(corrupt_nonempty(std::vector<int>{6, 7}, cfg, kVocab, rng).positions.size(), 1u);
  cfg.select_rate = 0.15;
  for (int i = 0; i < 200; ++i) EXPECT_FALSE(corrupt_nonempty(std::vector<int>{6}, cfg, kVocab, rng).positions.empty());
}

TEST(Corruption, FractionsMustSumToOne) {
  CorruptionConfig cfg;
  cfg.keep_fraction = 0.2;
  Rng rng(5);
  EXPECT_THROW(corrupt(std::vector<int>{6}, cfg, kVocab, rng), Error);
}

// ---------------------------------------------------------------- losses

TEST(Losses, UniformOutputGivesLogVocab) {
  Model m(small());
  m.parameter("embedding.tokens").mutable_value().setZero();
  const auto data = dataset(1, kVocab, 6);
  CorruptionConfig cfg;
  Rng rng(6);
  const Corruption c = corrupt_nonempty(data[0].headline, cfg, kVocab, rng);
  EXPECT_NEAR(pretrain_loss(m, data[0], c).value()(0, 0), std::log(static_cast<double>(kVocab)), 1e-12);
  EXPECT_NEAR(train_loss(m, data[0]).value()(0, 0), std::log(static_cast<double>(kVocab)), 1e-12);
}

TEST(Losses, NonNegativeAndDuplicationInvariant) {
  const Model m(small());
  const auto data = dataset(3, kVocab, 7);
  for (const auto& ex : data) EXPECT_GE(train_loss(m, ex).value()(0, 0), 0.0);
  std::vector<Example> doubled;
  for (const auto& ex : data) {
    doubled.push_back(ex);
    doubled.push_back(ex);
  }
  EXPECT_NEAR(mean_train_loss(m, doubled), mean_train_loss(m, data), 1e-14);
}

TEST(Losses, TrainTargetsEndWithEos) {
  // A decoder that strongly prefers eos everywhere is rewarded on exactly one
  // of the |y| + 1 targets.
  Model m(small());
  auto& emb = m.parameter("embedding.tokens").mutable_value();
  emb.setZero();
  auto& bias = m.parameter("decoder.final_norm.bias").mutable_value();
  bias.setZero();
  m.parameter("decoder.final_norm.gain").mutable_value().setZero();
  bias(0, 0) = 1.0;
  emb(kEosId, 0) = 40.0;
  Example ex = dataset(1, kVocab, 8)[0];
  const double lv = train_loss(m, ex).value()(0, 0);
  const double z = std::log(std::exp(40.0) + (kVocab - 1));
  const double expected = (4 * (z - 0.0) + (z - 40.0)) / 5.0;
  EXPECT_NEAR(lv, expected, 1e-9);
}

TEST(Losses, PretrainRejectsMismatchedCorruption) {
  const Model m(small());
  const auto data = dataset(1, kVocab, 9);
  Corruption c;
  EXPECT_THROW(pretrain_loss(m, data[0], c), Error);
  c.tokens = {6};
  c.positions = {0};
  c.kinds = {CorruptionKind::mask};
  EXPECT_THROW(pretrain_loss(m, data[0], c), Error);
}

TEST(GradientCheck, PretrainLossOverExtractors) {
  Model m(fixtures::toy_config(24, 11));
  Rng rng(12);
  const Example ex = fixtures::random_example(rng, 24, 5, 5, 4, 4);
  CorruptionConfig cfg;
  cfg.select_rate = 0.5;
  const Corruption c = corrupt_nonempty(ex.headline, cfg, 24, rng);
  const std::vector<Component> extractors{Component::style, Component::trend};
  m.set_trainable(extractors);
  const auto r = fixtures::finite_difference_check(
      m, [&] { return pretrain_loss(m, ex, c); },
      [](const std::string& n) { return n.starts_with("style.") || n.starts_with("trend."); }, 1, 13);
  EXPECT_LT(r.max_rel, 1e-5) << r.worst;
  EXPECT_GT(r.checked, 0u);
  for (const auto& p : m.parameters()) {
    if (!(p.name.starts_with("style.") || p.name.starts_with("trend."))) EXPECT_EQ(p.var.grad().size(), 0) << p.name;
  }
}

TEST(GradientCheck, TrainLossOverAllParameters) {
  Model m(fixtures::toy_config(24, 14));
  Rng rng(15);
  const Example ex = fixtures::random_example(rng, 24, 5, 4, 4, 4);
  const auto r = fixtures::finite_difference_check(
      m, [&] { return train_loss(m, ex); }, [](const std::string&) { return true; }, 1, 16);
  EXPECT_LT(r.max_rel, 1e-5) << r.worst;
}

// ---------------------------------------------------------------- optimisation

TEST(LearningRate, ClosedForm) {
  EXPECT_NEAR(lr_at(100, 100), 2e-4, 1e-18);
  EXPECT_NEAR(lr_at(1, 100), 2e-6, 1e-20);
  for (std::int64_t s = 1; s <= 10000; ++s) {
    const double expect = 2e-3 * std::min(1.0 / std::sqrt(static_cast<double>(s)), s * std::pow(100.0, -1.5));
    EXPECT_NEAR(lr_at(s, 100), expect, 1e-15 * expect);
  }
  EXPECT_THROW(lr_at(0, 100), Error);
  EXPECT_LT(lr_at(99, 100), lr_at(100, 100));
  EXPECT_LT(lr_at(101, 100), lr_at(100, 100));
}

TEST(Adam, StepsFollowTheUpdateRule) {
  Model m(small());
  const auto data = dataset(1, kVocab, 17);
  // Step 1 with only the decoder trainable; step 2 with everything.
  const std::vector<Component> dec{Component::decoder};
  m.set_trainable(dec);
  Adam adam(m);
  ad::backward(train_loss(m, data[0]));
  const ParamValues w0 = snapshot(m);
  std::vector<Matrix> g0;
  for (const auto& p : m.parameters()) g0.push_back(p.var.grad());
  adam.step(m, 0.01);
  const ParamValues w1 = snapshot(m);
  for (std::size_t i = 0; i < w0.size(); ++i) {
    if (g0[i].size() == 0) {
      EXPECT_EQ(w1[i].second, w0[i].second) << w0[i].first;
      continue;
    }
    const Matrix expect = w0[i].second.array() - 0.01 * g0[i].array() / (g0[i].array().abs() + 1e-8);
    EXPECT_TRUE(w1[i].second.isApprox(expect, 1e-12)) << w0[i].first;
  }
  m.set_all_trainable();
  m.zero_grad();
  ad::backward(train_loss(m, data[0]));
  std::vector<Matrix> g1;
  for (const auto& p : m.parameters()) g1.push_back(p.var.grad());
  adam.step(m, 0.01);
  const ParamValues w2 = snapshot(m);
  for (std::size_t i = 0; i < w0.size(); ++i) {
    if (g0[i].size() != 0 || g1[i].size() == 0) continue;
    // First update for this tensor: bias correction uses its own count.
    const Matrix expect = w1[i].second.array() - 0.01 * g1[i].array() / (g1[i].array().abs() + 1e-8);
    EXPECT_TRUE(w2[i].second.isApprox(expect, 1e-12)) << w0[i].first;
  }
  EXPECT_EQ(adam.steps_taken(), 2);
}

TEST(TrainConfig, PlannedSteps) {
  TrainConfig c;
  EXPECT_EQ(planned_steps(c, 100), 2);  // ceil(500 / 256)
  c.max_steps = 7;
  EXPECT_EQ(planned_steps(c, 100), 7);
  c = TrainConfig{};
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), Error);
}

// ---------------------------------------------------------------- runs

TEST(Pretraining, OnlyExtractorsMove) {
  Model m(fixtures::toy_config(24, 18));
  Rng rng(19);
  std::vector<Example> data;
  for (int i = 0; i < 4; ++i) data.push_back(fixtures::random_example(rng, 24, 6, 5, 4, 4, "p" + std::to_string(i)));
  const ParamValues before = snapshot(m);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.grad_accum = 1;
  cfg.max_steps = 50;
  cfg.warmup = 10;
  const RunResult r = run_pretraining(m, data, {}, cfg, CorruptionConfig{});
  EXPECT_EQ(r.steps, 50);
  const ParamValues after = snapshot(m);
  const auto is_extractor = [](const std::string& n) { return n.starts_with("style.") || n.starts_with("trend."); };
  EXPECT_TRUE(same_values(before, after, [&](const std::string& n) { return !is_extractor(n); }));
  for (std::size_t i = 0; i < before.size(); ++i) {
    if (is_extractor(before[i].first) && !before[i].first.ends_with("positions")) {
      EXPECT_NE(before[i].second, after[i].second) << before[i].first;
    }
  }
  for (const auto& p : m.parameters()) EXPECT_TRUE(p.var.requires_grad());
}

TEST(Training, SameSeedSameWeights) {
  const auto data = dataset(6, kVocab, 20);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.grad_accum = 2;
  cfg.max_steps = 8;
  cfg.warmup = 4;
  cfg.peak_lr = 1e-2;
  GenerationConfig gen;
  gen.max_length = 5;
  const Vocabulary vocab([] {
    std::vector<std::string> t;
    for (int i = kFirstRegularId; i < kVocab; ++i) t.push_back("w" + std::to_string(i));
    return t;
  }());
  Model a(small()), b(small());
  const double initial = mean_train_loss(a, data);
  const RunResult ra = run_training(a, data, {}, cfg, vocab, gen);
  const RunResult rb = run_training(b, data, {}, cfg, vocab, gen);
  EXPECT_TRUE(same_values(snapshot(a), snapshot(b), [](const std::string&) { return true; }));
  ASSERT_EQ(ra.log.size(), 8u);
  for (std::size_t i = 0; i < ra.log.size(); ++i) EXPECT_EQ(ra.log[i].loss, rb.log[i].loss);
  EXPECT_LT(mean_train_loss(a, data), initial);
}

TEST(Training, KeepsBestValidationSnapshot) {
  const auto data = dataset(4, kVocab, 21);
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.grad_accum = 1;
  cfg.max_steps = 6;
  cfg.eval_interval = 2;
  const Vocabulary vocab([] {
    std::vector<std::string> t;
    for (int i = kFirstRegularId; i < kVocab; ++i) t.push_back("w" + std::to_string(i));
    return t;
  }());
  std::vector<Example> val = dataset(2, kVocab, 22);
  for (auto& ex : val) ex.reference = vocab.decode(ex.headline);
  GenerationConfig gen;
  gen.beam_size = 2;
  gen.max_length = 4;
  Model m(small());
  const RunResult r = run_training(m, data, val, cfg, vocab, gen);
  double best = -1;
  std::int64_t best_step = 0;
  std::size_t evals = 0;
  for (const auto& row : r.log) {
    if (std::isnan(row.val_metric)) continue;
    ++evals;
    if (row.val_metric > best) {
      best = row.val_metric;
      best_step = row.step;
    }
  }
  EXPECT_EQ(evals, 3u);
  EXPECT_EQ(r.best_metric, best);
  EXPECT_EQ(r.best_step, best_step);
}

TEST(Training, NonFiniteLossAborts) {
  const auto data = dataset(2, kVocab, 23);
  Model m(small());
  m.parameter("decoder.final_norm.gain").mutable_value()(0, 0) = std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.grad_accum = 1;
  cfg.max_steps = 2;
  try {
    run_training(m, data, {}, cfg, Vocabulary{}, GenerationConfig{});
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos) << e.what();
  }
}

// ---------------------------------------------------------------- data

TEST(Examples, AssembleInputsFromHistoryAndTrends) {
  constexpr std::int64_t jan = 1577836800, day = 86400;
  std::vector<Post> posts{
      {"a", "u", jan, "old news", "alpha beta", 600},
      {"b", "u", jan + 40 * day, "big sale", "gamma delta epsilon", 600},
      {"c", "v", jan + 41 * day, "", "zeta", 600},
  };
  const Corpus corpus(posts);
  DataConfig cfg;
  cfg.article_max = 2;
  const Vocabulary vocab = build_generation_vocab(corpus, cfg);
  TrendIndex trends(corpus, build_vocab(corpus, 1, 1.0), BuzzwordQuotas{});
  const auto examples = make_examples(corpus, corpus, vocab, trends, cfg);
  ASSERT_EQ(examples.size(), 2u);  // "c" has an empty headline
  const Example& b = examples[1];
  EXPECT_EQ(b.id, "b");
  EXPECT_EQ(vocab.decode(b.article), (TokenSeq{"gamma", "delta"}));
  EXPECT_EQ(vocab.decode(b.headline), (TokenSeq{"big", "sale"}));
  EXPECT_EQ(vocab.decode(b.style), (TokenSeq{"old", "news"}));
  EXPECT_TRUE(examples[0].style.empty());
  EXPECT_TRUE(examples[0].trend.empty());  // first month: no buzzwords yet
  EXPECT_EQ(b.trend.size(), trends.at(corpus.step_of(1)).entries.size());
  EXPECT_EQ(b.reference, (TokenSeq{"big", "sale"}));
}

TEST(Examples, VocabularyCapKeepsMostFrequent) {
  constexpr std::int64_t jan = 1577836800;
  const Corpus corpus(std::vector<Post>{{"a", "u", jan, "x x x y y", "x z", 600}});
  DataConfig cfg;
  cfg.vocab_max = kFirstRegularId + 2;
  const Vocabulary v = build_generation_vocab(corpus, cfg);
  EXPECT_EQ(v.size(), kFirstRegularId + 2);
  EXPECT_EQ(v.token(kFirstRegularId), "x");
  EXPECT_EQ(v.token(kFirstRegularId + 1), "y");
}
