#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "headlab/error.hpp"
#include "headlab/generate.hpp"
#include "headlab/model.hpp"
#include "headlab/rng.hpp"
#include "oracles.hpp"

using namespace headlab;

namespace {

// Random next-token tables over a 3-token vocabulary; token 2 is eos. Every
// prefix gets its own distribution and attention row.
StepFn table_step(std::uint64_t seed, int sources) {
  auto cache = std::make_shared<std::map<std::vector<int>, StepOutput>>();
  return [=](std::span<const int> prefix) {
    const std::vector<int> key(prefix.begin(), prefix.end());
    auto it = cache->find(key);
    if (it != cache->end()) return it->second;
    std::uint64_t h = seed;
    for (int t : key) h = derive_seed(h, static_cast<std::uint64_t>(t) + 1);
    Rng rng(h);
    StepOutput out;
    double z = 0;
    std::vector<double> p(3);
    for (auto& x : p) z += (x = 0.05 + rng.uniform());
    for (double x : p) out.log_probs.push_back(std::log(x / z));
    double za = 0;
    out.attention.resize(static_cast<std::size_t>(sources));
    for (auto& a : out.attention) za += (a = rng.uniform());
    for (auto& a : out.attention) a /= za;
    return cache->emplace(key, out).first->second;
  };
}

GenerationConfig table_config(int horizon, double alpha, double beta) {
  GenerationConfig c;
  c.beam_size = 1000;
  c.max_length = horizon;
  c.length_alpha = alpha;
  c.coverage_beta = beta;
  c.bos_id = 9;
  c.eos_id = 2;
  return c;
}

ModelConfig tiny(std::uint64_t seed) {
  ModelConfig c;
  c.vocab_size = 12;
  c.d = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.ffn = 16;
  c.max_positions = 24;
  c.seed = seed;
  return c;
}

void perturb(Model& m, std::uint64_t seed) {
  Rng rng(seed);
  for (auto& p : m.parameters()) {
    auto& v = p.var.mutable_value();
    for (Eigen::Index i = 0; i < v.size(); ++i) v.data()[i] += 0.5 * rng.normal();
  }
}

std::vector<int> greedy(const Model& m, const HiddenSeq& memory, int max_length) {
  std::vector<int> prefix{kBosId};
  std::vector<int> out;
  while (true) {
    const auto p = m.decode_step(memory, prefix);
    const int best = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    out.push_back(best);
    if (best == kEosId || static_cast<int>(out.size()) >= max_length) break;
    prefix.push_back(best);
  }
  return out;
}

}  // namespace

TEST(LengthPenalty, Values) {
  EXPECT_EQ(length_penalty(1, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(length_penalty(7, 1.0), 2.0);
  EXPECT_EQ(length_penalty(30, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(length_penalty(13, 0.5), std::sqrt(3.0));
}

TEST(CoverageTerm, Values) {
  const std::vector<double> full{1.0, 2.5};
  EXPECT_EQ(coverage_term(full, 0.7), 0.0);
  const std::vector<double> half{0.5, 1.0};
  EXPECT_DOUBLE_EQ(coverage_term(half, 2.0), 2.0 * std::log(2.0));
  const std::vector<double> none{0.0};
  EXPECT_DOUBLE_EQ(coverage_term(none, 1.0), -std::log(1e-12));
  EXPECT_EQ(coverage_term(none, 0.0), 0.0);
}

TEST(BeamSearch, MatchesExhaustiveEnumeration) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (int horizon = 1; horizon <= 6; ++horizon) {
      for (double alpha : {0.0, 1.0}) {
        for (double beta : {0.0, 0.4}) {
          const StepFn step = table_step(seed, 3);
          const GenerationConfig cfg = table_config(horizon, alpha, beta);
          const auto beam = beam_search(step, cfg);
          const auto all = oracle::exhaustive(step, 3, cfg);
          ASSERT_EQ(beam.size(), all.size());
          for (std::size_t i = 0; i < all.size(); ++i) {
            EXPECT_EQ(beam[i].tokens, all[i].tokens) << "seed " << seed << " horizon " << horizon;
            EXPECT_NEAR(beam[i].score, all[i].score, 1e-12);
          }
        }
      }
    }
  }
}

TEST(BeamSearch, RespectsLengthAndOrdering) {
  GenerationConfig cfg = table_config(4, 1.0, 0.0);
  cfg.beam_size = 3;
  const auto hyps = beam_search(table_step(77, 2), cfg);
  ASSERT_FALSE(hyps.empty());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto& h = hyps[i];
    const auto content = h.tokens.size() - (h.ends_with_eos(2) ? 1 : 0);
    EXPECT_LE(content, 4u);
    if (!h.ends_with_eos(2)) EXPECT_EQ(content, 4u);
    EXPECT_DOUBLE_EQ(h.score, h.raw / length_penalty(h.tokens.size(), 1.0));
    if (i > 0) EXPECT_GE(hyps[i - 1].score, h.score);
  }
}

TEST(BeamSearch, SingleBeamWithoutPenaltyIsGreedy) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    Model m(tiny(s));
    perturb(m, 1000 + s);
    Rng rng(s);
    std::vector<int> article(1 + rng.below(6));
    for (auto& t : article) t = kFirstRegularId + static_cast<int>(rng.below(6));
    GenerationConfig cfg;
    cfg.beam_size = 1;
    cfg.length_alpha = 0.0;
    cfg.max_length = 8;
    const auto hyps = generate_candidates(m, article, {}, {}, cfg);
    ASSERT_EQ(hyps.size(), 1u);
    EXPECT_EQ(hyps[0].tokens, greedy(m, m.encode(article), 8)) << "model " << s;
  }
}

TEST(BeamSearch, InvalidConfigIsRejected) {
  GenerationConfig cfg;
  cfg.beam_size = 0;
  EXPECT_THROW(beam_search(table_step(1, 1), cfg), Error);
  cfg = GenerationConfig{};
  cfg.length_alpha = -1;
  EXPECT_THROW(beam_search(table_step(1, 1), cfg), Error);
}

TEST(Generate, CandidatesAreDeterministicAndBounded) {
  Model m(tiny(3));
  perturb(m, 4);
  const std::vector<int> article{6, 7, 8};
  const std::vector<int> style{9, kSepId, 10};
  const std::vector<int> trend{11};
  GenerationConfig cfg;
  cfg.max_length = 5;
  cfg.coverage_beta = 0.2;
  const auto a = generate_candidates(m, article, style, trend, cfg);
  const auto b = generate_candidates(m, article, style, trend, cfg);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_EQ(a[i].score, b[i].score);
    EXPECT_LE(strip_eos(a[i], kEosId).size(), 5u);
  }
  EXPECT_THROW(generate_candidates(m, std::vector<int>{}, style, trend, cfg), Error);
  cfg.max_length = 24;
  EXPECT_THROW(generate_candidates(m, article, style, trend, cfg), Error);
}

TEST(Generate, ForPostUsesStyleAndTrend) {
  std::vector<std::string> words;
  for (int i = kFirstRegularId; i < 12; ++i) words.push_back("w" + std::to_string(i));
  const Vocabulary vocab(words);
  Model m(tiny(5));
  perturb(m, 6);
  constexpr std::int64_t jan = 1577836800;
  const Corpus corpus(std::vector<Post>{{"a", "u", jan, "w6 w7", "w8", 1},
                                        {"b", "u", jan + 40 * 86400, "w9", "w10 w11 w6", 1},
                                        {"c", "u", jan + 41 * 86400, "w9", "", 1}});
  BuzzwordList buzz;
  buzz.entries.push_back({kFirstRegularId + 3, "w9", BuzzStage::fill, 1.0});
  GenerationConfig cfg;
  cfg.max_length = 4;
  const auto out = generate_for_post(m, vocab, corpus, buzz, "b", cfg, {}, 2);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].text, generate_headline(m, vocab, corpus, buzz, "b", cfg));
  // Same pipeline by hand.
  const std::vector<int> article{10, 11, 6};
  const std::vector<int> style{6, 7};
  const std::vector<int> trend{9};
  const auto direct = generate_candidates(m, article, style, trend, cfg);
  EXPECT_EQ(out[0].hypothesis.tokens, direct[0].tokens);
  EXPECT_EQ(out[0].text, hypothesis_text(direct[0], vocab, kEosId));
  EXPECT_THROW(generate_for_post(m, vocab, corpus, buzz, "c", cfg, {}, 1), Error);
}

TEST(Generate, TextDropsEos) {
  const Vocabulary vocab({"big", "sale", "春"});
  Hypothesis h;
  h.tokens = {kFirstRegularId, kFirstRegularId + 1, kFirstRegularId + 2, kEosId};
  EXPECT_EQ(strip_eos(h, kEosId).size(), 3u);
  EXPECT_EQ(hypothesis_text(h, vocab, kEosId), "big sale春");
}
