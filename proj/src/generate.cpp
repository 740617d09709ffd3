#include "headlab/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "headlab/error.hpp"
#include "headlab/model.hpp"
#include "headlab/text.hpp"

namespace headlab {

void GenerationConfig::validate() const {
  if (beam_size < 1) throw Error("generation config: beam_size must be >= 1");
  if (max_length < 1) throw Error("generation config: max_length must be >= 1");
  if (!(length_alpha >= 0.0)) throw Error("generation config: length_alpha must be >= 0");
  if (!(coverage_beta >= 0.0)) throw Error("generation config: coverage_beta must be >= 0");
}

double length_penalty(std::size_t length, double alpha) {
  return std::pow((5.0 + static_cast<double>(length)) / 6.0, alpha);
}

double coverage_term(std::span<const double> coverage, double beta) {
  if (beta == 0.0) return 0.0;
  double s = 0.0;
  for (const double c : coverage) s += std::log(std::clamp(c, 1e-12, 1.0));
  return -beta * s;
}

namespace {

struct Live {
  std::vector<int> prefix;  // starts with bos
  double raw = 0.0;
  std::vector<double> coverage;
};

struct Candidate {
  std::size_t parent;
  int token;
  double raw;
};

Hypothesis finish(const Live& parent, int token, double raw, const std::vector<double>& coverage,
                  const GenerationConfig& cfg) {
  Hypothesis h;
  h.tokens.assign(parent.prefix.begin() + 1, parent.prefix.end());
  h.tokens.push_back(token);
  h.raw = raw;
  h.score = raw / length_penalty(h.tokens.size(), cfg.length_alpha) - coverage_term(coverage, cfg.coverage_beta);
  return h;
}

}  // namespace

std::vector<Hypothesis> beam_search(const StepFn& step, const GenerationConfig& cfg) {
  cfg.validate();
  std::vector<Live> live{{{cfg.bos_id}, 0.0, {}}};
  std::vector<Hypothesis> finished;
  const bool track_coverage = cfg.coverage_beta > 0.0;

  while (!live.empty()) {
    std::vector<StepOutput> outs;
    outs.reserve(live.size());
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < live.size(); ++i) {
      outs.push_back(step(live[i].prefix));
      const auto& lp = outs.back().log_probs;
      if (lp.empty()) throw Error("beam_search: step returned no probabilities");
      for (std::size_t t = 0; t < lp.size(); ++t) {
        cands.push_back({i, static_cast<int>(t), live[i].raw + lp[t]});
      }
    }
    const auto keep = std::min(cands.size(), static_cast<std::size_t>(cfg.beam_size));
    std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                      [](const Candidate& a, const Candidate& b) {
                        if (a.raw != b.raw) return a.raw > b.raw;
                        if (a.parent != b.parent) return a.parent < b.parent;
                        return a.token < b.token;
                      });
    std::vector<Live> next;
    for (std::size_t k = 0; k < keep; ++k) {
      const Candidate& c = cands[k];
      const Live& parent = live[c.parent];
      std::vector<double> coverage = parent.coverage;
      if (track_coverage) {
        const auto& attn = outs[c.parent].attention;
        if (coverage.empty()) coverage.assign(attn.size(), 0.0);
        if (attn.size() != coverage.size()) throw Error("beam_search: attention width changed between steps");
        for (std::size_t j = 0; j < attn.size(); ++j) coverage[j] += attn[j];
      }
      const auto content = parent.prefix.size();  // tokens after bos, including the new one
      if (c.token == cfg.eos_id || static_cast<int>(content) >= cfg.max_length) {
        finished.push_back(finish(parent, c.token, c.raw, coverage, cfg));
      } else {
        Live l{parent.prefix, c.raw, std::move(coverage)};
        l.prefix.push_back(c.token);
        next.push_back(std::move(l));
      }
    }
    live = std::move(next);
  }

  std::sort(finished.begin(), finished.end(), [](const Hypothesis& a, const Hypothesis& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.raw != b.raw) return a.raw > b.raw;
    return a.tokens < b.tokens;
  });
  return finished;
}

StepFn model_step_fn(const Model& model, const HiddenSeq& memory, bool with_attention) {
  return [&model, &memory, with_attention](std::span<const int> prefix) {
    ad::Matrix attn;
    const ad::Var logits = model.decode(memory, prefix, nullptr, with_attention ? &attn : nullptr);
    const ad::RowVector lp = ad::log_softmax(logits.value().row(logits.rows() - 1));
    StepOutput out;
    out.log_probs.assign(lp.data(), lp.data() + lp.size());
    if (with_attention && attn.rows() > 0) {
      const auto last = attn.row(attn.rows() - 1);
      out.attention.assign(last.data(), last.data() + last.size());
    }
    return out;
  };
}

std::vector<Hypothesis> generate_candidates(const Model& model, std::span<const int> article,
                                            std::span<const int> style, std::span<const int> trend,
                                            const GenerationConfig& cfg) {
  if (article.empty()) throw Error("generate: article is empty");
  if (cfg.max_length + 1 > model.config().max_positions) {
    throw Error("generate: max_length exceeds the decoder's positions");
  }
  const HiddenSeq memory = fuse(model.encode(article), model.extract_style(style), model.extract_trend(trend));
  return beam_search(model_step_fn(model, memory, cfg.coverage_beta > 0.0), cfg);
}

std::vector<int> strip_eos(const Hypothesis& h, int eos_id) {
  std::vector<int> out = h.tokens;
  if (!out.empty() && out.back() == eos_id) out.pop_back();
  return out;
}

std::string hypothesis_text(const Hypothesis& h, const Vocabulary& vocab, int eos_id) {
  const TokenSeq toks = vocab.decode(strip_eos(h, eos_id));
  return detokenize(toks);
}

std::vector<GeneratedHeadline> generate_for_post(const Model& model, const Vocabulary& vocab, const Corpus& corpus,
                                                 const BuzzwordList& buzz, std::string_view post_id,
                                                 const GenerationConfig& cfg, const InputLimits& limits,
                                                 std::size_t top_k) {
  const Post& post = corpus.post(post_id);
  const auto cut = [&](const TokenSeq& toks, std::size_t max) {
    std::vector<int> ids = vocab.encode(toks);
    if (ids.size() > max) ids.resize(max);
    return ids;
  };
  const std::vector<int> article = cut(tokenize(post.article), limits.article_max);
  if (article.empty()) throw Error("generate: post " + post.id + " has an empty article");
  const std::vector<int> style = cut(build_style_text(corpus, post_id, limits.style_max), limits.style_max);
  const std::vector<int> trend = cut(build_trend_text(buzz, limits.trend_max), limits.trend_max);
  const auto hyps = generate_candidates(model, article, style, trend, cfg);
  std::vector<GeneratedHeadline> out;
  for (std::size_t i = 0; i < hyps.size() && i < top_k; ++i) {
    out.push_back({hypothesis_text(hyps[i], vocab, cfg.eos_id), hyps[i]});
  }
  return out;
}

std::string generate_headline(const Model& model, const Vocabulary& vocab, const Corpus& corpus,
                              const BuzzwordList& buzz, std::string_view post_id, const GenerationConfig& cfg,
                              const InputLimits& limits) {
  const auto out = generate_for_post(model, vocab, corpus, buzz, post_id, cfg, limits, 1);
  return out.empty() ? std::string{} : out.front().text;
}

}  // namespace headlab
