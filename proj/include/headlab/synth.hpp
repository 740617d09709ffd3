#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "headlab/corpus.hpp"

namespace headlab {

/// Synthetic corpus with planted structure: per-user signature tokens,
/// slowly drifting topic tokens, and one ramping token per quarter whose
/// presence also raises likes.
struct SynthConfig {
  std::uint64_t seed = 7;
  int n_users = 50;
  int n_posts = 6000;
  int months = 24;
  std::int64_t start = 1577836800;  // 2020-01-01T00:00:00Z
  int background_words = 300;
  int headline_background = 3;
  int article_extra = 10;
  double style_rate = 1.0;
  double topic_sigma_days = 150.0;
  int topic_spacing_days = 15;
  int topic_tokens = 2;
  double ramp_rate = 0.4;
  int ramp_days = 60;
  double likes_mu = 5.5;
  double likes_sigma = 1.0;
  double ramp_likes_shift = 0.7;

  void validate() const;
};

struct RampTruth {
  std::string token;
  TimeStep first_month = 0;  // absolute month of the first occurrence
  int onset_step = 0;        // relative buzzword step that first sees it (first_month + 1 - origin)
};

struct SynthTruth {
  TimeStep origin = 0;
  std::vector<RampTruth> ramps;
  std::map<std::string, std::string> signatures;  // user -> token
};

struct SynthResult {
  Corpus corpus;
  SynthTruth truth;
};

SynthResult synth_corpus(const SynthConfig& cfg);

nlohmann::ordered_json to_json(const SynthTruth& truth);

}  // namespace headlab
