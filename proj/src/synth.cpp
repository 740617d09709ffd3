#include "headlab/synth.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"

namespace headlab {

void SynthConfig::validate() const {
  if (n_users < 2 || n_posts < 1 || months < 14) throw Error("synth: need >= 2 users, >= 1 post and >= 14 months");
  if (start <= 0) throw Error("synth: start must be a positive timestamp");
  if (background_words < 1 || headline_background < 0 || article_extra < 0) throw Error("synth: invalid word counts");
  if (!(style_rate >= 0.0 && style_rate <= 1.0) || !(ramp_rate >= 0.0 && ramp_rate <= 1.0)) {
    throw Error("synth: rates must lie in [0, 1]");
  }
  if (!(topic_sigma_days > 0.0) || topic_spacing_days < 1 || topic_tokens < 0 || ramp_days < 1) {
    throw Error("synth: invalid topic or ramp settings");
  }
  if (!(likes_sigma >= 0.0)) throw Error("synth: likes_sigma must be >= 0");
}

namespace {

constexpr std::int64_t kDay = 86400;

std::int64_t month_start(std::int64_t start, int offset) {
  using namespace std::chrono;
  const year_month_day ymd{floor<days>(sys_seconds{seconds{start}})};
  const year_month_day first = ymd.year() / ymd.month() / 1d;
  const sys_days d = sys_days{year_month_day{first.year() / first.month() / 1d} + months{offset}};
  return d.time_since_epoch().count() * kDay;
}

std::string numbered(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%0*d", prefix, width, i);
  return buf;
}

}  // namespace

SynthResult synth_corpus(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const std::int64_t t0 = month_start(cfg.start, 0);
  const std::int64_t t1 = month_start(cfg.start, cfg.months);
  const double total_days = static_cast<double>(t1 - t0) / kDay;

  SynthTruth truth;
  truth.origin = time_step_of(t0);

  std::vector<std::string> users;
  for (int u = 0; u < cfg.n_users; ++u) {
    users.push_back(numbered("u", u, 3));
    truth.signatures[users.back()] = numbered("sig", u, 3);
  }

  // Topic centers cover the timeline plus two sigmas on either side.
  std::vector<double> centers;
  for (double c = -2 * cfg.topic_sigma_days; c <= total_days + 2 * cfg.topic_sigma_days; c += cfg.topic_spacing_days) {
    centers.push_back(c);
  }

  struct Ramp {
    std::string token;
    std::int64_t begin;
    std::int64_t end;
  };
  std::vector<Ramp> ramps;
  for (int q = 0; 3 * q + 1 < cfg.months; ++q) {
    const int first = 3 * q + 1;
    const std::int64_t begin = month_start(cfg.start, first);
    ramps.push_back({numbered("ramp", q, 2), begin, std::min(t1, begin + cfg.ramp_days * kDay)});
    truth.ramps.push_back({ramps.back().token, time_step_of(begin), 0});
  }

  struct Draft {
    std::int64_t ts;
    Post post;
  };
  std::vector<Draft> drafts;
  drafts.reserve(static_cast<std::size_t>(cfg.n_posts));
  std::vector<double> weights(centers.size());
  for (int i = 0; i < cfg.n_posts; ++i) {
    const std::int64_t ts = t0 + static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(t1 - t0)));
    const std::string& user = users[rng.below(users.size())];
    const double day = static_cast<double>(ts - t0) / kDay;

    std::vector<std::string> head;
    if (rng.uniform() < cfg.style_rate) head.push_back(truth.signatures[user]);

    double wsum = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double z = (day - centers[k]) / cfg.topic_sigma_days;
      weights[k] = std::exp(-0.5 * z * z);
      wsum += weights[k];
    }
    for (int k = 0; k < cfg.topic_tokens; ++k) {
      double u = rng.uniform() * wsum;
      std::size_t pick = 0;
      while (pick + 1 < centers.size() && u >= weights[pick]) u -= weights[pick++];
      const std::string tok = numbered("topic", static_cast<int>(pick), 3);
      if (std::find(head.begin(), head.end(), tok) == head.end()) head.push_back(tok);
    }

    bool has_ramp = false;
    for (const auto& r : ramps) {
      if (ts < r.begin || ts >= r.end) continue;
      // Rate rises linearly from a tenth of its peak across the ramp window.
      const double frac = static_cast<double>(ts - r.begin) / static_cast<double>(r.end - r.begin);
      if (rng.uniform() < cfg.ramp_rate * (0.1 + 0.9 * frac)) {
        head.push_back(r.token);
        has_ramp = true;
      }
    }
    for (int k = 0; k < cfg.headline_background; ++k) {
      head.push_back(numbered("w", static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.background_words))), 3));
    }
    rng.shuffle(head.begin(), head.end());

    std::vector<std::string> body = head;
    for (int k = 0; k < cfg.article_extra; ++k) {
      body.push_back(numbered("w", static_cast<int>(rng.below(static_cast<std::uint64_t>(cfg.background_words))), 3));
    }

    const double mu = cfg.likes_mu + (has_ramp ? cfg.ramp_likes_shift : 0.0);
    const double likes = std::floor(std::exp(mu + cfg.likes_sigma * rng.normal()));

    Post p;
    p.user_id = user;
    p.timestamp = ts;
    p.likes = static_cast<std::int64_t>(likes);
    for (const auto& t : head) p.headline += (p.headline.empty() ? "" : " ") + t;
    for (const auto& t : body) p.article += (p.article.empty() ? "" : " ") + t;
    drafts.push_back({ts, std::move(p)});
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) { return a.ts < b.ts; });
  std::vector<Post> posts;
  posts.reserve(drafts.size());
  for (std::size_t i = 0; i < drafts.size(); ++i) {
    drafts[i].post.id = numbered("p", static_cast<int>(i), 6);
    posts.push_back(std::move(drafts[i].post));
  }

  SynthResult out{Corpus(std::move(posts)), std::move(truth)};
  // Onset: the first buzzword step whose previous month holds the token.
  for (auto& r : out.truth.ramps) {
    TimeStep first = -1;
    for (std::size_t i = 0; i < out.corpus.size(); ++i) {
      const auto& h = out.corpus.posts()[i].headline;
      if (h.find(r.token) != std::string::npos) {
        first = out.corpus.step_of(i);
        break;
      }
    }
    if (first >= 0) r.first_month = first;
    r.onset_step = r.first_month + 1 - out.truth.origin;
  }
  return out;
}

nlohmann::ordered_json to_json(const SynthTruth& truth) {
  nlohmann::ordered_json j;
  j["origin_step"] = truth.origin;
  j["ramps"] = nlohmann::ordered_json::array();
  for (const auto& r : truth.ramps) {
    j["ramps"].push_back({{"token", r.token}, {"first_month", r.first_month}, {"onset_step", r.onset_step}});
  }
  j["signatures"] = truth.signatures;
  return j;
}

}  // namespace headlab
