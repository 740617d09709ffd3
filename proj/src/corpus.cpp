#include "headlab/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>

#include <json.hpp>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"

namespace headlab {

using nlohmann::json;

TimeStep time_step_of(std::int64_t timestamp) {
  using namespace std::chrono;
  const sys_seconds s{seconds{timestamp}};
  const year_month_day ymd{floor<days>(s)};
  return (static_cast<int>(ymd.year()) - 1970) * 12 + static_cast<int>(static_cast<unsigned>(ymd.month())) - 1;
}

std::int64_t parse_iso_date(std::string_view text) {
  int y = 0;
  unsigned mo = 0;
  unsigned d = 0;
  unsigned h = 0;
  unsigned mi = 0;
  unsigned s = 0;
  const std::string str(text);
  int consumed = 0;
  const int fields = std::sscanf(str.c_str(), "%4d-%2u-%2u%n", &y, &mo, &d, &consumed);
  if (fields != 3) throw Error("invalid ISO date '" + str + "'");
  std::string_view rest = text.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty()) {
    int more = 0;
    const std::string tail(rest);
    if (std::sscanf(tail.c_str(), "T%2u:%2u:%2u%n", &h, &mi, &s, &more) != 3) {
      throw Error("invalid ISO date '" + str + "'");
    }
    rest = rest.substr(static_cast<std::size_t>(more));
    if (!(rest.empty() || rest == "Z")) throw Error("invalid ISO date '" + str + "'");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) throw Error("invalid ISO date '" + str + "'");
  const auto secs = sys_days{ymd}.time_since_epoch() + hours{h} + minutes{mi} + seconds{s};
  return duration_cast<seconds>(secs).count();
}

Corpus::Corpus(std::vector<Post> posts) : posts_(std::move(posts)) {
  steps_.reserve(posts_.size());
  for (std::size_t i = 0; i < posts_.size(); ++i) {
    const Post& p = posts_[i];
    if (p.timestamp <= 0) throw Error("post '" + p.id + "': timestamp must be positive");
    if (p.likes < 0) throw Error("post '" + p.id + "': likes must be non-negative");
    if (!index_.emplace(p.id, i).second) throw Error("duplicate post id '" + p.id + "'");
    steps_.push_back(time_step_of(p.timestamp));
    by_user_[p.user_id].push_back(i);
    by_step_[steps_.back()].push_back(i);
  }
  const auto earlier = [this](std::size_t a, std::size_t b) {
    const Post& pa = posts_[a];
    const Post& pb = posts_[b];
    if (pa.timestamp != pb.timestamp) return pa.timestamp < pb.timestamp;
    return pa.id < pb.id;
  };
  for (auto& [user, idx] : by_user_) std::sort(idx.begin(), idx.end(), earlier);
  for (auto& [step, idx] : by_step_) std::sort(idx.begin(), idx.end(), earlier);
}

bool Corpus::contains(std::string_view id) const { return index_.contains(std::string(id)); }

std::size_t Corpus::index_of(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) throw Error("unknown post id '" + std::string(id) + "'");
  return it->second;
}

std::span<const std::size_t> Corpus::user_posts(const std::string& user_id) const {
  const auto it = by_user_.find(user_id);
  if (it == by_user_.end()) return {};
  return it->second;
}

namespace {

const json& require(const json& obj, const char* key, std::size_t line) {
  const auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(line, std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_string()) throw ParseError(line, std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::int64_t require_integer(const json& obj, const char* key, std::size_t line) {
  const json& v = require(obj, key, line);
  if (!v.is_number_integer()) throw ParseError(line, std::string("field \"") + key + "\" must be an integer");
  return v.get<std::int64_t>();
}

}  // namespace

Corpus read_jsonl(std::istream& in) {
  std::vector<Post> posts;
  std::unordered_map<std::string, std::size_t> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(lineno, std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ParseError(lineno, "expected a JSON object");
    Post p;
    p.id = require_string(obj, "id", lineno);
    p.user_id = require_string(obj, "user_id", lineno);
    p.timestamp = require_integer(obj, "timestamp", lineno);
    p.headline = require_string(obj, "headline", lineno);
    p.article = require_string(obj, "article", lineno);
    p.likes = require_integer(obj, "likes", lineno);
    if (p.timestamp <= 0) throw ParseError(lineno, "timestamp must be positive");
    if (p.likes < 0) throw ParseError(lineno, "likes must be non-negative");
    if (auto [it, fresh] = seen.emplace(p.id, lineno); !fresh) {
      throw ParseError(lineno, "duplicate id \"" + p.id + "\" (first seen on line " + std::to_string(it->second) + ")");
    }
    posts.push_back(std::move(p));
  }
  return Corpus(std::move(posts));
}

Corpus ingest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open corpus file '" + path.string() + "'");
  return read_jsonl(in);
}

void write_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const Post& p : corpus.posts()) {
    nlohmann::ordered_json obj;
    obj["id"] = p.id;
    obj["user_id"] = p.user_id;
    obj["timestamp"] = p.timestamp;
    obj["headline"] = p.headline;
    obj["article"] = p.article;
    obj["likes"] = p.likes;
    out << obj.dump(-1, ' ', false, json::error_handler_t::replace) << '\n';
  }
}

std::string to_jsonl(const Corpus& corpus) {
  std::ostringstream os;
  write_jsonl(corpus, os);
  return os.str();
}

Corpus filter_posts(const Corpus& corpus, std::int64_t min_likes, bool require_prior_post) {
  if (min_likes < 0) throw Error("filter_posts: min_likes must be non-negative");
  std::vector<Post> kept;
  for (const Post& p : corpus.posts()) {
    if (p.likes < min_likes || p.headline.empty() || p.article.empty()) continue;
    if (require_prior_post) {
      const auto history = corpus.user_posts(p.user_id);
      // history is sorted by timestamp, so the first entry is the earliest.
      if (history.empty() || corpus.posts()[history.front()].timestamp >= p.timestamp) continue;
    }
    kept.push_back(p);
  }
  return Corpus(std::move(kept));
}

CorpusSplit split(const Corpus& corpus, const SplitSpec& spec) {
  const double v = spec.validation_fraction;
  const double t = spec.test_fraction;
  if (v < 0.0 || v > 1.0 || t < 0.0 || t > 1.0) throw Error("split: fractions must lie in [0, 1]");
  if (std::abs(v + t - 1.0) > 1e-9) throw Error("split: validation and test fractions must sum to 1");

  std::vector<Post> train;
  std::vector<Post> rest;
  for (const Post& p : corpus.posts()) {
    (p.timestamp < spec.boundary ? train : rest).push_back(p);
  }
  // Shuffle in a canonical order so the result does not depend on input order.
  std::sort(rest.begin(), rest.end(), [](const Post& a, const Post& b) { return a.id < b.id; });
  Rng rng(spec.seed);
  rng.shuffle(rest.begin(), rest.end());
  const auto n_val = static_cast<std::size_t>(std::llround(v * static_cast<double>(rest.size())));
  std::vector<Post> val(rest.begin(), rest.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<Post> test(rest.begin() + static_cast<std::ptrdiff_t>(n_val), rest.end());
  const auto by_time = [](const Post& a, const Post& b) {
    return a.timestamp != b.timestamp ? a.timestamp < b.timestamp : a.id < b.id;
  };
  std::sort(val.begin(), val.end(), by_time);
  std::sort(test.begin(), test.end(), by_time);
  return {Corpus(std::move(train)), Corpus(std::move(val)), Corpus(std::move(test))};
}

TokenSeq build_style_text(const Corpus& corpus, std::string_view post_id, std::size_t max_tokens) {
  const std::size_t self = corpus.index_of(post_id);
  const Post& target = corpus.posts()[self];
  const TimeStep step = corpus.step_of(self);
  const auto history = corpus.user_posts(target.user_id);

  TokenSeq out;
  bool first = true;
  for (auto it = history.rbegin(); it != history.rend() && out.size() < max_tokens; ++it) {
    if (corpus.step_of(*it) >= step) continue;
    if (!first) out.emplace_back(kSepToken);
    first = false;
    for (auto& tok : tokenize(corpus.posts()[*it].headline)) {
      if (out.size() >= max_tokens) break;
      out.push_back(std::move(tok));
    }
  }
  if (out.size() > max_tokens) out.resize(max_tokens);
  return out;
}

}  // namespace headlab
