#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "headlab/text.hpp"

namespace headlab {

/// One social-media post.
struct Post {
  std::string id;
  std::string user_id;
  std::int64_t timestamp = 0;  // seconds since epoch, UTC
  std::string headline;
  std::string article;
  std::int64_t likes = 0;

  bool operator==(const Post&) const = default;
};

/// Month index counted from 1970-01 (UTC). Consecutive calendar months
/// differ by exactly one.
using TimeStep = int;

TimeStep time_step_of(std::int64_t timestamp);

/// Parses "YYYY-MM-DD" or "YYYY-MM-DDTHH:MM:SS[Z]" as UTC seconds.
std::int64_t parse_iso_date(std::string_view text);

/// Immutable, indexed collection of posts.
///
/// Per-user and per-step index lists hold positions into posts(), sorted by
/// (timestamp, id) ascending.
class Corpus {
 public:
  Corpus() = default;
  /// Validates ids are unique, timestamps positive and likes non-negative.
  explicit Corpus(std::vector<Post> posts);

  std::span<const Post> posts() const { return posts_; }
  std::size_t size() const { return posts_.size(); }
  bool empty() const { return posts_.empty(); }

  bool contains(std::string_view id) const;
  std::size_t index_of(std::string_view id) const;
  const Post& post(std::string_view id) const { return posts_[index_of(id)]; }

  const std::map<std::string, std::vector<std::size_t>>& by_user() const { return by_user_; }
  const std::map<TimeStep, std::vector<std::size_t>>& by_step() const { return by_step_; }
  std::span<const std::size_t> user_posts(const std::string& user_id) const;

  TimeStep step_of(std::size_t index) const { return steps_[index]; }

 private:
  std::vector<Post> posts_;
  std::vector<TimeStep> steps_;
  std::unordered_map<std::string, std::size_t> index_;
  std::map<std::string, std::vector<std::size_t>> by_user_;
  std::map<TimeStep, std::vector<std::size_t>> by_step_;
};

/// Reads one JSON object per line. Blank lines are skipped. Any schema
/// violation or duplicate id raises ParseError with the 1-based line number.
Corpus read_jsonl(std::istream& in);
Corpus ingest(const std::filesystem::path& path);

void write_jsonl(const Corpus& corpus, std::ostream& out);
std::string to_jsonl(const Corpus& corpus);

/// Keeps posts with likes >= min_likes and a non-empty headline and article.
/// With require_prior_post, also requires that the same user has a strictly
/// earlier post anywhere in the input corpus.
Corpus filter_posts(const Corpus& corpus, std::int64_t min_likes, bool require_prior_post);

struct SplitSpec {
  std::int64_t boundary = 0;  // posts strictly before go to train
  double validation_fraction = 0.5;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
};

struct CorpusSplit {
  Corpus train;
  Corpus validation;
  Corpus test;
};

/// Time split; the remainder after the boundary is shuffled with the seed
/// and cut into validation and test. The two fractions must sum to 1.
CorpusSplit split(const Corpus& corpus, const SplitSpec& spec);

inline constexpr std::string_view kSepToken = "<sep>";

/// Tokenized headlines of the same user's posts from strictly earlier time
/// steps, latest first, joined by kSepToken and cut to max_tokens.
TokenSeq build_style_text(const Corpus& corpus, std::string_view post_id, std::size_t max_tokens);

}  // namespace headlab
