#include "headlab/vocab.hpp"

#include <algorithm>
#include <map>

#include "headlab/error.hpp"

namespace headlab {

Vocabulary::Vocabulary() : Vocabulary(std::vector<std::string>{}) {}

Vocabulary::Vocabulary(std::vector<std::string> regular, std::int64_t tf_min, double tf_max)
    : tf_min_(tf_min), tf_max_(tf_max) {
  tokens_.reserve(regular.size() + kFirstRegularId);
  for (auto r : kReservedTokens) tokens_.emplace_back(r);
  for (auto& t : regular) tokens_.push_back(std::move(t));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) throw Error("vocabulary: empty token");
    if (!ids_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw Error("vocabulary: duplicate token '" + tokens_[i] + "'");
    }
  }
}

std::optional<int> Vocabulary::find(std::string_view token) const {
  const auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

int Vocabulary::id(std::string_view token) const { return find(token).value_or(kUnkId); }

std::vector<int> Vocabulary::encode(const TokenSeq& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

TokenSeq Vocabulary::decode(const std::vector<int>& ids) const {
  TokenSeq out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

namespace {

Vocabulary select_tokens(const std::map<std::string, std::int64_t>& counts, std::int64_t total,
                         std::int64_t tf_min, double tf_max) {
  if (total == 0) throw Error("build_vocab: training corpus has no tokens");
  std::vector<std::pair<std::string, std::int64_t>> kept;
  for (const auto& [tok, c] : counts) {
    if (std::find(kReservedTokens.begin(), kReservedTokens.end(), tok) != kReservedTokens.end()) continue;
    const double rel = static_cast<double>(c) / static_cast<double>(total);
    if (c >= tf_min && rel <= tf_max) kept.emplace_back(tok, c);
  }
  if (kept.empty()) throw Error("build_vocab: thresholds eliminate every token");
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> regular;
  regular.reserve(kept.size());
  for (auto& [tok, c] : kept) regular.push_back(tok);
  return Vocabulary(std::move(regular), tf_min, tf_max);
}

}  // namespace

Vocabulary build_vocab(const Corpus& train, std::int64_t tf_min, double tf_max) {
  if (train.empty()) throw Error("build_vocab: empty training corpus");
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  for (const Post& p : train.posts()) {
    for (const auto& t : tokenize(p.headline)) {
      ++counts[t];
      ++total;
    }
  }
  return select_tokens(counts, total, tf_min, tf_max);
}

Vocabulary build_model_vocab(const Corpus& train, std::int64_t tf_min, double tf_max) {
  if (train.empty()) throw Error("build_model_vocab: empty training corpus");
  std::map<std::string, std::int64_t> counts;
  std::int64_t total = 0;
  for (const Post& p : train.posts()) {
    for (const auto* text : {&p.headline, &p.article}) {
      for (const auto& t : tokenize(*text)) {
        ++counts[t];
        ++total;
      }
    }
  }
  return select_tokens(counts, total, tf_min, tf_max);
}

}  // namespace headlab
