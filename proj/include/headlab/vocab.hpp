#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "headlab/corpus.hpp"
#include "headlab/text.hpp"

namespace headlab {

/// Reserved symbols occupy the first ids of every vocabulary.
enum ReservedId : int { kPadId = 0, kMaskId, kSepId, kBosId, kEosId, kUnkId, kFirstRegularId };

inline constexpr std::array<std::string_view, kFirstRegularId> kReservedTokens = {
    "<pad>", "<mask>", "<sep>", "<bos>", "<eos>", "<unk>"};

class Vocabulary {
 public:
  Vocabulary();
  /// Reserved symbols followed by `regular` in the given order.
  explicit Vocabulary(std::vector<std::string> regular, std::int64_t tf_min = 0, double tf_max = 1.0);

  int size() const { return static_cast<int>(tokens_.size()); }
  int regular_size() const { return size() - kFirstRegularId; }

  std::optional<int> find(std::string_view token) const;
  /// Id of the token, or kUnkId.
  int id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::vector<int> encode(const TokenSeq& tokens) const;
  TokenSeq decode(const std::vector<int>& ids) const;

  std::int64_t tf_min() const { return tf_min_; }
  double tf_max() const { return tf_max_; }

  bool operator==(const Vocabulary& o) const { return tokens_ == o.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
  std::int64_t tf_min_ = 0;
  double tf_max_ = 1.0;
};

/// Headline vocabulary: tokens of the training headlines whose corpus count
/// is >= tf_min and whose relative frequency (count / all headline tokens)
/// is <= tf_max. Ids follow count descending, then token ascending.
/// Throws if the corpus is empty or the thresholds leave no token.
Vocabulary build_vocab(const Corpus& train, std::int64_t tf_min, double tf_max);

/// Same selection rule over headlines and articles together; used for the
/// generator's input/output vocabulary.
Vocabulary build_model_vocab(const Corpus& train, std::int64_t tf_min, double tf_max);

}  // namespace headlab
