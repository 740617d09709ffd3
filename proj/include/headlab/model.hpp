#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "headlab/autodiff.hpp"

namespace headlab {

class Rng;

struct ModelConfig {
  int vocab_size = 0;
  int d = 64;
  int n_layers = 2;
  int n_heads = 4;
  int ffn = 256;
  int max_positions = 512;
  int extractor_layers = -1;  // -1: same depth as the encoder
  double dropout = 0.0;
  std::uint64_t seed = 3407;

  int extractor_depth() const { return extractor_layers < 0 ? n_layers : extractor_layers; }
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

struct Linear {
  ad::Var w;  // in x out
  ad::Var b;  // 1 x out
};

struct LayerNormParams {
  ad::Var gain;
  ad::Var bias;
};

struct AttentionParams {
  Linear q, k, v, o;
};

struct EncoderLayerParams {
  LayerNormParams ln1;
  AttentionParams attn;
  LayerNormParams ln2;
  Linear ff1, ff2;
};

struct DecoderLayerParams {
  LayerNormParams ln1;
  AttentionParams self_attn;
  LayerNormParams ln2;
  AttentionParams cross_attn;
  LayerNormParams ln3;
  Linear ff1, ff2;
};

/// Transformer encoder stack: used for the article encoder and both
/// preference extractors.
struct EncoderStackParams {
  ad::Var positions;  // max_positions x d
  std::vector<EncoderLayerParams> layers;
  LayerNormParams final_norm;
};

struct DecoderStackParams {
  ad::Var positions;
  std::vector<DecoderLayerParams> layers;
  LayerNormParams final_norm;
};

struct NamedParam {
  std::string name;
  ad::Var var;
};

/// Which component a parameter belongs to.
enum class Component { embedding, encoder, decoder, style, trend };

/// Hidden state sequence with its padding mask (valid[i] == 0 for padding).
struct HiddenSeq {
  ad::Var states;
  std::vector<char> valid;

  Eigen::Index length() const { return states.rows(); }
};

/// Miniature pre-norm encoder-decoder with a style extractor and a trend
/// extractor. One token embedding table is shared by all four components
/// and tied to the output projection.
class Model {
 public:
  explicit Model(const ModelConfig& config);
  // Parameters are shared handles, so a copy would alias the original.
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  const ModelConfig& config() const { return config_; }

  /// Every parameter in a fixed order with a stable dotted name.
  const std::vector<NamedParam>& parameters() const { return named_; }
  std::vector<NamedParam>& parameters() { return named_; }
  ad::Var& parameter(const std::string& name);
  static Component component_of(const std::string& name);

  const ad::Var& embedding() const { return embedding_; }
  const EncoderStackParams& encoder() const { return encoder_; }
  const EncoderStackParams& style_extractor() const { return style_; }
  const EncoderStackParams& trend_extractor() const { return trend_; }
  const DecoderStackParams& decoder() const { return decoder_; }

  /// Article encoder. Positions holding kPadId are masked out as keys.
  HiddenSeq encode(std::span<const int> tokens, Rng* dropout_rng = nullptr) const;
  /// Mean-pooled extractor output (1 x d); the zero vector for empty or
  /// all-padding input.
  ad::Var extract_style(std::span<const int> tokens, Rng* dropout_rng = nullptr) const;
  ad::Var extract_trend(std::span<const int> tokens, Rng* dropout_rng = nullptr) const;

  /// Decoder logits (prefix length x vocab). When cross_attention is given
  /// it receives the last layer's cross-attention averaged over heads.
  ad::Var decode(const HiddenSeq& memory, std::span<const int> prefix, Rng* dropout_rng = nullptr,
                 ad::Matrix* cross_attention = nullptr) const;

  /// Next-token distribution after `prefix` (which must start with kBosId).
  std::vector<double> decode_step(const HiddenSeq& memory, std::span<const int> prefix) const;

  /// Enables gradients for exactly the given components.
  void set_trainable(std::span<const Component> components);
  void set_all_trainable();

  void zero_grad();

 private:
  ad::Var run_stack(const EncoderStackParams& stack, std::span<const int> tokens, std::vector<char>& valid,
                    Rng* dropout_rng) const;
  ad::Var extract(const EncoderStackParams& stack, std::span<const int> tokens, Rng* dropout_rng) const;
  void check_tokens(std::span<const int> tokens) const;

  ModelConfig config_;
  ad::Var embedding_;
  EncoderStackParams encoder_;
  EncoderStackParams style_;
  EncoderStackParams trend_;
  DecoderStackParams decoder_;
  std::vector<NamedParam> named_;
};

/// S[t] = H[t] + style + trend for every position t.
HiddenSeq fuse(const HiddenSeq& hidden, const ad::Var& style, const ad::Var& trend);

/// Parameter values by name, for snapshots and comparisons.
using ParamValues = std::vector<std::pair<std::string, ad::Matrix>>;
ParamValues snapshot(const Model& model);
void restore(Model& model, const ParamValues& values);

}  // namespace headlab
