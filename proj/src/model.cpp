#include "headlab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"
#include "headlab/vocab.hpp"

namespace headlab {

using ad::Matrix;
using ad::Var;

void ModelConfig::validate() const {
  if (vocab_size <= kFirstRegularId) throw Error("model config: vocab_size must exceed the reserved symbols");
  if (d < 1 || n_layers < 1 || n_heads < 1 || ffn < 1) throw Error("model config: sizes must be positive");
  if (d % n_heads != 0) throw Error("model config: d must be divisible by n_heads");
  if (max_positions < 2) throw Error("model config: max_positions must be >= 2");
  if (extractor_layers == 0 || extractor_layers < -1) throw Error("model config: extractor_layers must be >= 1 or -1");
  if (dropout < 0.0 || dropout >= 1.0) throw Error("model config: dropout must lie in [0, 1)");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"d", c.d},         {"n_layers", c.n_layers},
          {"n_heads", c.n_heads},       {"ffn", c.ffn},     {"max_positions", c.max_positions},
          {"extractor_layers", c.extractor_layers},          {"dropout", c.dropout},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<int>();
  c.d = j.at("d").get<int>();
  c.n_layers = j.at("n_layers").get<int>();
  c.n_heads = j.at("n_heads").get<int>();
  c.ffn = j.at("ffn").get<int>();
  c.max_positions = j.at("max_positions").get<int>();
  c.extractor_layers = j.value("extractor_layers", -1);
  c.dropout = j.value("dropout", 0.0);
  c.seed = j.value("seed", std::uint64_t{3407});
  c.validate();
  return c;
}

namespace {

class Registry {
 public:
  explicit Registry(std::vector<NamedParam>& out) : out_(out) {}

  Var weight(const std::string& name, int rows, int cols) { return add(name, Matrix::Zero(rows, cols)); }
  Var ones(const std::string& name, int cols) { return add(name, Matrix::Ones(1, cols)); }
  Var zeros(const std::string& name, int cols) { return add(name, Matrix::Zero(1, cols)); }

  Linear linear(const std::string& name, int in, int out) {
    return {weight(name + ".w", in, out), zeros(name + ".b", out)};
  }
  LayerNormParams norm(const std::string& name, int d) { return {ones(name + ".gain", d), zeros(name + ".bias", d)}; }
  AttentionParams attention(const std::string& name, int d) {
    return {linear(name + ".q", d, d), linear(name + ".k", d, d), linear(name + ".v", d, d),
            linear(name + ".o", d, d)};
  }

 private:
  Var add(const std::string& name, Matrix m) {
    Var v = Var::parameter(std::move(m));
    out_.push_back({name, v});
    return v;
  }
  std::vector<NamedParam>& out_;
};

EncoderStackParams make_encoder_stack(Registry& reg, const std::string& prefix, const ModelConfig& c, int depth) {
  EncoderStackParams s;
  s.positions = reg.weight(prefix + ".positions", c.max_positions, c.d);
  for (int i = 0; i < depth; ++i) {
    const std::string p = prefix + ".layers." + std::to_string(i);
    s.layers.push_back({reg.norm(p + ".ln1", c.d), reg.attention(p + ".attn", c.d), reg.norm(p + ".ln2", c.d),
                        reg.linear(p + ".ff1", c.d, c.ffn), reg.linear(p + ".ff2", c.ffn, c.d)});
  }
  s.final_norm = reg.norm(prefix + ".final_norm", c.d);
  return s;
}

DecoderStackParams make_decoder_stack(Registry& reg, const ModelConfig& c) {
  DecoderStackParams s;
  s.positions = reg.weight("decoder.positions", c.max_positions, c.d);
  for (int i = 0; i < c.n_layers; ++i) {
    const std::string p = "decoder.layers." + std::to_string(i);
    s.layers.push_back({reg.norm(p + ".ln1", c.d), reg.attention(p + ".self_attn", c.d), reg.norm(p + ".ln2", c.d),
                        reg.attention(p + ".cross_attn", c.d), reg.norm(p + ".ln3", c.d),
                        reg.linear(p + ".ff1", c.d, c.ffn), reg.linear(p + ".ff2", c.ffn, c.d)});
  }
  s.final_norm = reg.norm("decoder.final_norm", c.d);
  return s;
}

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

Var linear(const Linear& l, const Var& x) { return ad::add_row(ad::matmul(x, l.w), l.b); }

Var maybe_dropout(const Var& x, double rate, Rng* rng) {
  if (rng == nullptr || rate <= 0.0) return x;
  return ad::dropout(x, rate, *rng);
}

Var attend(const AttentionParams& p, const Var& queries, const Var& keys_values, const ad::Mask& allowed, int heads,
           Matrix* mean_probs) {
  const Var q = linear(p.q, queries);
  const Var k = linear(p.k, keys_values);
  const Var v = linear(p.v, keys_values);
  const Eigen::Index dh = q.cols() / heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  if (mean_probs != nullptr) *mean_probs = Matrix::Zero(queries.rows(), keys_values.rows());
  std::vector<Var> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var qh = ad::col_slice(q, h * dh, dh);
    const Var kh = ad::col_slice(k, h * dh, dh);
    const Var vh = ad::col_slice(v, h * dh, dh);
    const Var probs = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt), allowed);
    if (mean_probs != nullptr) *mean_probs += probs.value() / static_cast<double>(heads);
    outs.push_back(ad::matmul(probs, vh));
  }
  return linear(p.o, ad::concat_cols(outs));
}

Var feed_forward(const Linear& ff1, const Linear& ff2, const Var& x) {
  return linear(ff2, ad::gelu(linear(ff1, x)));
}

Var layer_norm(const LayerNormParams& n, const Var& x) { return ad::layer_norm(x, n.gain, n.bias); }

std::vector<int> iota_ids(std::size_t n) {
  std::vector<int> ids(n);
  std::iota(ids.begin(), ids.end(), 0);
  return ids;
}

}  // namespace

Model::Model(const ModelConfig& config) : config_(config) {
  config_.validate();
  Registry reg(named_);
  embedding_ = reg.weight("embedding.tokens", config_.vocab_size, config_.d);
  encoder_ = make_encoder_stack(reg, "encoder", config_, config_.n_layers);
  style_ = make_encoder_stack(reg, "style", config_, config_.extractor_depth());
  trend_ = make_encoder_stack(reg, "trend", config_, config_.extractor_depth());
  decoder_ = make_decoder_stack(reg, config_);

  Rng rng(config_.seed);
  for (auto& [name, var] : named_) {
    if (ends_with(name, ".gain") || ends_with(name, ".bias") || ends_with(name, ".b")) continue;
    Matrix& m = var.mutable_value();
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 0.02 * rng.normal();
  }
}

ad::Var& Model::parameter(const std::string& name) {
  for (auto& p : named_) {
    if (p.name == name) return p.var;
  }
  throw Error("unknown parameter '" + name + "'");
}

Component Model::component_of(const std::string& name) {
  if (name.starts_with("embedding.")) return Component::embedding;
  if (name.starts_with("encoder.")) return Component::encoder;
  if (name.starts_with("decoder.")) return Component::decoder;
  if (name.starts_with("style.")) return Component::style;
  if (name.starts_with("trend.")) return Component::trend;
  throw Error("parameter '" + name + "' belongs to no component");
}

void Model::set_trainable(std::span<const Component> components) {
  for (auto& p : named_) {
    const Component c = component_of(p.name);
    p.var.set_requires_grad(std::find(components.begin(), components.end(), c) != components.end());
  }
}

void Model::set_all_trainable() {
  for (auto& p : named_) p.var.set_requires_grad(true);
}

void Model::zero_grad() {
  for (auto& p : named_) p.var.zero_grad();
}

void Model::check_tokens(std::span<const int> tokens) const {
  if (static_cast<int>(tokens.size()) > config_.max_positions) {
    throw Error("input of " + std::to_string(tokens.size()) + " tokens exceeds max_positions " +
                std::to_string(config_.max_positions));
  }
  for (const int t : tokens) {
    if (t < 0 || t >= config_.vocab_size) throw Error("token id " + std::to_string(t) + " out of range");
  }
}

Var Model::run_stack(const EncoderStackParams& stack, std::span<const int> tokens, std::vector<char>& valid,
                     Rng* dropout_rng) const {
  check_tokens(tokens);
  const auto n = static_cast<Eigen::Index>(tokens.size());
  valid.assign(tokens.size(), 0);
  for (std::size_t i = 0; i < tokens.size(); ++i) valid[i] = tokens[i] != kPadId ? 1 : 0;
  ad::Mask allowed(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) allowed(i, j) = valid[static_cast<std::size_t>(j)] != 0;
  }
  const auto positions = iota_ids(tokens.size());
  Var x = ad::add(ad::gather_rows(embedding_, tokens), ad::gather_rows(stack.positions, positions));
  x = maybe_dropout(x, config_.dropout, dropout_rng);
  for (const auto& layer : stack.layers) {
    const Var h = layer_norm(layer.ln1, x);
    x = ad::add(x, maybe_dropout(attend(layer.attn, h, h, allowed, config_.n_heads, nullptr), config_.dropout, dropout_rng));
    const Var f = feed_forward(layer.ff1, layer.ff2, layer_norm(layer.ln2, x));
    x = ad::add(x, maybe_dropout(f, config_.dropout, dropout_rng));
  }
  return layer_norm(stack.final_norm, x);
}

HiddenSeq Model::encode(std::span<const int> tokens, Rng* dropout_rng) const {
  HiddenSeq out;
  out.states = run_stack(encoder_, tokens, out.valid, dropout_rng);
  return out;
}

Var Model::extract(const EncoderStackParams& stack, std::span<const int> tokens, Rng* dropout_rng) const {
  const bool any = std::any_of(tokens.begin(), tokens.end(), [](int t) { return t != kPadId; });
  if (!any) {
    check_tokens(tokens);
    return Var::constant(Matrix::Zero(1, config_.d));
  }
  std::vector<char> valid;
  const Var states = run_stack(stack, tokens, valid, dropout_rng);
  return ad::mean_rows(states, valid);
}

Var Model::extract_style(std::span<const int> tokens, Rng* dropout_rng) const {
  return extract(style_, tokens, dropout_rng);
}

Var Model::extract_trend(std::span<const int> tokens, Rng* dropout_rng) const {
  return extract(trend_, tokens, dropout_rng);
}

Var Model::decode(const HiddenSeq& memory, std::span<const int> prefix, Rng* dropout_rng,
                  Matrix* cross_attention) const {
  if (prefix.empty()) throw Error("decode: empty prefix");
  check_tokens(prefix);
  if (memory.states.cols() != config_.d) throw Error("decode: memory width does not match the model");
  const auto n = static_cast<Eigen::Index>(prefix.size());
  const Eigen::Index m = memory.length();
  ad::Mask causal(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) causal(i, j) = j <= i;
  }
  ad::Mask cross(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) cross(i, j) = memory.valid[static_cast<std::size_t>(j)] != 0;
  }
  const auto positions = iota_ids(prefix.size());
  Var x = ad::add(ad::gather_rows(embedding_, prefix), ad::gather_rows(decoder_.positions, positions));
  x = maybe_dropout(x, config_.dropout, dropout_rng);
  for (std::size_t li = 0; li < decoder_.layers.size(); ++li) {
    const auto& layer = decoder_.layers[li];
    const bool last = li + 1 == decoder_.layers.size();
    const Var h1 = layer_norm(layer.ln1, x);
    x = ad::add(x, maybe_dropout(attend(layer.self_attn, h1, h1, causal, config_.n_heads, nullptr), config_.dropout,
                                 dropout_rng));
    const Var h2 = layer_norm(layer.ln2, x);
    x = ad::add(x, maybe_dropout(attend(layer.cross_attn, h2, memory.states, cross, config_.n_heads,
                                        last ? cross_attention : nullptr),
                                 config_.dropout, dropout_rng));
    const Var f = feed_forward(layer.ff1, layer.ff2, layer_norm(layer.ln3, x));
    x = ad::add(x, maybe_dropout(f, config_.dropout, dropout_rng));
  }
  return ad::matmul_nt(layer_norm(decoder_.final_norm, x), embedding_);
}

std::vector<double> Model::decode_step(const HiddenSeq& memory, std::span<const int> prefix) const {
  if (prefix.empty() || prefix.front() != kBosId) throw Error("decode_step: prefix must start with <bos>");
  const Var logits = decode(memory, prefix);
  const ad::RowVector lp = ad::log_softmax(logits.value().row(logits.rows() - 1));
  std::vector<double> probs(static_cast<std::size_t>(lp.size()));
  for (Eigen::Index i = 0; i < lp.size(); ++i) probs[static_cast<std::size_t>(i)] = std::exp(lp(i));
  return probs;
}

HiddenSeq fuse(const HiddenSeq& hidden, const ad::Var& style, const ad::Var& trend) {
  const auto d = hidden.states.cols();
  if (style.rows() != 1 || trend.rows() != 1 || style.cols() != d || trend.cols() != d) {
    throw Error("fuse: encodings must be 1 x " + std::to_string(d));
  }
  return {ad::add_row(ad::add_row(hidden.states, style), trend), hidden.valid};
}

ParamValues snapshot(const Model& model) {
  ParamValues out;
  out.reserve(model.parameters().size());
  for (const auto& p : model.parameters()) out.emplace_back(p.name, p.var.value());
  return out;
}

void restore(Model& model, const ParamValues& values) {
  for (const auto& [name, value] : values) {
    ad::Var& v = model.parameter(name);
    if (v.rows() != value.rows() || v.cols() != value.cols()) throw Error("restore: shape mismatch for " + name);
    v.mutable_value() = value;
  }
}

}  // namespace headlab
