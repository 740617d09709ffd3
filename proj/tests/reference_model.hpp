#pragma once

// Plain-loop forward pass of the encoder-decoder, reading weights by name.
// Shares no code with the autodiff graph.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "headlab/model.hpp"
#include "headlab/vocab.hpp"

namespace headlab::reference {

using Mat = std::vector<std::vector<double>>;

class Forward {
 public:
  explicit Forward(const Model& model) : cfg_(model.config()) {
    for (const auto& p : model.parameters()) {
      Mat m(static_cast<std::size_t>(p.var.rows()), std::vector<double>(static_cast<std::size_t>(p.var.cols())));
      for (Eigen::Index i = 0; i < p.var.rows(); ++i) {
        for (Eigen::Index j = 0; j < p.var.cols(); ++j) m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = p.var.value()(i, j);
      }
      w_[p.name] = std::move(m);
    }
  }

  /// Final hidden states of an encoder-type stack ("encoder", "style", "trend").
  Mat stack(const std::string& name, const std::vector<int>& tokens, int layers) const {
    std::vector<bool> keys;
    for (int t : tokens) keys.push_back(t != kPadId);
    Mat x = embed(tokens, name + ".positions");
    for (int l = 0; l < layers; ++l) {
      const std::string p = name + ".layers." + std::to_string(l);
      x = plus(x, attention(p + ".attn", norm(x, p + ".ln1"), norm(x, p + ".ln1"), keys, false));
      x = plus(x, ffn(norm(x, p + ".ln2"), p));
    }
    return norm(x, name + ".final_norm");
  }

  /// Mean over non-padding rows, zeros when there are none.
  std::vector<double> pooled(const std::string& name, const std::vector<int>& tokens) const {
    std::vector<double> out(static_cast<std::size_t>(cfg_.d), 0.0);
    std::size_t n = 0;
    for (int t : tokens) n += t != kPadId;
    if (n == 0) return out;
    const Mat h = stack(name, tokens, cfg_.extractor_depth());
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (tokens[i] == kPadId) continue;
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += h[i][j] / static_cast<double>(n);
    }
    return out;
  }

  Mat logits(const Mat& memory, const std::vector<bool>& memory_valid, const std::vector<int>& prefix) const {
    Mat x = embed(prefix, "decoder.positions");
    for (int l = 0; l < cfg_.n_layers; ++l) {
      const std::string p = "decoder.layers." + std::to_string(l);
      const Mat h1 = norm(x, p + ".ln1");
      x = plus(x, attention(p + ".self_attn", h1, h1, std::vector<bool>(prefix.size(), true), true));
      x = plus(x, attention(p + ".cross_attn", norm(x, p + ".ln2"), memory, memory_valid, false));
      x = plus(x, ffn(norm(x, p + ".ln3"), p));
    }
    const Mat h = norm(x, "decoder.final_norm");
    const Mat& e = w_.at("embedding.tokens");
    Mat out(h.size(), std::vector<double>(e.size(), 0.0));
    for (std::size_t i = 0; i < h.size(); ++i) {
      for (std::size_t v = 0; v < e.size(); ++v) {
        for (std::size_t k = 0; k < h[i].size(); ++k) out[i][v] += h[i][k] * e[v][k];
      }
    }
    return out;
  }

  /// Logits of the full pipeline: encoder states plus both pooled
  /// preference encodings, then the decoder.
  Mat end_to_end(const std::vector<int>& article, const std::vector<int>& style, const std::vector<int>& trend,
                 const std::vector<int>& prefix) const {
    Mat mem = stack("encoder", article, cfg_.n_layers);
    const auto s = pooled("style", style);
    const auto t = pooled("trend", trend);
    for (auto& row : mem) {
      for (std::size_t j = 0; j < row.size(); ++j) row[j] += s[j] + t[j];
    }
    std::vector<bool> valid;
    for (int a : article) valid.push_back(a != kPadId);
    return logits(mem, valid, prefix);
  }

 private:
  Mat embed(const std::vector<int>& tokens, const std::string& positions) const {
    const Mat& e = w_.at("embedding.tokens");
    const Mat& p = w_.at(positions);
    Mat x;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::vector<double> row(e[0].size());
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = e[static_cast<std::size_t>(tokens[i])][j] + p[i][j];
      x.push_back(row);
    }
    return x;
  }

  static Mat plus(const Mat& a, const Mat& b) {
    Mat c = a;
    for (std::size_t i = 0; i < c.size(); ++i) {
      for (std::size_t j = 0; j < c[i].size(); ++j) c[i][j] += b[i][j];
    }
    return c;
  }

  Mat norm(const Mat& x, const std::string& name) const {
    const auto& g = w_.at(name + ".gain")[0];
    const auto& b = w_.at(name + ".bias")[0];
    Mat out = x;
    for (auto& row : out) {
      double mu = 0, var = 0;
      for (double v : row) mu += v;
      mu /= static_cast<double>(row.size());
      for (double v : row) var += (v - mu) * (v - mu);
      var /= static_cast<double>(row.size());
      for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mu) / std::sqrt(var + 1e-5) * g[j] + b[j];
    }
    return out;
  }

  Mat affine(const Mat& x, const std::string& name) const {
    const Mat& w = w_.at(name + ".w");
    const auto& b = w_.at(name + ".b")[0];
    Mat out(x.size(), std::vector<double>(b.size()));
    for (std::size_t i = 0; i < x.size(); ++i) {
      for (std::size_t o = 0; o < b.size(); ++o) {
        double s = b[o];
        for (std::size_t k = 0; k < x[i].size(); ++k) s += x[i][k] * w[k][o];
        out[i][o] = s;
      }
    }
    return out;
  }

  Mat ffn(const Mat& x, const std::string& layer) const {
    Mat h = affine(x, layer + ".ff1");
    for (auto& row : h) {
      for (auto& v : row) v = 0.5 * v * (1.0 + std::erf(v / std::sqrt(2.0)));
    }
    return affine(h, layer + ".ff2");
  }

  Mat attention(const std::string& name, const Mat& queries, const Mat& kv, const std::vector<bool>& key_ok,
                bool causal) const {
    const Mat q = affine(queries, name + ".q");
    const Mat k = affine(kv, name + ".k");
    const Mat v = affine(kv, name + ".v");
    const std::size_t dh = static_cast<std::size_t>(cfg_.d / cfg_.n_heads);
    Mat out(q.size(), std::vector<double>(static_cast<std::size_t>(cfg_.d), 0.0));
    for (int h = 0; h < cfg_.n_heads; ++h) {
      const std::size_t off = static_cast<std::size_t>(h) * dh;
      for (std::size_t i = 0; i < q.size(); ++i) {
        std::vector<double> s(k.size(), 0.0);
        double top = -INFINITY;
        for (std::size_t j = 0; j < k.size(); ++j) {
          if (!key_ok[j] || (causal && j > i)) continue;
          for (std::size_t c = 0; c < dh; ++c) s[j] += q[i][off + c] * k[j][off + c];
          s[j] /= std::sqrt(static_cast<double>(dh));
          top = std::max(top, s[j]);
        }
        double z = 0;
        std::vector<double> pr(k.size(), 0.0);
        for (std::size_t j = 0; j < k.size(); ++j) {
          if (!key_ok[j] || (causal && j > i)) continue;
          pr[j] = std::exp(s[j] - top);
          z += pr[j];
        }
        for (std::size_t j = 0; j < k.size(); ++j) {
          if (pr[j] == 0.0) continue;
          for (std::size_t c = 0; c < dh; ++c) out[i][off + c] += pr[j] / z * v[j][off + c];
        }
      }
    }
    return affine(out, name + ".o");
  }

  ModelConfig cfg_;
  std::map<std::string, Mat> w_;
};

}  // namespace headlab::reference
