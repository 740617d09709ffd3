#include "headlab/autodiff.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>
#include <utility>

#include "headlab/error.hpp"
#include "headlab/rng.hpp"

namespace headlab::ad {

namespace {

Var make_op(Matrix value, std::initializer_list<Var> parents, std::function<void(Node&)> fn) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  for (const Var& p : parents) {
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    for (const Var& p : parents) node->parents.push_back(p.node());
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

Node& parent(Node& self, std::size_t i) { return *self.parents[i]; }

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw Error(std::string(op) + ": shape mismatch");
}

}  // namespace

Var Var::constant(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var Var::parameter(Matrix value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void backward(const Var& root, double seed) {
  if (root.rows() != 1 || root.cols() != 1) throw Error("backward: root must be a scalar");
  if (!root.requires_grad()) return;

  // Iterative post-order DFS gives a topological order.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.node().get(), 0}};
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* p = node->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->grad_buffer()(0, 0) += seed;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward && n->grad.size() != 0) n->backward(*n);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw Error("matmul: inner dimensions differ");
  return make_op(a.value() * b.value(), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.grad_buffer().noalias() += self.grad * pb.value.transpose();
    if (pb.requires_grad) pb.grad_buffer().noalias() += pa.value.transpose() * self.grad;
  });
}

Var matmul_nt(const Var& a, const Var& b) {
  if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimensions differ");
  return make_op(a.value() * b.value().transpose(), {a, b}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pb = parent(self, 1);
    if (pa.requires_grad) pa.grad_buffer().noalias() += self.grad * pb.value;
    if (pb.requires_grad) pb.grad_buffer().noalias() += self.grad.transpose() * pa.value;
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  return make_op(a.value() + b.value(), {a, b}, [](Node& self) {
    for (std::size_t i = 0; i < 2; ++i) {
      Node& p = parent(self, i);
      if (p.requires_grad) p.grad_buffer() += self.grad;
    }
  });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_row: dimension mismatch");
  Matrix v = a.value();
  v.rowwise() += row.value().row(0);
  return make_op(std::move(v), {a, row}, [](Node& self) {
    Node& pa = parent(self, 0);
    Node& pr = parent(self, 1);
    if (pa.requires_grad) pa.grad_buffer() += self.grad;
    if (pr.requires_grad) pr.grad_buffer() += self.grad.colwise().sum();
  });
}

Var scale(const Var& a, double s) {
  return make_op(a.value() * s, {a}, [s](Node& self) {
    Node& pa = parent(self, 0);
    pa.grad_buffer() += self.grad * s;
  });
}

Var gelu(const Var& a) {
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  Matrix v = a.value().unaryExpr([=](double x) { return 0.5 * x * (1.0 + std::erf(x * inv_sqrt2)); });
  return make_op(std::move(v), {a}, [=](Node& self) {
    Node& pa = parent(self, 0);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    Matrix d = pa.value.unaryExpr([=](double x) {
      return 0.5 * (1.0 + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(-0.5 * x * x);
    });
    pa.grad_buffer() += self.grad.cwiseProduct(d);
  });
}

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (gain.cols() != d || bias.cols() != d) throw Error("layer_norm: dimension mismatch");
  Matrix xhat(n, d);
  Eigen::VectorXd inv_sigma(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = x.value().row(i).mean();
    const double var = (x.value().row(i).array() - mu).square().mean();
    inv_sigma(i) = 1.0 / std::sqrt(var + eps);
    xhat.row(i) = (x.value().row(i).array() - mu) * inv_sigma(i);
  }
  Matrix y = xhat;
  y.array().rowwise() *= gain.value().row(0).array();
  y.rowwise() += bias.value().row(0);
  return make_op(std::move(y), {x, gain, bias}, [xhat, inv_sigma](Node& self) {
    Node& px = parent(self, 0);
    Node& pg = parent(self, 1);
    Node& pb = parent(self, 2);
    if (pg.requires_grad) pg.grad_buffer() += self.grad.cwiseProduct(xhat).colwise().sum();
    if (pb.requires_grad) pb.grad_buffer() += self.grad.colwise().sum();
    if (px.requires_grad) {
      Matrix dxhat = self.grad;
      dxhat.array().rowwise() *= pg.value.row(0).array();
      Matrix& gx = px.grad_buffer();
      for (Eigen::Index i = 0; i < dxhat.rows(); ++i) {
        const double m1 = dxhat.row(i).mean();
        const double m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
        gx.row(i).array() += inv_sigma(i) * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
      }
    }
  });
}

Var softmax_rows(const Var& x, const Mask& allowed) {
  if (allowed.rows() != x.rows() || allowed.cols() != x.cols()) throw Error("softmax_rows: mask shape mismatch");
  Matrix p = Matrix::Zero(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (allowed(i, j)) mx = std::max(mx, x.value()(i, j));
    }
    if (!std::isfinite(mx)) continue;
    double z = 0.0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (allowed(i, j)) {
        p(i, j) = std::exp(x.value()(i, j) - mx);
        z += p(i, j);
      }
    }
    p.row(i) /= z;
  }
  return make_op(p, {x}, [p](Node& self) {
    Node& px = parent(self, 0);
    const Eigen::VectorXd dot = self.grad.cwiseProduct(p).rowwise().sum();
    Matrix g = self.grad;
    g.colwise() -= dot;
    px.grad_buffer() += p.cwiseProduct(g);
  });
}

Var col_slice(const Var& a, Eigen::Index start, Eigen::Index width) {
  if (start < 0 || start + width > a.cols()) throw Error("col_slice: out of range");
  return make_op(a.value().middleCols(start, width), {a}, [start, width](Node& self) {
    parent(self, 0).grad_buffer().middleCols(start, width) += self.grad;
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw Error("concat_cols: nothing to concatenate");
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) throw Error("concat_cols: row counts differ");
    cols += p.cols();
  }
  Matrix v(rows, cols);
  Eigen::Index at = 0;
  auto node = std::make_shared<Node>();
  for (const Var& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
    if (p.requires_grad()) node->requires_grad = true;
  }
  node->value = std::move(v);
  if (node->requires_grad) {
    for (const Var& p : parts) node->parents.push_back(p.node());
    node->backward = [](Node& self) {
      Eigen::Index offset = 0;
      for (auto& p : self.parents) {
        const Eigen::Index w = p->value.cols();
        if (p->requires_grad) p->grad_buffer() += self.grad.middleCols(offset, w);
        offset += w;
      }
    };
  }
  return Var(std::move(node));
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  Matrix v(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) throw Error("gather_rows: id out of range");
    v.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> saved(ids.begin(), ids.end());
  return make_op(std::move(v), {table}, [saved = std::move(saved)](Node& self) {
    Matrix& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < saved.size(); ++i) g.row(saved[i]) += self.grad.row(static_cast<Eigen::Index>(i));
  });
}

Var mean_rows(const Var& a, std::span<const char> keep) {
  if (static_cast<Eigen::Index>(keep.size()) != a.rows()) throw Error("mean_rows: mask length mismatch");
  Matrix v = Matrix::Zero(1, a.cols());
  double count = 0.0;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    if (keep[i]) {
      v += a.value().row(static_cast<Eigen::Index>(i));
      count += 1.0;
    }
  }
  if (count == 0.0) throw Error("mean_rows: no rows kept");
  v /= count;
  std::vector<char> saved(keep.begin(), keep.end());
  return make_op(std::move(v), {a}, [saved = std::move(saved), count](Node& self) {
    Matrix& g = parent(self, 0).grad_buffer();
    for (std::size_t i = 0; i < saved.size(); ++i) {
      if (saved[i]) g.row(static_cast<Eigen::Index>(i)) += self.grad.row(0) / count;
    }
  });
}

RowVector log_softmax(const Eigen::Ref<const RowVector>& logits) {
  const double mx = logits.maxCoeff();
  const double lse = mx + std::log((logits.array() - mx).exp().sum());
  return (logits.array() - lse).matrix();
}

Var cross_entropy(const Var& logits, std::span<const int> rows, std::span<const int> targets) {
  if (rows.size() != targets.size() || rows.empty()) throw Error("cross_entropy: bad row/target lists");
  const double m = static_cast<double>(rows.size());
  Matrix probs(static_cast<Eigen::Index>(rows.size()), logits.cols());
  double loss = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= logits.rows()) throw Error("cross_entropy: row out of range");
    if (targets[k] < 0 || targets[k] >= logits.cols()) throw Error("cross_entropy: target out of range");
    const RowVector lp = log_softmax(logits.value().row(rows[k]));
    loss -= lp(targets[k]);
    probs.row(static_cast<Eigen::Index>(k)) = lp.array().exp().matrix();
  }
  Matrix v(1, 1);
  v(0, 0) = loss / m;
  std::vector<int> r(rows.begin(), rows.end());
  std::vector<int> t(targets.begin(), targets.end());
  return make_op(std::move(v), {logits}, [probs, r = std::move(r), t = std::move(t), m](Node& self) {
    Matrix& g = parent(self, 0).grad_buffer();
    const double up = self.grad(0, 0) / m;
    for (std::size_t k = 0; k < r.size(); ++k) {
      g.row(r[k]) += up * probs.row(static_cast<Eigen::Index>(k));
      g(r[k], t[k]) -= up;
    }
  });
}

Var dropout(const Var& a, double rate, Rng& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw Error("dropout: rate must be < 1");
  Matrix keep(a.rows(), a.cols());
  const double s = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < keep.size(); ++i) keep.data()[i] = rng.uniform() < rate ? 0.0 : s;
  return make_op(a.value().cwiseProduct(keep), {a}, [keep](Node& self) {
    parent(self, 0).grad_buffer() += self.grad.cwiseProduct(keep);
  });
}

}  // namespace headlab::ad
