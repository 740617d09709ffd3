#pragma once

#include <functional>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace headlab {
class Rng;
}

namespace headlab::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic, Eigen::RowMajor>;
/// allowed(i, j) == true lets row i see column j.
using Mask = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Node {
  Matrix value;
  Matrix grad;  // empty until something flows into it
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  /// Gradient buffer, zero-initialized on first use.
  Matrix& grad_buffer() {
    if (grad.size() == 0) grad = Matrix::Zero(value.rows(), value.cols());
    return grad;
  }
};

/// Handle to a node of the dynamic graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Matrix value);
  /// Leaf that collects gradients (a parameter).
  static Var parameter(Matrix value);

  bool defined() const { return node_ != nullptr; }
  const Matrix& value() const { return node_->value; }
  Matrix& mutable_value() { return node_->value; }
  const Matrix& grad() const { return node_->grad; }
  void zero_grad() { node_->grad.resize(0, 0); }
  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool on) { node_->requires_grad = on; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Reverse pass from a 1x1 root, seeding its gradient with `seed`.
/// Gradients accumulate into leaves across calls until zero_grad().
void backward(const Var& root, double seed = 1.0);

Var matmul(const Var& a, const Var& b);
/// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
/// Adds a 1 x cols row to every row of a.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double s);
/// Exact (erf based) GELU.
Var gelu(const Var& a);
/// Row-wise layer normalization with affine 1 x cols gain and bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);
/// Row-wise softmax over allowed entries; disallowed entries are exactly 0
/// and a row with nothing allowed is all zeros.
Var softmax_rows(const Var& x, const Mask& allowed);
Var col_slice(const Var& a, Eigen::Index start, Eigen::Index width);
Var concat_cols(std::span<const Var> parts);
/// Rows of `table` selected by ids.
Var gather_rows(const Var& table, std::span<const int> ids);
/// Mean over rows with keep[i] != 0, as a 1 x cols row. At least one row must be kept.
Var mean_rows(const Var& a, std::span<const char> keep);
/// Mean over `rows` of -log softmax(logits.row(r))[targets[k]] (1x1).
Var cross_entropy(const Var& logits, std::span<const int> rows, std::span<const int> targets);
/// Inverted dropout; identity when rate == 0.
Var dropout(const Var& a, double rate, Rng& rng);

/// Numerically stable log-softmax of one row.
RowVector log_softmax(const Eigen::Ref<const RowVector>& logits);

}  // namespace headlab::ad
