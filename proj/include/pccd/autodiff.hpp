#ifndef PCCD_AUTODIFF_HPP
#define PCCD_AUTODIFF_HPP

#include <Eigen/Core>

#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pccd::ad {

/// Learnable weights with matching gradient and momentum buffers.
struct Parameter {
  std::string name;
  Eigen::MatrixXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd momentum;

  Parameter(std::string n, int rows, int cols)
      : name(std::move(n)),
        value(Eigen::MatrixXd::Zero(rows, cols)),
        grad(Eigen::MatrixXd::Zero(rows, cols)),
        momentum(Eigen::MatrixXd::Zero(rows, cols)) {}

  void zero_grad() { grad.setZero(); }
};

/// Handle to a tape node.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Precomputed neighborhood structure for a point-convolution layer: for
/// each target point, the list of source points within the layer radius and
/// the kernel-point correlation coefficients of each (target, source) pair.
/// Depends only on geometry, never on weights.
struct ConvGeometry {
  int source_count = 0;
  int kernel_count = 0;
  std::vector<int> offsets;    // CSR over targets, size target_count + 1
  std::vector<int> neighbor;   // source index per pair
  std::vector<double> coeff;   // kernel_count coefficients per pair

  int target_count() const { return static_cast<int>(offsets.size()) - 1; }
};

/// Append-only computation graph over dense matrices with reverse-mode
/// differentiation. One graph per training iteration; call backward() at
/// most once, then discard the tape.
///
/// A Parameter bound via parameter() maps to a single node per tape, so a
/// weight used by several tiles accumulates all of their gradients.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Eigen::MatrixXd value);
  Var parameter(Parameter& p);

  const Eigen::MatrixXd& value(Var v) const;
  /// Gradient accumulated at v after backward(); empty matrix if none reached it.
  const Eigen::MatrixXd& grad_of(Var v) const;

  // --- elementwise / structural ---
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  Var exp(Var a);
  Var leaky_relu(Var a, double negative_slope);
  Var concat_cols(Var a, Var b);
  Var gather_rows(Var a, std::vector<int> rows);

  // --- linear algebra ---
  Var matmul(Var a, Var b);
  Var add_row_broadcast(Var a, Var bias);  // bias is 1 x C

  /// Per-column standardization over rows: (a - mean) / sqrt(var + eps).
  Var standardize_columns(Var a, double eps = 1e-6);

  /// Kernel-point gather: out(t, k*C + c) = sum_q coeff(t,q,k) * src(q, c).
  /// `geom` must outlive the tape.
  Var gather_correlate(Var source_features, const ConvGeometry& geom);

  // --- reductions / losses ---
  Var sum(Var a);           // 1 x 1
  Var row_abs_sum(Var a);   // N x 1, L1 norm of each row

  /// Sum over rows of class_weight[label] * cross_entropy(softmax(row), label).
  /// Unnormalized; labels and weights are constants of the graph.
  Var softmax_cross_entropy_sum(Var logits, std::vector<int> labels,
                                Eigen::VectorXd class_weights);

  /// Reverse pass from a 1x1 root; accumulates into Parameter::grad of every
  /// bound parameter the root depends on.
  void backward(Var root);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    std::function<void()> back;
  };

  Var push(Eigen::MatrixXd value);
  Eigen::MatrixXd& grad(int id);
  bool has_grad(int id) const { return nodes_[id].grad.size() > 0; }
  const Eigen::MatrixXd& val(int id) const { return nodes_[id].value; }

  std::vector<Node> nodes_;
  std::vector<std::pair<Parameter*, int>> bindings_;
  std::unordered_map<const Parameter*, int> bound_;
};

}  // namespace pccd::ad

#endif  // PCCD_AUTODIFF_HPP
