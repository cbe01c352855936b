#include "pccd/autodiff.hpp"

#include "pccd/threading.hpp"

#include <cmath>
#include <stdexcept>

namespace pccd::ad {

namespace {
const Eigen::MatrixXd kEmpty;

void check_same_shape(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}
}  // namespace

Var Tape::push(Eigen::MatrixXd value) {
  nodes_.push_back(Node{std::move(value), {}, nullptr});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Eigen::MatrixXd& Tape::grad(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Eigen::MatrixXd::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Eigen::MatrixXd value) { return push(std::move(value)); }

Var Tape::parameter(Parameter& p) {
  auto it = bound_.find(&p);
  if (it != bound_.end()) return Var{it->second};
  Var v = push(p.value);
  bound_.emplace(&p, v.id);
  bindings_.emplace_back(&p, v.id);
  return v;
}

const Eigen::MatrixXd& Tape::value(Var v) const { return nodes_.at(v.id).value; }

const Eigen::MatrixXd& Tape::grad_of(Var v) const {
  const Node& n = nodes_.at(v.id);
  return n.grad.size() > 0 ? n.grad : kEmpty;
}

Var Tape::add(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "add");
  Var out = push(val(a.id) + val(b.id));
  nodes_[out.id].back = [this, a, b, out] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    grad(a.id) += g;
    grad(b.id) += g;
  };
  return out;
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(val(a.id), val(b.id), "sub");
  Var out = push(val(a.id) - val(b.id));
  nodes_[out.id].back = [this, a, b, out] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    grad(a.id) += g;
    grad(b.id) -= g;
  };
  return out;
}

Var Tape::scale(Var a, double s) {
  Var out = push(val(a.id) * s);
  nodes_[out.id].back = [this, a, out, s] { grad(a.id) += s * nodes_[out.id].grad; };
  return out;
}

Var Tape::exp(Var a) {
  Var out = push(val(a.id).array().exp().matrix());
  nodes_[out.id].back = [this, a, out] {
    grad(a.id).array() += nodes_[out.id].grad.array() * nodes_[out.id].value.array();
  };
  return out;
}

Var Tape::leaky_relu(Var a, double negative_slope) {
  const Eigen::MatrixXd& x = val(a.id);
  Eigen::MatrixXd y = x.unaryExpr([negative_slope](double v) {
    return v > 0.0 ? v : negative_slope * v;
  });
  Var out = push(std::move(y));
  nodes_[out.id].back = [this, a, out, negative_slope] {
    const Eigen::MatrixXd& x_in = nodes_[a.id].value;
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    grad(a.id).array() +=
        g.array() * x_in.unaryExpr([negative_slope](double v) {
                       return v > 0.0 ? 1.0 : negative_slope;
                     }).array();
  };
  return out;
}

Var Tape::concat_cols(Var a, Var b) {
  const Eigen::MatrixXd& ma = val(a.id);
  const Eigen::MatrixXd& mb = val(b.id);
  if (ma.rows() != mb.rows()) throw std::invalid_argument("concat_cols: row mismatch");
  const int ca = static_cast<int>(ma.cols());  // before push: it may reallocate nodes_
  Eigen::MatrixXd y(ma.rows(), ma.cols() + mb.cols());
  y << ma, mb;
  Var out = push(std::move(y));
  nodes_[out.id].back = [this, a, b, out, ca] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    grad(a.id) += g.leftCols(ca);
    grad(b.id) += g.rightCols(g.cols() - ca);
  };
  return out;
}

Var Tape::gather_rows(Var a, std::vector<int> rows) {
  const Eigen::MatrixXd& m = val(a.id);
  Eigen::MatrixXd y(static_cast<int>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) y.row(static_cast<int>(i)) = m.row(rows[i]);
  Var out = push(std::move(y));
  nodes_[out.id].back = [this, a, out, rows = std::move(rows)] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    Eigen::MatrixXd& ga = grad(a.id);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      ga.row(rows[i]) += g.row(static_cast<int>(i));
    }
  };
  return out;
}

Var Tape::matmul(Var a, Var b) {
  const Eigen::MatrixXd& ma = val(a.id);
  const Eigen::MatrixXd& mb = val(b.id);
  if (ma.cols() != mb.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  Var out = push(ma * mb);
  nodes_[out.id].back = [this, a, b, out] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    grad(a.id).noalias() += g * nodes_[b.id].value.transpose();
    grad(b.id).noalias() += nodes_[a.id].value.transpose() * g;
  };
  return out;
}

Var Tape::add_row_broadcast(Var a, Var bias) {
  const Eigen::MatrixXd& ma = val(a.id);
  const Eigen::MatrixXd& mb = val(bias.id);
  if (mb.rows() != 1 || mb.cols() != ma.cols()) {
    throw std::invalid_argument("add_row_broadcast: bias must be 1 x cols(a)");
  }
  Var out = push(ma.rowwise() + mb.row(0));
  nodes_[out.id].back = [this, a, bias, out] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    grad(a.id) += g;
    grad(bias.id) += g.colwise().sum();
  };
  return out;
}

Var Tape::standardize_columns(Var a, double eps) {
  const Eigen::MatrixXd& x = val(a.id);
  const double n = static_cast<double>(x.rows());
  Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::MatrixXd centered = x.rowwise() - mean;
  Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
  Eigen::RowVectorXd denom = (var.array() + eps).sqrt();
  Eigen::MatrixXd y = centered.array().rowwise() / denom.array();
  Var out = push(std::move(y));
  nodes_[out.id].back = [this, a, out, denom = std::move(denom), n] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    const Eigen::MatrixXd& y_out = nodes_[out.id].value;
    Eigen::RowVectorXd g_mean = g.colwise().mean();
    Eigen::RowVectorXd gy_mean = (g.array() * y_out.array()).colwise().sum() / n;
    Eigen::MatrixXd dx =
        ((g.rowwise() - g_mean).array() - y_out.array().rowwise() * gy_mean.array());
    grad(a.id).array() += dx.array().rowwise() / denom.array();
  };
  return out;
}

Var Tape::gather_correlate(Var source_features, const ConvGeometry& geom) {
  const Eigen::MatrixXd& f = val(source_features.id);
  if (f.rows() != geom.source_count) {
    throw std::invalid_argument("gather_correlate: source row count mismatch");
  }
  const int c = static_cast<int>(f.cols());
  const int k = geom.kernel_count;
  const int targets = geom.target_count();
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(targets, k * c);
  // Target rows are disjoint; each is computed wholly by one worker in a
  // fixed order, so any thread count gives bit-identical results.
  auto fill_row = [&](std::size_t t_idx) {
    const int t = static_cast<int>(t_idx);
    for (int p = geom.offsets[t]; p < geom.offsets[t + 1]; ++p) {
      const int q = geom.neighbor[p];
      const double* h = &geom.coeff[static_cast<std::size_t>(p) * k];
      for (int kk = 0; kk < k; ++kk) {
        if (h[kk] != 0.0) y.block(t, kk * c, 1, c) += h[kk] * f.row(q);
      }
    }
  };
  if (targets >= 512) {
    parallel_for(static_cast<std::size_t>(targets), fill_row);
  } else {
    for (int t = 0; t < targets; ++t) fill_row(t);
  }
  Var out = push(std::move(y));
  const ConvGeometry* gp = &geom;
  nodes_[out.id].back = [this, source_features, out, gp, c, k] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    Eigen::MatrixXd& gf = grad(source_features.id);
    // The scatter conflicts on rows, not columns: stripe workers across
    // feature columns so writes stay disjoint and deterministic.
    const int workers =
        gp->target_count() >= 512 ? std::min({worker_count(), c, 8}) : 1;
    parallel_for(static_cast<std::size_t>(workers), [&](std::size_t w) {
      const int c0 = static_cast<int>(w) * c / workers;
      const int c1 = static_cast<int>(w + 1) * c / workers;
      if (c0 == c1) return;
      for (int t = 0; t < gp->target_count(); ++t) {
        for (int p = gp->offsets[t]; p < gp->offsets[t + 1]; ++p) {
          const int q = gp->neighbor[p];
          const double* h = &gp->coeff[static_cast<std::size_t>(p) * k];
          for (int kk = 0; kk < k; ++kk) {
            if (h[kk] != 0.0) {
              gf.block(q, c0, 1, c1 - c0) += h[kk] * g.block(t, kk * c + c0, 1, c1 - c0);
            }
          }
        }
      }
    });
  };
  return out;
}

Var Tape::sum(Var a) {
  Eigen::MatrixXd y(1, 1);
  y(0, 0) = val(a.id).sum();
  Var out = push(std::move(y));
  nodes_[out.id].back = [this, a, out] {
    grad(a.id).array() += nodes_[out.id].grad(0, 0);
  };
  return out;
}

Var Tape::row_abs_sum(Var a) {
  const Eigen::MatrixXd& x = val(a.id);
  Eigen::MatrixXd y = x.array().abs().rowwise().sum();
  Var out = push(std::move(y));
  nodes_[out.id].back = [this, a, out] {
    const Eigen::MatrixXd& g = nodes_[out.id].grad;
    const Eigen::MatrixXd& x_in = nodes_[a.id].value;
    // subgradient: sign(0) = 0
    grad(a.id).array() +=
        x_in.array().sign() * (g.col(0).replicate(1, x_in.cols())).array();
  };
  return out;
}

Var Tape::softmax_cross_entropy_sum(Var logits, std::vector<int> labels,
                                    Eigen::VectorXd class_weights) {
  const Eigen::MatrixXd& y = val(logits.id);
  const int n = static_cast<int>(y.rows());
  const int k = static_cast<int>(y.cols());
  if (static_cast<int>(labels.size()) != n) {
    throw std::invalid_argument("softmax_cross_entropy_sum: label count mismatch");
  }
  if (class_weights.size() != k) {
    throw std::invalid_argument("softmax_cross_entropy_sum: weight count mismatch");
  }

  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    const double m = y.row(i).maxCoeff();
    const double lse = m + std::log((y.row(i).array() - m).exp().sum());
    total += class_weights[labels[i]] * (lse - y(i, labels[i]));
  }
  Eigen::MatrixXd out_val(1, 1);
  out_val(0, 0) = total;
  Var out = push(std::move(out_val));
  nodes_[out.id].back = [this, logits, out, labels = std::move(labels),
                         class_weights = std::move(class_weights)] {
    const double g = nodes_[out.id].grad(0, 0);
    const Eigen::MatrixXd& y_in = nodes_[logits.id].value;
    Eigen::MatrixXd& gl = grad(logits.id);
    for (int i = 0; i < y_in.rows(); ++i) {
      const double m = y_in.row(i).maxCoeff();
      Eigen::RowVectorXd p = (y_in.row(i).array() - m).exp();
      p /= p.sum();
      const double w = class_weights[labels[i]];
      gl.row(i) += g * w * p;
      gl(i, labels[i]) -= g * w;
    }
  };
  return out;
}

void Tape::backward(Var root) {
  const Eigen::MatrixXd& r = val(root.id);
  if (r.rows() != 1 || r.cols() != 1) {
    throw std::invalid_argument("backward: root must be a 1x1 scalar");
  }
  grad(root.id)(0, 0) = 1.0;
  for (int id = root.id; id >= 0; --id) {
    if (nodes_[id].back && has_grad(id)) nodes_[id].back();
  }
  for (auto& [param, id] : bindings_) {
    if (has_grad(id)) param->grad += nodes_[id].grad;
  }
}

}  // namespace pccd::ad
