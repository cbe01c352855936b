#include "pccd/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace pccd {

std::vector<int> pseudo_labels(const Eigen::MatrixXd& y) {
  if (y.cols() < 2) throw std::invalid_argument("pseudo_labels: need K >= 2 columns");
  std::vector<int> labels(y.rows());
  for (int i = 0; i < y.rows(); ++i) {
    int best = 0;
    for (int k = 1; k < y.cols(); ++k) {
      if (y(i, k) > y(i, best)) best = k;
    }
    labels[i] = best;
  }
  return labels;
}

ClusterWeights cluster_weights(const std::vector<int>& labels1, const std::vector<int>& labels2,
                               int k) {
  if (k < 2) throw std::invalid_argument("cluster_weights: need K >= 2");
  ClusterWeights cw;
  cw.counts = Eigen::VectorXi::Zero(k);
  for (int c : labels1) cw.counts[c] += 1;
  for (int c : labels2) cw.counts[c] += 1;
  const long total = cw.counts.sum();
  if (total == 0) throw std::invalid_argument("cluster_weights: no labels");

  cw.alpha = static_cast<double>(k) * static_cast<double>(total);
  cw.w = Eigen::VectorXd::Zero(k);
  double w_max = 0.0;
  for (int c = 0; c < k; ++c) {
    if (cw.counts[c] > 0) {
      cw.w[c] = 1.0 / std::sqrt(cw.alpha * static_cast<double>(cw.counts[c]));
      w_max = std::max(w_max, cw.w[c]);
    }
  }
  for (int c = 0; c < k; ++c) {
    if (cw.counts[c] == 0) cw.w[c] = w_max;
  }
  return cw;
}

std::vector<int> nearest_pairing(const KdIndex& index1, const std::vector<Point3>& queries) {
  std::vector<int> pairing(queries.size());
  for (std::size_t i = 0; i < queries.size(); ++i) {
    pairing[i] = index1.nearest(queries[i]).first;
  }
  return pairing;
}

ad::Var deep_clustering_term(ad::Tape& tape, const std::vector<ad::Var>& y,
                             const std::vector<std::vector<int>>& labels,
                             const Eigen::VectorXd& class_weights) {
  if (y.empty() || y.size() != labels.size()) {
    throw std::invalid_argument("deep_clustering_term: batch mismatch");
  }
  double weight_total = 0.0;
  ad::Var acc;
  for (std::size_t b = 0; b < y.size(); ++b) {
    for (int c : labels[b]) weight_total += class_weights[c];
    ad::Var s = tape.softmax_cross_entropy_sum(y[b], labels[b], class_weights);
    acc = acc.valid() ? tape.add(acc, s) : s;
  }
  if (weight_total <= 0.0) throw std::invalid_argument("deep_clustering_term: zero total weight");
  return tape.scale(acc, 1.0 / weight_total);
}

ad::Var temporal_term(ad::Tape& tape, const std::vector<ad::Var>& y1,
                      const std::vector<ad::Var>& y2,
                      const std::vector<std::vector<int>>& pairing) {
  if (y1.size() != y2.size() || y1.size() != pairing.size()) {
    throw std::invalid_argument("temporal_term: batch mismatch");
  }
  std::size_t n_total = 0;
  ad::Var acc;
  for (std::size_t b = 0; b < y1.size(); ++b) {
    if (pairing[b].empty()) continue;  // older tile had no points, skip
    n_total += pairing[b].size();
    ad::Var paired = tape.gather_rows(y1[b], pairing[b]);
    ad::Var s = tape.sum(tape.row_abs_sum(tape.sub(paired, y2[b])));
    acc = acc.valid() ? tape.add(acc, s) : s;
  }
  if (n_total == 0) throw std::invalid_argument("temporal_term: no usable tile pairs");
  return tape.scale(acc, 1.0 / static_cast<double>(n_total));
}

ad::Var contrastive_term(ad::Tape& tape, const std::vector<ad::Var>& y1,
                         const std::vector<ad::Var>& y2_shuffled,
                         const std::vector<std::vector<int>>& pairing) {
  if (y1.size() != y2_shuffled.size() || y1.size() != pairing.size()) {
    throw std::invalid_argument("contrastive_term: batch mismatch");
  }
  std::size_t n_total = 0;
  ad::Var acc;
  for (std::size_t b = 0; b < y1.size(); ++b) {
    if (pairing[b].empty()) continue;
    n_total += pairing[b].size();
    ad::Var paired = tape.gather_rows(y1[b], pairing[b]);
    ad::Var dist = tape.row_abs_sum(tape.sub(paired, y2_shuffled[b]));
    ad::Var s = tape.sum(tape.exp(tape.scale(dist, -1.0)));
    acc = acc.valid() ? tape.add(acc, s) : s;
  }
  if (n_total == 0) throw std::invalid_argument("contrastive_term: no usable tile pairs");
  return tape.scale(acc, 1.0 / static_cast<double>(n_total));
}

namespace {

std::vector<ad::Var> as_constants(ad::Tape& tape, const std::vector<Eigen::MatrixXd>& mats) {
  std::vector<ad::Var> vars;
  vars.reserve(mats.size());
  for (const auto& m : mats) vars.push_back(tape.constant(m));
  return vars;
}

}  // namespace

DeepClusteringLoss deep_clustering_loss(const std::vector<Eigen::MatrixXd>& y1,
                                        const std::vector<Eigen::MatrixXd>& y2,
                                        const ClusterWeights& weights) {
  ad::Tape tape;
  std::vector<std::vector<int>> labels1, labels2;
  for (const auto& m : y1) labels1.push_back(pseudo_labels(m));
  for (const auto& m : y2) labels2.push_back(pseudo_labels(m));
  ad::Var l1 = deep_clustering_term(tape, as_constants(tape, y1), labels1, weights.w);
  ad::Var l2 = deep_clustering_term(tape, as_constants(tape, y2), labels2, weights.w);
  DeepClusteringLoss out;
  out.l1 = tape.value(l1)(0, 0);
  out.l2 = tape.value(l2)(0, 0);
  out.l_dc = (out.l1 + out.l2) / 2.0;
  return out;
}

double temporal_consistency_loss(const std::vector<Eigen::MatrixXd>& y1,
                                 const std::vector<Eigen::MatrixXd>& y2,
                                 const std::vector<std::vector<int>>& pairing) {
  ad::Tape tape;
  ad::Var l = temporal_term(tape, as_constants(tape, y1), as_constants(tape, y2), pairing);
  return tape.value(l)(0, 0);
}

double contrastive_loss(const std::vector<Eigen::MatrixXd>& y1,
                        const std::vector<Eigen::MatrixXd>& y2_shuffled,
                        const std::vector<std::vector<int>>& pairing) {
  ad::Tape tape;
  ad::Var l =
      contrastive_term(tape, as_constants(tape, y1), as_constants(tape, y2_shuffled), pairing);
  return tape.value(l)(0, 0);
}

}  // namespace pccd
