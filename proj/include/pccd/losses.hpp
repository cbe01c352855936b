#ifndef PCCD_LOSSES_HPP
#define PCCD_LOSSES_HPP

#include "pccd/autodiff.hpp"
#include "pccd/kdtree.hpp"
#include "pccd/types.hpp"

#include <vector>

namespace pccd {

/// Per-point cluster assignment: argmax over the K output columns, ties to
/// the lowest cluster index. Labels carry no gradient.
std::vector<int> pseudo_labels(const Eigen::MatrixXd& y);

/// Anti-collapse cross-entropy weights: W_k = 1 / sqrt(alpha * C_k) with
/// alpha = K * sum_h C_h. Empty clusters fall back to the largest
/// non-empty weight.
struct ClusterWeights {
  Eigen::VectorXd w;
  Eigen::VectorXi counts;
  double alpha = 0.0;
};

ClusterWeights cluster_weights(const std::vector<int>& labels1, const std::vector<int>& labels2,
                               int k);

/// For each query point, the index of its nearest point in `index1`.
std::vector<int> nearest_pairing(const KdIndex& index1, const std::vector<Point3>& queries);

// ---------------------------------------------------------------------------
// Tape builders. The batch is a list of per-tile output Vars at original
// tile resolution; each builder returns a 1x1 Var.
// ---------------------------------------------------------------------------

/// Weighted cross-entropy of softmax(y) against the pseudo-labels, summed
/// over every point of the batch and normalized by the sum of applied
/// weights.
ad::Var deep_clustering_term(ad::Tape& tape, const std::vector<ad::Var>& y,
                             const std::vector<std::vector<int>>& labels,
                             const Eigen::VectorXd& class_weights);

/// Mean over all newer-tile points of the batch of the L1 distance between
/// each point's output and its nearest older-tile point's output. Tiles
/// whose pairing is empty are skipped (excluded from the mean).
ad::Var temporal_term(ad::Tape& tape, const std::vector<ad::Var>& y1,
                      const std::vector<ad::Var>& y2,
                      const std::vector<std::vector<int>>& pairing);

/// Mean of exp(-L1 distance) over the shuffled batch; minimizing pushes the
/// mismatched pairs apart. Always in (0, 1].
ad::Var contrastive_term(ad::Tape& tape, const std::vector<ad::Var>& y1,
                         const std::vector<ad::Var>& y2_shuffled,
                         const std::vector<std::vector<int>>& pairing);

// ---------------------------------------------------------------------------
// Plain-value entry points over output matrices (no gradient), built on the
// same tape code paths.
// ---------------------------------------------------------------------------

struct DeepClusteringLoss {
  double l_dc = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
};

DeepClusteringLoss deep_clustering_loss(const std::vector<Eigen::MatrixXd>& y1,
                                        const std::vector<Eigen::MatrixXd>& y2,
                                        const ClusterWeights& weights);

double temporal_consistency_loss(const std::vector<Eigen::MatrixXd>& y1,
                                 const std::vector<Eigen::MatrixXd>& y2,
                                 const std::vector<std::vector<int>>& pairing);

double contrastive_loss(const std::vector<Eigen::MatrixXd>& y1,
                        const std::vector<Eigen::MatrixXd>& y2_shuffled,
                        const std::vector<std::vector<int>>& pairing);

}  // namespace pccd

#endif  // PCCD_LOSSES_HPP
