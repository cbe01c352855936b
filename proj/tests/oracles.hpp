// Independent brute-force references the tests check the library against.
// These deliberately avoid the library's own code paths.

#ifndef PCCD_TESTS_ORACLES_HPP
#define PCCD_TESTS_ORACLES_HPP

#include "pccd/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <tuple>
#include <utility>
#include <vector>

namespace oracles {

inline std::pair<int, double> nearest_scan(const std::vector<pccd::Point3>& pts,
                                           const pccd::Point3& q) {
  int best = -1;
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d2 = (pts[i] - q).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(i);
    }
  }
  return {best, std::sqrt(best_d2)};
}

inline std::vector<std::pair<int, double>> knn_scan(const std::vector<pccd::Point3>& pts,
                                                    const pccd::Point3& q, int k) {
  std::vector<std::pair<double, int>> all;
  all.reserve(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    all.emplace_back((pts[i] - q).squaredNorm(), static_cast<int>(i));
  }
  std::sort(all.begin(), all.end());
  std::vector<std::pair<int, double>> out;
  for (int i = 0; i < k; ++i) out.emplace_back(all[i].second, std::sqrt(all[i].first));
  return out;
}

inline std::vector<int> cylinder_scan(const std::vector<pccd::Point3>& pts,
                                      const Eigen::Vector2d& center, double radius) {
  std::vector<int> out;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double dx = pts[i].x() - center.x();
    const double dy = pts[i].y() - center.y();
    if (std::sqrt(dx * dx + dy * dy) <= radius) out.push_back(static_cast<int>(i));
  }
  return out;
}

/// Cell-hash subsample: floor(coord/cell) triples, barycenter per bucket in
/// first-occurrence order, majority label with ties to unchanged.
inline pccd::PointCloud subsample_hash(const pccd::PointCloud& cloud, double cell) {
  using Key = std::tuple<std::int64_t, std::int64_t, std::int64_t>;
  std::map<Key, std::vector<int>> buckets;
  std::vector<Key> order;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const pccd::Point3& p = cloud.points[i];
    const Key key{static_cast<std::int64_t>(std::floor(p.x() / cell)),
                  static_cast<std::int64_t>(std::floor(p.y() / cell)),
                  static_cast<std::int64_t>(std::floor(p.z() / cell))};
    auto it = buckets.find(key);
    if (it == buckets.end()) {
      buckets.emplace(key, std::vector<int>{static_cast<int>(i)});
      order.push_back(key);
    } else {
      it->second.push_back(static_cast<int>(i));
    }
  }
  pccd::PointCloud out;
  for (const Key& key : order) {
    const std::vector<int>& members = buckets.at(key);
    pccd::Point3 sum = pccd::Point3::Zero();
    int changed = 0;
    for (int i : members) {
      sum += cloud.points[i];
      if (cloud.has_labels() && cloud.labels[i] == pccd::kChanged) ++changed;
    }
    out.points.push_back(sum / static_cast<double>(members.size()));
    if (cloud.has_labels()) {
      out.labels.push_back(2 * changed > static_cast<int>(members.size()) ? pccd::kChanged
                                                                          : pccd::kUnchanged);
    }
  }
  return out;
}

/// Exhaustive Otsu: recomputes both class moments from the histogram for
/// every candidate bin edge, O(bins^2).
inline double otsu_scan(const std::vector<double>& values, int bins) {
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double width = (hi - lo) / bins;
  std::vector<std::int64_t> hist(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    if (b < 0) b = 0;
    if (b >= bins) b = bins - 1;
    hist[b] += 1;
  }
  const std::int64_t total = static_cast<std::int64_t>(values.size());
  double best_sigma = -1.0;
  int best_split = -1;
  for (int s = 1; s < bins; ++s) {
    std::int64_t n0 = 0, sum0 = 0, n1 = 0, sum1 = 0;
    for (int b = 0; b < s; ++b) {
      n0 += hist[b];
      sum0 += hist[b] * b;
    }
    for (int b = s; b < bins; ++b) {
      n1 += hist[b];
      sum1 += hist[b] * b;
    }
    if (n0 == 0 || n1 == 0) continue;
    const double mu0 = static_cast<double>(sum0) / static_cast<double>(n0);
    const double mu1 = static_cast<double>(sum1) / static_cast<double>(n1);
    const double w0 = static_cast<double>(n0) / static_cast<double>(total);
    const double w1 = static_cast<double>(n1) / static_cast<double>(total);
    const double sigma = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (sigma > best_sigma) {
      best_sigma = sigma;
      best_split = s;
    }
  }
  return lo + best_split * width;
}

// --- naive loss reimplementations -----------------------------------------

inline double weighted_cross_entropy_naive(const std::vector<Eigen::MatrixXd>& y,
                                           const std::vector<std::vector<int>>& labels,
                                           const Eigen::VectorXd& class_weights) {
  double total = 0.0, weight_sum = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) {
    for (int i = 0; i < y[t].rows(); ++i) {
      const int c = labels[t][i];
      const double m = y[t].row(i).maxCoeff();
      double z = 0.0;
      for (int k = 0; k < y[t].cols(); ++k) z += std::exp(y[t](i, k) - m);
      const double p = std::exp(y[t](i, c) - m) / z;
      total += class_weights[c] * -std::log(p);
      weight_sum += class_weights[c];
    }
  }
  return total / weight_sum;
}

inline int nearest_index_scan(const std::vector<pccd::Point3>& pts, const pccd::Point3& q) {
  return nearest_scan(pts, q).first;
}

inline double temporal_naive(const std::vector<Eigen::MatrixXd>& y1,
                             const std::vector<Eigen::MatrixXd>& y2,
                             const std::vector<std::vector<pccd::Point3>>& tiles1,
                             const std::vector<std::vector<pccd::Point3>>& tiles2) {
  double total = 0.0;
  std::int64_t count = 0;
  for (std::size_t b = 0; b < y1.size(); ++b) {
    if (tiles1[b].empty()) continue;
    for (std::size_t i = 0; i < tiles2[b].size(); ++i) {
      const int j = nearest_index_scan(tiles1[b], tiles2[b][i]);
      total += (y1[b].row(j) - y2[b].row(static_cast<int>(i))).cwiseAbs().sum();
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

inline double contrastive_naive(const std::vector<Eigen::MatrixXd>& y1,
                                const std::vector<Eigen::MatrixXd>& y2_shuffled,
                                const std::vector<std::vector<pccd::Point3>>& tiles1,
                                const std::vector<std::vector<pccd::Point3>>& tiles2_shuffled) {
  double total = 0.0;
  std::int64_t count = 0;
  for (std::size_t b = 0; b < y1.size(); ++b) {
    if (tiles1[b].empty()) continue;
    for (std::size_t i = 0; i < tiles2_shuffled[b].size(); ++i) {
      const int j = nearest_index_scan(tiles1[b], tiles2_shuffled[b][i]);
      const double l1 =
          (y1[b].row(j) - y2_shuffled[b].row(static_cast<int>(i))).cwiseAbs().sum();
      total += std::exp(-l1);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace oracles

#endif  // PCCD_TESTS_ORACLES_HPP
