#ifndef PCCD_KDTREE_HPP
#define PCCD_KDTREE_HPP

#include "pccd/types.hpp"

#include <utility>
#include <vector>

namespace pccd {

/// Balanced 3D space-partitioning tree. Immutable after construction;
/// concurrent read queries are safe.
///
/// Query results are defined to match a brute-force scan exactly: distance
/// ties are broken by the smallest point index, and subtrees whose boundary
/// lies at exactly the current worst distance are still visited.
class KdIndex {
 public:
  /// Throws std::invalid_argument on an empty cloud.
  explicit KdIndex(const PointCloud& cloud);
  explicit KdIndex(std::vector<Point3> points);

  int size() const { return static_cast<int>(pts_.size()); }
  const Point3& point(int i) const { return pts_[static_cast<std::size_t>(i)]; }

  /// Index and Euclidean distance of the closest point to q.
  std::pair<int, double> nearest(const Point3& q) const;

  /// The k closest points, ascending by (distance, index). Requires 1 <= k <= size().
  std::vector<std::pair<int, double>> knn(const Point3& q, int k) const;

  /// Indices of all points with |p - q| <= r, ascending by index.
  std::vector<int> radius(const Point3& q, double r) const;

  /// Indices of all points with horizontal distance to c <= r (z unbounded),
  /// ascending by index.
  std::vector<int> radius_xy(const Eigen::Vector2d& c, double r) const;

 private:
  struct Node {
    double split = 0.0;
    int dim = -1;        // -1 marks a leaf
    int left = -1;
    int right = -1;
    int begin = 0, end = 0;  // leaf range into perm_
  };

  int build(int begin, int end);

  void nearest_rec(int node, const Point3& q, double& best_d2, int& best_idx) const;
  void knn_rec(int node, const Point3& q, int k,
               std::vector<std::pair<double, int>>& heap) const;
  void radius_rec(int node, const Point3& q, double r2, std::vector<int>& out) const;
  void radius_xy_rec(int node, const Eigen::Vector2d& c, double r2,
                     std::vector<int>& out) const;

  std::vector<Point3> pts_;
  std::vector<int> perm_;
  std::vector<Node> nodes_;
};

}  // namespace pccd

#endif  // PCCD_KDTREE_HPP
