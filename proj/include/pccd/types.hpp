#ifndef PCCD_TYPES_HPP
#define PCCD_TYPES_HPP

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace pccd {

/// 3D point, coordinates in meters.
using Point3 = Eigen::Vector3d;

inline double horizontal_distance(const Point3& p, const Eigen::Vector2d& c) {
  return (p.head<2>() - c).norm();
}

/// Binary change label attached to a point: 0 = unchanged, 1 = changed.
using ChangeLabel = std::uint8_t;

constexpr ChangeLabel kUnchanged = 0;
constexpr ChangeLabel kChanged = 1;

/// Ordered set of 3D points with optional per-point change labels.
/// `labels` is either empty or has exactly one entry per point.
struct PointCloud {
  std::vector<Point3> points;
  std::vector<ChangeLabel> labels;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  bool has_labels() const { return !labels.empty(); }
};

/// Vertical cylinder over a parent cloud: all indexed points lie within
/// `radius` of `center_xy` horizontally, z unbounded.
struct Tile {
  Eigen::Vector2d center_xy = Eigen::Vector2d::Zero();
  double radius = 0.0;
  std::vector<int> point_indices;  // into the parent cloud, ascending
  int parent_id = 0;               // 1 or 2 (epoch of acquisition)

  std::size_t size() const { return point_indices.size(); }
  bool empty() const { return point_indices.empty(); }
};

/// Per-point feature vectors aligned with a PointCloud, tapped at one layer.
struct FeatureMap {
  Eigen::MatrixXd features;  // N x d_l
  int tap_layer = 0;
};

/// Per-point change decision on the newer cloud plus the magnitude field
/// the decision was derived from.
struct ChangeMap {
  std::vector<double> magnitude;
  std::vector<ChangeLabel> decision;
  double threshold = 0.0;

  std::size_t size() const { return decision.size(); }
};

}  // namespace pccd

#endif  // PCCD_TYPES_HPP
