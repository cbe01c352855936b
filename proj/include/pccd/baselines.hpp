#ifndef PCCD_BASELINES_HPP
#define PCCD_BASELINES_HPP

#include "pccd/kdtree.hpp"
#include "pccd/types.hpp"

#include <vector>

namespace pccd {

/// Cloud-to-cloud distance baseline: per newer-cloud point, the distance to
/// the nearest older-cloud point, thresholded by Otsu. No spatial cleaning
/// here; the evaluation driver applies it uniformly.
ChangeMap c2c(const PointCloud& pc1, const PointCloud& pc2, const KdIndex& index1,
              int otsu_bins = 256);

/// Surface normal at p from the covariance of neighbors within `scale`:
/// eigenvector of the smallest eigenvalue, oriented toward +z (vertical
/// surfaces fall back to +x, then +y). Ill-conditioned or too-small
/// neighborhoods return +z.
Eigen::Vector3d estimate_normal(const PointCloud& cloud, const KdIndex& index, const Point3& p,
                                double scale);

struct M3C2Params {
  double normal_scale = 5.0;       // D, meters
  double projection_radius = 0.5;  // d/2, meters
  double max_cylinder_depth = 10.0;
  double registration_error = 0.07;
  double core_cell = 1.0;  // core point subsample cell

  void validate() const;
};

struct M3C2Core {
  Point3 point = Point3::Zero();
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double distance = 0.0;  // mean2(projection) - mean1(projection)
  double lod = 0.0;       // level of detection
  bool significant = false;
  int n1 = 0, n2 = 0;  // cylinder populations
};

struct M3C2Result {
  std::vector<M3C2Core> cores;
  ChangeMap map;  // on pc2; each point inherits its nearest core's verdict
};

/// Distance along locally estimated normals between the point populations
/// of both clouds inside a projection cylinder, with a statistical level of
/// detection: LoD = 1.96 * sqrt(s1^2/n1 + s2^2/n2) + registration_error.
/// An empty cylinder on either side is never significant.
M3C2Result m3c2(const PointCloud& pc1, const PointCloud& pc2, const M3C2Params& params);

/// Optional pre-filter: drops every point whose mask entry is 1. The mask
/// must match the cloud size.
PointCloud apply_ground_mask(const PointCloud& cloud, const std::vector<ChangeLabel>& mask);

}  // namespace pccd

#endif  // PCCD_BASELINES_HPP
