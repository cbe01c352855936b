#include "pccd/baselines.hpp"

#include "pccd/dcva.hpp"
#include "pccd/geometry.hpp"
#include "pccd/threading.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace pccd {

ChangeMap c2c(const PointCloud& pc1, const PointCloud& pc2, const KdIndex& index1,
              int otsu_bins) {
  if (pc1.empty() || pc2.empty()) throw std::invalid_argument("c2c: empty cloud");
  ChangeMap map;
  map.magnitude.resize(pc2.size());
  parallel_for(pc2.size(), [&](std::size_t i) {
    map.magnitude[i] = index1.nearest(pc2.points[i]).second;
  });
  try {
    map.threshold = otsu_threshold(map.magnitude, otsu_bins);
    map.decision = apply_threshold(map.magnitude, map.threshold);
  } catch (const DegenerateValues&) {
    map.threshold = std::numeric_limits<double>::infinity();
    map.decision.assign(pc2.size(), kUnchanged);
  }
  return map;
}

Eigen::Vector3d estimate_normal(const PointCloud& cloud, const KdIndex& index, const Point3& p,
                                double scale) {
  const Eigen::Vector3d fallback = Eigen::Vector3d::UnitZ();
  const std::vector<int> nbrs = index.radius(p, scale);
  if (nbrs.size() < 3) return fallback;

  Point3 mean = Point3::Zero();
  for (int i : nbrs) mean += cloud.points[i];
  mean /= static_cast<double>(nbrs.size());

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (int i : nbrs) {
    const Point3 d = cloud.points[i] - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(nbrs.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  const Eigen::Vector3d evals = solver.eigenvalues();  // ascending
  // Collinear neighborhoods leave the normal direction ambiguous.
  if (evals[2] <= 0.0 || evals[1] <= 1e-12 * evals[2]) return fallback;

  Eigen::Vector3d n = solver.eigenvectors().col(0);
  constexpr double kOrientEps = 1e-12;
  if (std::abs(n.z()) > kOrientEps) {
    if (n.z() < 0) n = -n;
  } else if (std::abs(n.x()) > kOrientEps) {
    if (n.x() < 0) n = -n;
  } else if (n.y() < 0) {
    n = -n;
  }
  return n;
}

void M3C2Params::validate() const {
  if (!(normal_scale > 0) || !(projection_radius > 0) || !(max_cylinder_depth > 0) ||
      !(registration_error > 0) || !(core_cell > 0)) {
    throw std::invalid_argument("m3c2: all parameters must be positive");
  }
}

namespace {

struct ProjectionStats {
  int n = 0;
  double mean = 0.0;
  double var = 0.0;  // sample variance, 0 when n < 2
};

ProjectionStats project_into_cylinder(const PointCloud& cloud, const KdIndex& index,
                                      const Point3& core, const Eigen::Vector3d& normal,
                                      double radius, double half_depth) {
  const double search = std::sqrt(half_depth * half_depth + radius * radius);
  const std::vector<int> candidates = index.radius(core, search);
  ProjectionStats stats;
  double sum = 0.0, sum_sq = 0.0;
  for (int i : candidates) {
    const Eigen::Vector3d d = cloud.points[i] - core;
    const double s = d.dot(normal);
    if (std::abs(s) > half_depth) continue;
    if ((d - s * normal).squaredNorm() > radius * radius) continue;
    stats.n += 1;
    sum += s;
    sum_sq += s * s;
  }
  if (stats.n > 0) stats.mean = sum / stats.n;
  if (stats.n > 1) {
    stats.var = std::max(0.0, (sum_sq - sum * sum / stats.n) / (stats.n - 1));
  }
  return stats;
}

}  // namespace

M3C2Result m3c2(const PointCloud& pc1, const PointCloud& pc2, const M3C2Params& params) {
  params.validate();
  if (pc1.empty() || pc2.empty()) throw std::invalid_argument("m3c2: empty cloud");

  const KdIndex index1(pc1);
  const KdIndex index2(pc2);
  const PointCloud cores_cloud = grid_subsample(pc1, params.core_cell);

  M3C2Result result;
  result.cores.resize(cores_cloud.size());
  parallel_for(cores_cloud.size(), [&](std::size_t i) {
    M3C2Core core;
    core.point = cores_cloud.points[i];
    core.normal = estimate_normal(pc1, index1, core.point, params.normal_scale);
    const ProjectionStats s1 = project_into_cylinder(pc1, index1, core.point, core.normal,
                                                     params.projection_radius,
                                                     params.max_cylinder_depth);
    const ProjectionStats s2 = project_into_cylinder(pc2, index2, core.point, core.normal,
                                                     params.projection_radius,
                                                     params.max_cylinder_depth);
    core.n1 = s1.n;
    core.n2 = s2.n;
    if (s1.n == 0 || s2.n == 0) {
      core.distance = 0.0;
      core.lod = std::numeric_limits<double>::infinity();
      core.significant = false;
    } else {
      core.distance = s2.mean - s1.mean;
      core.lod = 1.96 * std::sqrt(s1.var / s1.n + s2.var / s2.n) + params.registration_error;
      core.significant = std::abs(core.distance) > core.lod;
    }
    result.cores[i] = core;
  });

  const KdIndex core_index(cores_cloud.points);
  result.map.magnitude.resize(pc2.size());
  result.map.decision.resize(pc2.size());
  result.map.threshold = 0.0;  // significance-based, no histogram threshold
  parallel_for(pc2.size(), [&](std::size_t i) {
    const int c = core_index.nearest(pc2.points[i]).first;
    result.map.magnitude[i] = std::abs(result.cores[c].distance);
    result.map.decision[i] = result.cores[c].significant ? kChanged : kUnchanged;
  });
  return result;
}

PointCloud apply_ground_mask(const PointCloud& cloud, const std::vector<ChangeLabel>& mask) {
  if (mask.size() != cloud.size()) {
    throw std::invalid_argument("apply_ground_mask: mask/cloud size mismatch");
  }
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (mask[i]) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_labels()) out.labels.push_back(cloud.labels[i]);
  }
  return out;
}

}  // namespace pccd
