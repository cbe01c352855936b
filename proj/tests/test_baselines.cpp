#include "pccd/baselines.hpp"

#include "oracles.hpp"
#include "pccd/rng.hpp"
#include "pccd/synth.hpp"

#include <Eigen/Geometry>

#include <doctest.h>

#include <cmath>

using namespace pccd;

namespace {

/// Uniformly sampled horizontal plane patch with optional Gaussian z-noise.
PointCloud plane_cloud(std::uint64_t seed, double extent, double density, double z0,
                       double sigma) {
  Rng rng(seed);
  PointCloud cloud;
  const int n = static_cast<int>(std::llround(density * extent * extent));
  for (int i = 0; i < n; ++i) {
    const double x = rng.uniform(0, extent);
    const double y = rng.uniform(0, extent);
    cloud.points.emplace_back(x, y, z0 + (sigma > 0 ? rng.normal() * sigma : 0.0));
  }
  return cloud;
}

PointCloud grid_plane(double extent, double step, double z0) {
  PointCloud cloud;
  for (double x = 0; x <= extent; x += step) {
    for (double y = 0; y <= extent; y += step) cloud.points.emplace_back(x, y, z0);
  }
  return cloud;
}

}  // namespace

TEST_CASE("c2c on identical clouds is all unchanged") {
  const PointCloud cloud = plane_cloud(3, 10, 5, 0, 0.05);
  const KdIndex index(cloud);
  const ChangeMap map = c2c(cloud, cloud, index);
  REQUIRE(map.size() == cloud.size());
  for (ChangeLabel d : map.decision) CHECK(d == kUnchanged);
  for (double m : map.magnitude) CHECK(m == 0.0);
}

TEST_CASE("c2c distances equal the brute-force nearest scan") {
  const PointCloud pc1 = plane_cloud(5, 8, 4, 0, 0.1);
  const PointCloud pc2 = plane_cloud(6, 8, 4, 0.3, 0.1);
  const KdIndex index(pc1);
  const ChangeMap map = c2c(pc1, pc2, index);
  for (std::size_t i = 0; i < pc2.size(); ++i) {
    CHECK(map.magnitude[i] == oracles::nearest_scan(pc1.points, pc2.points[i]).second);
  }
}

TEST_CASE("c2c separates a tall new box from ground noise") {
  SceneConfig cfg;
  cfg.extent = 30.0;
  cfg.density_t1 = 8.0;
  cfg.density_t2 = 8.0;
  cfg.rng_seed = 7;
  cfg.new_buildings.push_back({{10, 10, 20, 20}, 6.0});
  const Scene scene = generate_scene(cfg);

  const KdIndex index1(scene.pc1);
  const ChangeMap map = c2c(scene.pc1, scene.pc2, index1);

  std::int64_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < scene.pc2.size(); ++i) {
    const bool truth = scene.pc2.labels[i] == kChanged;
    const bool pred = map.decision[i] == kChanged;
    tp += truth && pred;
    fp += !truth && pred;
    fn += truth && !pred;
  }
  const double iou = static_cast<double>(tp) / static_cast<double>(tp + fp + fn);
  CHECK(iou >= 0.8);
}

TEST_CASE("c2c distances survive a rigid translation of both clouds") {
  const PointCloud pc1 = plane_cloud(11, 6, 5, 0, 0.1);
  const PointCloud pc2 = plane_cloud(12, 6, 5, 0.5, 0.1);
  PointCloud pc1t = pc1, pc2t = pc2;
  const Point3 shift(102.3, -47.9, 13.1);
  for (auto& p : pc1t.points) p += shift;
  for (auto& p : pc2t.points) p += shift;

  const ChangeMap a = c2c(pc1, pc2, KdIndex(pc1));
  const ChangeMap b = c2c(pc1t, pc2t, KdIndex(pc1t));
  for (std::size_t i = 0; i < a.magnitude.size(); ++i) {
    CHECK(a.magnitude[i] == doctest::Approx(b.magnitude[i]).epsilon(1e-9));
  }
}

TEST_CASE("normal of a horizontal plane is +z") {
  const PointCloud cloud = grid_plane(4, 0.25, 1.5);
  const KdIndex index(cloud);
  const Eigen::Vector3d n = estimate_normal(cloud, index, {2, 2, 1.5}, 2.0);
  CHECK(n.z() == doctest::Approx(1.0));
  CHECK(std::abs(n.x()) < 1e-9);
  CHECK(std::abs(n.y()) < 1e-9);
}

TEST_CASE("normal of a vertical plane orients toward +x") {
  PointCloud cloud;
  for (double y = 0; y <= 3; y += 0.2) {
    for (double z = 0; z <= 3; z += 0.2) cloud.points.emplace_back(0.0, y, z);
  }
  const KdIndex index(cloud);
  const Eigen::Vector3d n = estimate_normal(cloud, index, {0, 1.5, 1.5}, 1.5);
  CHECK(n.x() == doctest::Approx(1.0));
}

TEST_CASE("normal of a noisy tilted plane is within two degrees") {
  Rng rng(21);
  const Eigen::Vector3d true_n = Eigen::Vector3d(0.3, -0.2, 0.9).normalized();
  Eigen::Vector3d u = true_n.cross(Eigen::Vector3d::UnitX()).normalized();
  Eigen::Vector3d v = true_n.cross(u);
  PointCloud cloud;
  for (int i = 0; i < 600; ++i) {
    const double a = rng.uniform(-1, 1), b = rng.uniform(-1, 1);
    cloud.points.push_back(a * u + b * v + rng.normal() * 0.01 * true_n);
  }
  const KdIndex index(cloud);
  const Eigen::Vector3d n = estimate_normal(cloud, index, {0, 0, 0}, 1.0);
  const double angle = std::acos(std::min(1.0, std::abs(n.dot(true_n)))) * 180.0 / M_PI;
  CHECK(angle < 2.0);
}

TEST_CASE("degenerate neighborhoods fall back to +z") {
  // two points only
  PointCloud tiny;
  tiny.points.emplace_back(0, 0, 0);
  tiny.points.emplace_back(1, 0, 0);
  const KdIndex tiny_index(tiny);
  CHECK(estimate_normal(tiny, tiny_index, {0, 0, 0}, 5.0) == Eigen::Vector3d::UnitZ());

  // collinear points
  PointCloud line;
  for (int i = 0; i < 30; ++i) line.points.emplace_back(0.1 * i, 0.2 * i, 0.05 * i);
  const KdIndex line_index(line);
  CHECK(estimate_normal(line, line_index, {1, 2, 0.5}, 10.0) == Eigen::Vector3d::UnitZ());
}

TEST_CASE("m3c2 on identical clouds finds nothing significant") {
  const PointCloud cloud = plane_cloud(31, 12, 6, 0, 0.05);
  M3C2Params params;
  const M3C2Result result = m3c2(cloud, cloud, params);
  for (const auto& core : result.cores) {
    CHECK(core.distance == 0.0);
    CHECK_FALSE(core.significant);
  }
  for (ChangeLabel d : result.map.decision) CHECK(d == kUnchanged);
}

TEST_CASE("m3c2 parallel planes: distance near h and significant") {
  const double h = 2.0, sigma = 0.05;
  const PointCloud pc1 = plane_cloud(41, 20, 10, 0, sigma);
  const PointCloud pc2 = plane_cloud(42, 20, 10, h, sigma);
  M3C2Params params;
  const M3C2Result result = m3c2(pc1, pc2, params);
  REQUIRE(!result.cores.empty());
  // a sample mean lands beyond 3 standard errors ~0.27% of the time, so a
  // few exceedances over hundreds of cores are expected of a correct
  // implementation; they must stay rare and bounded
  std::size_t populated = 0, beyond3 = 0;
  for (const auto& core : result.cores) {
    if (core.n1 == 0 || core.n2 == 0) {
      // a Poisson-sparse projection cylinder: defined as never significant
      CHECK_FALSE(core.significant);
      continue;
    }
    ++populated;
    const double standard_error = sigma * std::sqrt(1.0 / core.n1 + 1.0 / core.n2);
    const double err = std::abs(std::abs(core.distance) - h);
    if (err > 3.0 * standard_error) ++beyond3;
    CHECK(err <= 6.0 * standard_error);
    CHECK(core.significant);
    CHECK(core.lod >= params.registration_error);
  }
  CHECK(populated >= result.cores.size() * 99 / 100);
  CHECK(beyond3 <= std::max<std::size_t>(2, populated / 100));

  std::size_t changed = 0;
  for (ChangeLabel d : result.map.decision) changed += d;
  CHECK(changed >= result.map.size() * 99 / 100);
}

TEST_CASE("m3c2 sub-LoD offset is not significant") {
  const double h = 0.01, sigma = 0.005;
  const PointCloud pc1 = plane_cloud(51, 15, 8, 0, sigma);
  const PointCloud pc2 = plane_cloud(52, 15, 8, h, sigma);
  M3C2Params params;  // registration_error 0.07 dominates
  const M3C2Result result = m3c2(pc1, pc2, params);
  for (const auto& core : result.cores) {
    CHECK_FALSE(core.significant);
    CHECK(core.lod >= params.registration_error);
  }
}

TEST_CASE("m3c2 distance flips sign exactly when the clouds swap (noiseless planes)") {
  const PointCloud pc1 = grid_plane(10, 0.5, 0.0);
  const PointCloud pc2 = grid_plane(10, 0.5, 2.0);
  M3C2Params params;
  const M3C2Result forward = m3c2(pc1, pc2, params);
  const M3C2Result backward = m3c2(pc2, pc1, params);
  REQUIRE(forward.cores.size() == backward.cores.size());
  for (std::size_t i = 0; i < forward.cores.size(); ++i) {
    CHECK(forward.cores[i].distance == doctest::Approx(2.0));
    CHECK(forward.cores[i].distance == -backward.cores[i].distance);
  }
}

TEST_CASE("ground mask filters points before the baseline") {
  PointCloud cloud;
  cloud.points.emplace_back(0, 0, 0);
  cloud.points.emplace_back(1, 0, 0);
  cloud.points.emplace_back(2, 0, 0);
  const std::vector<ChangeLabel> mask = {1, 0, 1};
  const PointCloud filtered = apply_ground_mask(cloud, mask);
  REQUIRE(filtered.size() == 1);
  CHECK(filtered.points[0] == Point3(1, 0, 0));
  CHECK_THROWS_AS(apply_ground_mask(cloud, {1, 0}), std::invalid_argument);
}

TEST_CASE("m3c2 rejects invalid parameters") {
  M3C2Params params;
  params.projection_radius = 0.0;
  const PointCloud cloud = plane_cloud(61, 5, 5, 0, 0.01);
  CHECK_THROWS_AS(m3c2(cloud, cloud, params), std::invalid_argument);
}
