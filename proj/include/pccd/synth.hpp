#ifndef PCCD_SYNTH_HPP
#define PCCD_SYNTH_HPP

#include "pccd/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pccd {

/// Axis-aligned building footprint in scene coordinates ([0, extent]^2).
struct Footprint {
  double x0 = 0, y0 = 0, x1 = 0, y1 = 0;

  double area() const { return (x1 - x0) * (y1 - y0); }
  bool contains_xy(double x, double y) const {
    return x >= x0 && x <= x1 && y >= y0 && y <= y1;
  }
  Footprint inflated(double m) const { return {x0 - m, y0 - m, x1 + m, y1 + m}; }
};

struct NewBuildingOp {
  Footprint footprint;
  double height = 6.0;
};

/// Building present at t1, gone at t2. The exposed ground footprint is
/// marked changed on the newer cloud.
struct DemolishBuildingOp {
  Footprint footprint;
  double height = 5.0;  // height of the t1 building
};

/// Volumetric scatter appearing at t2, truncated to a cylinder of the given
/// radius and height.
struct VegetationOp {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 3.0;
  double height = 5.0;
};

/// Small box appearing at t2 (vehicle-scale clutter).
struct ClutterOp {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double half_x = 1.0, half_y = 1.0;
  double height = 1.5;
};

struct SceneConfig {
  double extent = 50.0;       // square side, meters
  double density_t1 = 12.0;   // points / m^2
  double density_t2 = 22.0;   // points / m^2
  double noise_sigma = 0.05;  // meters
  // Facades catch far fewer near-nadir returns than roofs; walls are sampled
  // at this fraction of the areal density.
  double wall_density_factor = 0.2;
  std::vector<NewBuildingOp> new_buildings;
  std::vector<DemolishBuildingOp> demolished_buildings;
  std::vector<VegetationOp> vegetation;
  std::vector<ClutterOp> clutter;
  std::uint64_t rng_seed = 1;
};

/// Geometric description of one change region; the label oracle for tests
/// and the soundness invariant are phrased against these.
struct ChangeRegion {
  enum class Kind { NewBuilding, Demolition, Vegetation, Clutter };
  Kind kind;
  Footprint footprint;  // buildings, demolition, clutter (clutter as box)
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;  // vegetation
  double z_lo = 0.0, z_hi = 0.0;

  bool contains(const Point3& p) const;
};

/// The declared change regions of a config, in op order. Building and
/// clutter footprints are inflated by the 4-sigma noise margin; demolition
/// uses the strict footprint (it labels ground points).
std::vector<ChangeRegion> change_regions(const SceneConfig& cfg);

struct Scene {
  PointCloud pc1;  // older, unlabeled
  PointCloud pc2;  // newer, labels mark points inside change regions
};

/// Deterministic bi-temporal scene: ground plane sampled at each epoch's
/// density with truncated Gaussian noise, flat-roofed boxes sampled on roof
/// and walls, vegetation as truncated volumetric scatters. Equal seeds give
/// bit-identical clouds and labels.
///
/// Throws std::invalid_argument on invalid configs, including change ops
/// whose regions overlap.
Scene generate_scene(const SceneConfig& cfg);

/// Sidecar manifest (key = value text) recording the config and seed.
std::string render_manifest(const SceneConfig& cfg);

}  // namespace pccd

#endif  // PCCD_SYNTH_HPP
