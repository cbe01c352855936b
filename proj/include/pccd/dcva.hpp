#ifndef PCCD_DCVA_HPP
#define PCCD_DCVA_HPP

#include "pccd/kdtree.hpp"
#include "pccd/network.hpp"
#include "pccd/types.hpp"

#include <stdexcept>
#include <vector>

namespace pccd {

/// Otsu input with fewer than two distinct values; callers map it to an
/// all-unchanged decision.
struct DegenerateValues : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DcvaParams {
  int tap = 8;                // network layer the compared features come from
  double tile_radius = 20.0;  // meters
  double stride_factor = 1.0; // center spacing = stride_factor * tile_radius
  int otsu_bins = 256;
  int clean_k = 15;
};

/// Covers the cloud with a hexagonal grid of cylinder centers (spacing
/// `stride`, guaranteeing overlap), forwards each tile, and takes every
/// point's feature from the covering tile whose center is horizontally
/// closest to it (ties to the lower-indexed center).
///
/// `centers` overrides the grid; bi-temporal comparison runs both clouds on
/// one shared grid so the per-tile normalization cancels between epochs.
FeatureMap extract_features(PointConvNet& net, const PointCloud& cloud, int tap,
                            double tile_radius, double stride,
                            const std::vector<Eigen::Vector2d>& centers = {});

/// Hexagonal cover of the given horizontal bounding box with pitch `stride`:
/// any point of the box lies within stride/sqrt(3) of a center.
std::vector<Eigen::Vector2d> coverage_grid(double lo_x, double hi_x, double lo_y, double hi_y,
                                           double stride);

/// Per newer-cloud point: L2 norm of the feature difference to the nearest
/// older-cloud point. Throws std::invalid_argument on dimension mismatch.
std::vector<double> delta_magnitude(const FeatureMap& f1, const FeatureMap& f2,
                                    const PointCloud& pc1, const PointCloud& pc2,
                                    const KdIndex& index1);

/// Histogram threshold maximizing the between-class variance
/// w0*w1*(mu0-mu1)^2 over `bins` equal bins spanning [min, max]; returns the
/// bin edge, ties to the lowest edge. Throws DegenerateValues when the
/// input has fewer than two distinct values.
double otsu_threshold(const std::vector<double>& values, int bins = 256);

/// decision = changed <=> magnitude > threshold.
std::vector<ChangeLabel> apply_threshold(const std::vector<double>& magnitude, double threshold);

/// One synchronous pass replacing each decision by the majority among its k
/// nearest neighbors (self included); ties go to unchanged.
std::vector<ChangeLabel> clean_isolated(const std::vector<ChangeLabel>& decisions,
                                        const PointCloud& pc2, const KdIndex& index2, int k);

/// extract_features x2 -> delta_magnitude -> otsu -> threshold ->
/// clean_isolated. A degenerate (constant) magnitude field yields
/// all-unchanged.
ChangeMap detect_changes(PointConvNet& net, const PointCloud& pc1, const PointCloud& pc2,
                         const DcvaParams& params);

}  // namespace pccd

#endif  // PCCD_DCVA_HPP
