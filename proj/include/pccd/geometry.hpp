#ifndef PCCD_GEOMETRY_HPP
#define PCCD_GEOMETRY_HPP

#include "pccd/kdtree.hpp"
#include "pccd/types.hpp"

#include <cstdint>
#include <vector>

namespace pccd {

/// Replaces each non-empty cubic cell of side `cell` by the barycenter of its
/// points. Cells appear in order of first occurrence in the input. When the
/// input carries labels, each output point gets the majority label of its
/// cell (ties resolve to unchanged).
///
/// Throws std::invalid_argument on cell <= 0 or non-finite coordinates.
PointCloud grid_subsample(const PointCloud& cloud, double cell);

/// All and only points of `cloud` with horizontal distance <= radius from
/// center_xy, z unbounded. An empty result is a legal (empty) tile.
Tile extract_cylinder(const PointCloud& cloud, const KdIndex& index,
                      const Eigen::Vector2d& center_xy, double radius,
                      int parent_id = 0);

/// `count` centers drawn uniformly from the horizontal bounding box of the
/// cloud, deterministically from the seed.
std::vector<Eigen::Vector2d> sample_tile_centers(const PointCloud& cloud, int count,
                                                 std::uint64_t rng_seed);

/// Gathers the coordinates of a tile's points in index order.
std::vector<Point3> tile_points(const PointCloud& cloud, const Tile& tile);

}  // namespace pccd

#endif  // PCCD_GEOMETRY_HPP
