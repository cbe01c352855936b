#include "pccd/geometry.hpp"

#include "pccd/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace pccd {

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellKeyHash {
  std::size_t operator()(const CellKey& k) const {
    std::uint64_t h = 1469598103934665603ULL;
    for (std::uint64_t v : {static_cast<std::uint64_t>(k.x), static_cast<std::uint64_t>(k.y),
                            static_cast<std::uint64_t>(k.z)}) {
      h ^= v;
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

CellKey cell_of(const Point3& p, double cell) {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell)),
          static_cast<std::int64_t>(std::floor(p.y() / cell)),
          static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

}  // namespace

PointCloud grid_subsample(const PointCloud& cloud, double cell) {
  if (!(cell > 0.0)) throw std::invalid_argument("grid_subsample: cell must be > 0");
  for (const Point3& p : cloud.points) {
    if (!p.allFinite()) throw std::invalid_argument("grid_subsample: non-finite coordinate");
  }

  struct Bucket {
    Point3 sum = Point3::Zero();
    int count = 0;
    int changed = 0;
  };
  std::unordered_map<CellKey, int, CellKeyHash> slot;
  std::vector<Bucket> buckets;
  slot.reserve(cloud.size());

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const CellKey key = cell_of(cloud.points[i], cell);
    auto [it, inserted] = slot.try_emplace(key, static_cast<int>(buckets.size()));
    if (inserted) buckets.emplace_back();
    Bucket& b = buckets[it->second];
    b.sum += cloud.points[i];
    b.count += 1;
    if (cloud.has_labels() && cloud.labels[i] == kChanged) b.changed += 1;
  }

  PointCloud out;
  out.points.reserve(buckets.size());
  if (cloud.has_labels()) out.labels.reserve(buckets.size());
  for (const Bucket& b : buckets) {
    out.points.push_back(b.sum / static_cast<double>(b.count));
    if (cloud.has_labels()) {
      // Majority label, tie -> unchanged.
      out.labels.push_back(2 * b.changed > b.count ? kChanged : kUnchanged);
    }
  }
  return out;
}

Tile extract_cylinder(const PointCloud& cloud, const KdIndex& index,
                      const Eigen::Vector2d& center_xy, double radius, int parent_id) {
  if (!(radius > 0.0)) throw std::invalid_argument("extract_cylinder: radius must be > 0");
  Tile tile;
  tile.center_xy = center_xy;
  tile.radius = radius;
  tile.parent_id = parent_id;
  tile.point_indices = index.radius_xy(center_xy, radius);
  (void)cloud;
  return tile;
}

std::vector<Eigen::Vector2d> sample_tile_centers(const PointCloud& cloud, int count,
                                                 std::uint64_t rng_seed) {
  if (count < 1) throw std::invalid_argument("sample_tile_centers: count must be >= 1");
  if (cloud.empty()) throw std::invalid_argument("sample_tile_centers: empty cloud");

  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = std::numeric_limits<double>::infinity(), hi_y = -lo_y;
  for (const Point3& p : cloud.points) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }

  Rng rng(rng_seed);
  std::vector<Eigen::Vector2d> centers;
  centers.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double x = rng.uniform(lo_x, hi_x);
    const double y = rng.uniform(lo_y, hi_y);
    centers.emplace_back(x, y);
  }
  return centers;
}

std::vector<Point3> tile_points(const PointCloud& cloud, const Tile& tile) {
  std::vector<Point3> pts;
  pts.reserve(tile.point_indices.size());
  for (int idx : tile.point_indices) pts.push_back(cloud.points[idx]);
  return pts;
}

}  // namespace pccd
