#include "pccd/dcva.hpp"

#include "pccd/geometry.hpp"
#include "pccd/threading.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pccd {

namespace {

void horizontal_bbox(const PointCloud& cloud, double& lo_x, double& hi_x, double& lo_y,
                     double& hi_y) {
  lo_x = hi_x = cloud.points[0].x();
  lo_y = hi_y = cloud.points[0].y();
  for (const Point3& p : cloud.points) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }
}

}  // namespace

std::vector<Eigen::Vector2d> coverage_grid(double lo_x, double hi_x, double lo_y, double hi_y,
                                           double stride) {
  const double row_step = stride * std::sqrt(3.0) / 2.0;
  std::vector<Eigen::Vector2d> centers;
  int row = 0;
  for (double y = lo_y - stride; y <= hi_y + stride; y += row_step, ++row) {
    const double offset = (row % 2 == 1) ? stride / 2.0 : 0.0;
    for (double x = lo_x - stride + offset; x <= hi_x + stride; x += stride) {
      centers.emplace_back(x, y);
    }
  }
  return centers;
}

FeatureMap extract_features(PointConvNet& net, const PointCloud& cloud, int tap,
                            double tile_radius, double stride,
                            const std::vector<Eigen::Vector2d>& explicit_centers) {
  if (cloud.empty()) throw std::invalid_argument("extract_features: empty cloud");
  if (!(tile_radius > 0.0) || !(stride > 0.0)) {
    throw std::invalid_argument("extract_features: radius and stride must be > 0");
  }
  net.level_of_layer(tap);  // validates the tap

  std::vector<Eigen::Vector2d> centers = explicit_centers;
  if (centers.empty()) {
    double lo_x, hi_x, lo_y, hi_y;
    horizontal_bbox(cloud, lo_x, hi_x, lo_y, hi_y);
    centers = coverage_grid(lo_x, hi_x, lo_y, hi_y, stride);
  }

  // Assign each point to its horizontally closest center; a kd-tree over the
  // flattened centers keeps the lowest-index tie rule.
  std::vector<Point3> flat;
  flat.reserve(centers.size());
  for (const auto& c : centers) flat.emplace_back(c.x(), c.y(), 0.0);
  const KdIndex center_index(flat);

  std::vector<int> assigned(cloud.size());
  parallel_for(cloud.size(), [&](std::size_t i) {
    const Point3 q(cloud.points[i].x(), cloud.points[i].y(), 0.0);
    assigned[i] = center_index.nearest(q).first;
  });

  std::vector<std::vector<int>> owned(centers.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    owned[assigned[i]].push_back(static_cast<int>(i));
    if (horizontal_distance(cloud.points[i], centers[assigned[i]]) > tile_radius) {
      throw std::logic_error("extract_features: point not covered by its tile");
    }
  }

  std::vector<int> active;
  for (std::size_t c = 0; c < centers.size(); ++c) {
    if (!owned[c].empty()) active.push_back(static_cast<int>(c));
  }

  const KdIndex cloud_index(cloud);
  FeatureMap map;
  map.tap_layer = tap;
  bool sized = false;

  // Tiles are independent against read-only weights; rows land in disjoint
  // slots so the parallel fill is deterministic.
  std::vector<Eigen::MatrixXd> tile_feats(active.size());
  std::vector<Tile> tiles(active.size());
  parallel_for(active.size(), [&](std::size_t a) {
    const int c = active[a];
    tiles[a] = extract_cylinder(cloud, cloud_index, centers[c], tile_radius);
    TileOutput out = net.forward(tile_points(cloud, tiles[a]), {tap});
    tile_feats[a] = std::move(out.taps.at(tap));
  });

  for (std::size_t a = 0; a < active.size(); ++a) {
    const int c = active[a];
    if (!sized) {
      map.features.resize(static_cast<int>(cloud.size()), tile_feats[a].cols());
      sized = true;
    }
    // Row index of each cloud point inside its tile.
    std::vector<int> row_of;
    row_of.assign(cloud.size(), -1);
    for (std::size_t r = 0; r < tiles[a].point_indices.size(); ++r) {
      row_of[tiles[a].point_indices[r]] = static_cast<int>(r);
    }
    for (int idx : owned[c]) {
      if (row_of[idx] < 0) throw std::logic_error("extract_features: owned point outside tile");
      map.features.row(idx) = tile_feats[a].row(row_of[idx]);
    }
  }
  return map;
}

std::vector<double> delta_magnitude(const FeatureMap& f1, const FeatureMap& f2,
                                    const PointCloud& pc1, const PointCloud& pc2,
                                    const KdIndex& index1) {
  if (f1.features.cols() != f2.features.cols() || f1.tap_layer != f2.tap_layer) {
    throw std::invalid_argument("delta_magnitude: feature dimension mismatch");
  }
  if (f1.features.rows() != static_cast<int>(pc1.size()) ||
      f2.features.rows() != static_cast<int>(pc2.size())) {
    throw std::invalid_argument("delta_magnitude: feature/cloud size mismatch");
  }
  std::vector<double> magnitude(pc2.size());
  parallel_for(pc2.size(), [&](std::size_t i) {
    const int j = index1.nearest(pc2.points[i]).first;
    magnitude[i] = (f2.features.row(static_cast<int>(i)) - f1.features.row(j)).norm();
  });
  return magnitude;
}

double otsu_threshold(const std::vector<double>& values, int bins) {
  if (bins < 2) throw std::invalid_argument("otsu_threshold: need >= 2 bins");
  if (values.size() < 2) throw DegenerateValues("otsu_threshold: fewer than two values");
  double lo = values[0], hi = values[0];
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) throw DegenerateValues("otsu_threshold: all values identical");

  const double width = (hi - lo) / bins;
  std::vector<std::int64_t> hist(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / width);
    b = std::clamp(b, 0, bins - 1);
    hist[b] += 1;
  }

  // Moments over bin indices; integer sums keep both this and the naive
  // oracle bit-identical.
  const std::int64_t total = static_cast<std::int64_t>(values.size());
  std::int64_t sum_all = 0;
  for (int b = 0; b < bins; ++b) sum_all += hist[b] * b;

  double best_sigma = -1.0;
  int best_split = -1;
  std::int64_t n0 = 0, sum0 = 0;
  for (int s = 1; s < bins; ++s) {
    n0 += hist[s - 1];
    sum0 += hist[s - 1] * (s - 1);
    const std::int64_t n1 = total - n0;
    if (n0 == 0 || n1 == 0) continue;
    const double mu0 = static_cast<double>(sum0) / static_cast<double>(n0);
    const double mu1 = static_cast<double>(sum_all - sum0) / static_cast<double>(n1);
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

std::vector<ChangeLabel> apply_threshold(const std::vector<double>& magnitude, double threshold) {
  std::vector<ChangeLabel> decisions(magnitude.size());
  for (std::size_t i = 0; i < magnitude.size(); ++i) {
    decisions[i] = magnitude[i] > threshold ? kChanged : kUnchanged;
  }
  return decisions;
}

std::vector<ChangeLabel> clean_isolated(const std::vector<ChangeLabel>& decisions,
                                        const PointCloud& pc2, const KdIndex& index2, int k) {
  if (k < 1) throw std::invalid_argument("clean_isolated: k must be >= 1");
  if (decisions.size() != pc2.size()) {
    throw std::invalid_argument("clean_isolated: decision/cloud size mismatch");
  }
  const int kk = std::min<int>(k, index2.size());
  std::vector<ChangeLabel> out(decisions.size());
  parallel_for(pc2.size(), [&](std::size_t i) {
    const auto nbrs = index2.knn(pc2.points[i], kk);
    int changed = 0;
    for (const auto& [idx, dist] : nbrs) {
      (void)dist;
      if (decisions[idx] == kChanged) ++changed;
    }
    out[i] = 2 * changed > static_cast<int>(nbrs.size()) ? kChanged : kUnchanged;
  });
  return out;
}

ChangeMap detect_changes(PointConvNet& net, const PointCloud& pc1, const PointCloud& pc2,
                         const DcvaParams& params) {
  if (pc1.empty() || pc2.empty()) throw std::invalid_argument("detect_changes: empty cloud");
  const double stride = params.tile_radius * params.stride_factor;

  // One grid over the union bounding box: both epochs see the same tile
  // frames, so the per-tile normalization cancels in unchanged areas.
  double lo_x1, hi_x1, lo_y1, hi_y1, lo_x2, hi_x2, lo_y2, hi_y2;
  horizontal_bbox(pc1, lo_x1, hi_x1, lo_y1, hi_y1);
  horizontal_bbox(pc2, lo_x2, hi_x2, lo_y2, hi_y2);
  const std::vector<Eigen::Vector2d> centers =
      coverage_grid(std::min(lo_x1, lo_x2), std::max(hi_x1, hi_x2), std::min(lo_y1, lo_y2),
                    std::max(hi_y1, hi_y2), stride);

  const FeatureMap f1 =
      extract_features(net, pc1, params.tap, params.tile_radius, stride, centers);
  const FeatureMap f2 =
      extract_features(net, pc2, params.tap, params.tile_radius, stride, centers);
  const KdIndex index1(pc1);

  ChangeMap map;
  map.magnitude = delta_magnitude(f1, f2, pc1, pc2, index1);
  try {
    map.threshold = otsu_threshold(map.magnitude, params.otsu_bins);
  } catch (const DegenerateValues&) {
    map.threshold = std::numeric_limits<double>::infinity();
    map.decision.assign(pc2.size(), kUnchanged);
    return map;
  }
  map.decision = apply_threshold(map.magnitude, map.threshold);
  const KdIndex index2(pc2);
  map.decision = clean_isolated(map.decision, pc2, index2, params.clean_k);
  return map;
}

}  // namespace pccd
