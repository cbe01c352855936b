#include "pccd/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pccd {

namespace {
constexpr int kLeafSize = 16;
}

KdIndex::KdIndex(const PointCloud& cloud) : KdIndex(cloud.points) {}

KdIndex::KdIndex(std::vector<Point3> points) : pts_(std::move(points)) {
  if (pts_.empty()) throw std::invalid_argument("KdIndex: empty cloud");
  perm_.resize(pts_.size());
  for (std::size_t i = 0; i < pts_.size(); ++i) perm_[i] = static_cast<int>(i);
  nodes_.reserve(2 * pts_.size() / kLeafSize + 4);
  build(0, static_cast<int>(pts_.size()));
}

int KdIndex::build(int begin, int end) {
  const int id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  if (end - begin <= kLeafSize) {
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    return id;
  }

  // Split along the widest extent.
  Point3 lo = pts_[perm_[begin]], hi = lo;
  for (int i = begin + 1; i < end; ++i) {
    lo = lo.cwiseMin(pts_[perm_[i]]);
    hi = hi.cwiseMax(pts_[perm_[i]]);
  }
  int dim = 0;
  (hi - lo).maxCoeff(&dim);

  const int mid = begin + (end - begin) / 2;
  std::nth_element(perm_.begin() + begin, perm_.begin() + mid, perm_.begin() + end,
                   [&](int a, int b) {
                     const double ca = pts_[a][dim], cb = pts_[b][dim];
                     return ca < cb || (ca == cb && a < b);
                   });

  nodes_[id].dim = dim;
  nodes_[id].split = pts_[perm_[mid]][dim];
  const int left = build(begin, mid);
  const int right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

void KdIndex::nearest_rec(int node, const Point3& q, double& best_d2, int& best_idx) const {
  const Node& n = nodes_[node];
  if (n.dim < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = perm_[i];
      const double d2 = (pts_[idx] - q).squaredNorm();
      if (d2 < best_d2 || (d2 == best_d2 && idx < best_idx)) {
        best_d2 = d2;
        best_idx = idx;
      }
    }
    return;
  }
  const double diff = q[n.dim] - n.split;
  const int near = diff < 0 ? n.left : n.right;
  const int far = diff < 0 ? n.right : n.left;
  nearest_rec(near, q, best_d2, best_idx);
  if (diff * diff <= best_d2) nearest_rec(far, q, best_d2, best_idx);
}

std::pair<int, double> KdIndex::nearest(const Point3& q) const {
  double best_d2 = std::numeric_limits<double>::infinity();
  int best_idx = -1;
  nearest_rec(0, q, best_d2, best_idx);
  return {best_idx, std::sqrt(best_d2)};
}

void KdIndex::knn_rec(int node, const Point3& q, int k,
                      std::vector<std::pair<double, int>>& heap) const {
  const Node& n = nodes_[node];
  if (n.dim < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = perm_[i];
      const double d2 = (pts_[idx] - q).squaredNorm();
      const std::pair<double, int> cand{d2, idx};
      if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end());
      } else if (cand < heap.front()) {
        std::pop_heap(heap.begin(), heap.end());
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end());
      }
    }
    return;
  }
  const double diff = q[n.dim] - n.split;
  const int near = diff < 0 ? n.left : n.right;
  const int far = diff < 0 ? n.right : n.left;
  knn_rec(near, q, k, heap);
  if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().first) {
    knn_rec(far, q, k, heap);
  }
}

std::vector<std::pair<int, double>> KdIndex::knn(const Point3& q, int k) const {
  if (k < 1 || k > size()) throw std::invalid_argument("KdIndex::knn: k out of range");
  std::vector<std::pair<double, int>> heap;
  heap.reserve(k);
  knn_rec(0, q, k, heap);
  std::sort(heap.begin(), heap.end());
  std::vector<std::pair<int, double>> out;
  out.reserve(heap.size());
  for (const auto& [d2, idx] : heap) out.emplace_back(idx, std::sqrt(d2));
  return out;
}

void KdIndex::radius_rec(int node, const Point3& q, double r2, std::vector<int>& out) const {
  const Node& n = nodes_[node];
  if (n.dim < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = perm_[i];
      if ((pts_[idx] - q).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  const double diff = q[n.dim] - n.split;
  if (diff < 0) {
    radius_rec(n.left, q, r2, out);
    if (diff * diff <= r2) radius_rec(n.right, q, r2, out);
  } else {
    radius_rec(n.right, q, r2, out);
    if (diff * diff <= r2) radius_rec(n.left, q, r2, out);
  }
}

std::vector<int> KdIndex::radius(const Point3& q, double r) const {
  std::vector<int> out;
  radius_rec(0, q, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

void KdIndex::radius_xy_rec(int node, const Eigen::Vector2d& c, double r2,
                            std::vector<int>& out) const {
  const Node& n = nodes_[node];
  if (n.dim < 0) {
    for (int i = n.begin; i < n.end; ++i) {
      const int idx = perm_[i];
      if ((pts_[idx].head<2>() - c).squaredNorm() <= r2) out.push_back(idx);
    }
    return;
  }
  if (n.dim == 2) {  // z never prunes a vertical cylinder
    radius_xy_rec(n.left, c, r2, out);
    radius_xy_rec(n.right, c, r2, out);
    return;
  }
  const double diff = c[n.dim] - n.split;
  if (diff < 0) {
    radius_xy_rec(n.left, c, r2, out);
    if (diff * diff <= r2) radius_xy_rec(n.right, c, r2, out);
  } else {
    radius_xy_rec(n.right, c, r2, out);
    if (diff * diff <= r2) radius_xy_rec(n.left, c, r2, out);
  }
}

std::vector<int> KdIndex::radius_xy(const Eigen::Vector2d& c, double r) const {
  std::vector<int> out;
  radius_xy_rec(0, c, r * r, out);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace pccd
