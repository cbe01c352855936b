#include "pccd/train.hpp"

#include "pccd/geometry.hpp"
#include "pccd/losses.hpp"
#include "pccd/rng.hpp"
#include "pccd/threading.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace pccd {

namespace {

constexpr double kMomentum = 0.98;
constexpr int kMaxCenterRetries = 200;

struct TrainTile {
  std::vector<Point3> points1;  // raw tile points, older cloud
  std::vector<Point3> points2;  // raw tile points, newer cloud
};

/// Derangement of {0..n-1}: a shuffle with no fixed point, so every
/// contrastive pair really is a mismatched tile pair.
std::vector<int> seeded_derangement(Rng& rng, int n) {
  for (int tries = 0; tries < 1000; ++tries) {
    std::vector<int> p = rng.permutation(n);
    bool fixed = false;
    for (int i = 0; i < n; ++i) {
      if (p[i] == i) {
        fixed = true;
        break;
      }
    }
    if (!fixed) return p;
  }
  throw std::runtime_error("train: failed to draw a derangement");
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1 || cylinders_per_epoch < 1 || batch_size < 1 || k < 2) {
    throw std::invalid_argument("train: counts must be >= 1 (and k >= 2)");
  }
  if (batch_size < 2) {
    throw std::invalid_argument("train: batch_size must be >= 2 (no derangement of one tile)");
  }
  if (cylinders_per_epoch % batch_size != 0) {
    throw std::invalid_argument("train: cylinders_per_epoch must be divisible by batch_size");
  }
  if (!(tile_radius > 0.0) || !(first_cell > 0.0)) {
    throw std::invalid_argument("train: tile_radius and first_cell must be > 0");
  }
}

const char* applied_loss_name(AppliedLoss l) {
  switch (l) {
    case AppliedLoss::kDeepClustering: return "L_DC";
    case AppliedLoss::kTemporal: return "L12";
    case AppliedLoss::kContrastive: return "L12p";
  }
  return "?";
}

std::vector<LossReport> train(PointConvNet& net, const PointCloud& pc1, const PointCloud& pc2,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (pc1.empty() || pc2.empty()) throw std::invalid_argument("train: empty cloud");
  if (cfg.k != net.config().k_out) {
    throw std::invalid_argument("train: cluster count does not match the network head");
  }
  if (cfg.first_cell != net.config().base_cell) {
    throw std::invalid_argument("train: first_cell does not match the network base cell");
  }

  const KdIndex index1(pc1);
  const KdIndex index2(pc2);

  double lo_x = pc1.points[0].x(), hi_x = lo_x;
  double lo_y = pc1.points[0].y(), hi_y = lo_y;
  for (const Point3& p : pc1.points) {
    lo_x = std::min(lo_x, p.x());
    hi_x = std::max(hi_x, p.x());
    lo_y = std::min(lo_y, p.y());
    hi_y = std::max(hi_y, p.y());
  }

  Rng rng(cfg.rng_seed);
  const int batches = cfg.cylinders_per_epoch / cfg.batch_size;
  const int b_count = cfg.batch_size;
  std::vector<LossReport> log;
  log.reserve(static_cast<std::size_t>(cfg.epochs) * batches);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fresh cylinder sample for the epoch; empty tiles force a resample.
    std::vector<TrainTile> tiles(cfg.cylinders_per_epoch);
    for (TrainTile& tile : tiles) {
      bool ok = false;
      for (int attempt = 0; attempt < kMaxCenterRetries; ++attempt) {
        const Eigen::Vector2d center(rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y));
        Tile t1 = extract_cylinder(pc1, index1, center, cfg.tile_radius, 1);
        if (t1.empty()) continue;
        Tile t2 = extract_cylinder(pc2, index2, center, cfg.tile_radius, 2);
        if (t2.empty()) continue;
        tile.points1 = tile_points(pc1, t1);
        tile.points2 = tile_points(pc2, t2);
        ok = true;
        break;
      }
      if (!ok) throw std::runtime_error("train: could not sample a non-empty cylinder pair");
    }

    for (int iter = 0; iter < batches; ++iter) {
      TrainTile* batch = &tiles[static_cast<std::size_t>(iter) * b_count];
      const std::vector<int> shuffle = seeded_derangement(rng, b_count);

      // Geometry-only work: pyramids and nearest-point pairings.
      std::vector<TilePyramid> pyr1(b_count), pyr2(b_count);
      std::vector<std::vector<int>> pair_temporal(b_count), pair_contrastive(b_count);
      parallel_for(static_cast<std::size_t>(b_count), [&](std::size_t b) {
        pyr1[b] = build_tile_pyramid(batch[b].points1, net.config());
        pyr2[b] = build_tile_pyramid(batch[b].points2, net.config());
        const KdIndex tile1_index(batch[b].points1);
        pair_temporal[b] = nearest_pairing(tile1_index, batch[b].points2);
        pair_contrastive[b] = nearest_pairing(tile1_index, batch[shuffle[b]].points2);
      });

      ad::Tape tape;
      std::vector<ad::Var> y1(b_count), y2(b_count), y2_shuffled(b_count);
      for (int b = 0; b < b_count; ++b) y1[b] = net.build_forward(tape, pyr1[b]).y_raw;
      for (int b = 0; b < b_count; ++b) y2[b] = net.build_forward(tape, pyr2[b]).y_raw;
      // The shuffled batch reuses the deterministic forward of the same tile.
      for (int b = 0; b < b_count; ++b) y2_shuffled[b] = y2[shuffle[b]];

      std::vector<std::vector<int>> labels1(b_count), labels2(b_count);
      for (int b = 0; b < b_count; ++b) {
        labels1[b] = pseudo_labels(tape.value(y1[b]));
        labels2[b] = pseudo_labels(tape.value(y2[b]));
      }
      std::vector<int> pooled1, pooled2;
      for (int b = 0; b < b_count; ++b) {
        pooled1.insert(pooled1.end(), labels1[b].begin(), labels1[b].end());
        pooled2.insert(pooled2.end(), labels2[b].begin(), labels2[b].end());
      }
      const ClusterWeights weights = cluster_weights(pooled1, pooled2, cfg.k);

      ad::Var l1 = deep_clustering_term(tape, y1, labels1, weights.w);
      ad::Var l2 = deep_clustering_term(tape, y2, labels2, weights.w);
      ad::Var l_dc = tape.scale(tape.add(l1, l2), 0.5);
      ad::Var l12 = temporal_term(tape, y1, y2, pair_temporal);
      ad::Var l12p = contrastive_term(tape, y1, y2_shuffled, pair_contrastive);

      LossReport report;
      report.epoch = epoch;
      report.iteration = iter;
      report.l1 = tape.value(l1)(0, 0);
      report.l2 = tape.value(l2)(0, 0);
      report.l_dc = tape.value(l_dc)(0, 0);
      report.l12 = tape.value(l12)(0, 0);
      report.l12p = tape.value(l12p)(0, 0);

      ad::Var applied;
      switch (iter % 3) {
        case 0:
          applied = l_dc;
          report.applied = AppliedLoss::kDeepClustering;
          break;
        case 1:
          applied = l12;
          report.applied = AppliedLoss::kTemporal;
          break;
        default:
          applied = l12p;
          report.applied = AppliedLoss::kContrastive;
          break;
      }

      for (auto& p : net.parameters()) p.zero_grad();
      tape.backward(applied);
      sgd_step(net.parameters(), lr_schedule(epoch), kMomentum);
      log.push_back(report);
    }
  }
  return log;
}

std::string render_loss_log(const std::vector<LossReport>& log) {
  std::string out;
  out.reserve(log.size() * 96);
  char line[256];
  for (const LossReport& r : log) {
    std::snprintf(line, sizeof(line), "%d,%d,%s,%.12g,%.12g,%.12g,%.12g,%.12g\n", r.epoch,
                  r.iteration, applied_loss_name(r.applied), r.l_dc, r.l1, r.l2, r.l12, r.l12p);
    out += line;
  }
  return out;
}

std::vector<LossReport> parse_loss_log(const std::string& text) {
  std::vector<LossReport> log;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    LossReport r;
    char name[16];
    if (std::sscanf(line.c_str(), "%d,%d,%15[^,],%lg,%lg,%lg,%lg,%lg", &r.epoch, &r.iteration,
                    name, &r.l_dc, &r.l1, &r.l2, &r.l12, &r.l12p) != 8) {
      throw std::runtime_error("malformed loss log line: " + line);
    }
    const std::string n(name);
    if (n == "L_DC") {
      r.applied = AppliedLoss::kDeepClustering;
    } else if (n == "L12") {
      r.applied = AppliedLoss::kTemporal;
    } else if (n == "L12p") {
      r.applied = AppliedLoss::kContrastive;
    } else {
      throw std::runtime_error("unknown loss name in log: " + n);
    }
    log.push_back(r);
  }
  return log;
}

}  // namespace pccd
