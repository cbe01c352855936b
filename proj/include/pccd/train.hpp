#ifndef PCCD_TRAIN_HPP
#define PCCD_TRAIN_HPP

#include "pccd/network.hpp"
#include "pccd/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pccd {

struct TrainConfig {
  int epochs = 15;
  int cylinders_per_epoch = 100;
  int batch_size = 10;
  double tile_radius = 20.0;  // meters
  double first_cell = 0.5;    // meters, must match the network's base cell
  int k = 6;                  // cluster count, must match the network head
  std::uint64_t rng_seed = 1;

  void validate() const;
};

enum class AppliedLoss { kDeepClustering, kTemporal, kContrastive };

const char* applied_loss_name(AppliedLoss l);

/// One training iteration's losses. All three are computed and logged every
/// iteration; exactly one (per the i mod 3 schedule) drove the update.
struct LossReport {
  int epoch = 0;
  int iteration = 0;  // within epoch
  AppliedLoss applied = AppliedLoss::kDeepClustering;
  double l_dc = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double l12 = 0.0;
  double l12p = 0.0;
};

/// Self-supervised training: per epoch, sample cylinder centers on the older
/// cloud, extract co-located tile batches from both clouds plus a deranged
/// shuffle of the newer batch, and per iteration apply one of the three
/// losses by the i mod 3 rule (0 -> deep clustering, 1 -> temporal
/// consistency, 2 -> contrastive), stepping SGD with momentum 0.98 and
/// learning rate 0.01 * 0.95^epoch.
///
/// Cylinders that come up empty in either cloud are resampled (bounded
/// retries). Deterministic given the seed and a fixed thread count of 1;
/// parallel sections reduce in fixed order so any thread count matches.
std::vector<LossReport> train(PointConvNet& net, const PointCloud& pc1, const PointCloud& pc2,
                              const TrainConfig& cfg);

/// One line per iteration: `epoch,iter,applied_loss,L_DC,L1,L2,L12,L12p`.
std::string render_loss_log(const std::vector<LossReport>& log);
std::vector<LossReport> parse_loss_log(const std::string& text);

}  // namespace pccd

#endif  // PCCD_TRAIN_HPP
