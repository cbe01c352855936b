#ifndef PCCD_CONFIG_HPP
#define PCCD_CONFIG_HPP

#include "pccd/baselines.hpp"
#include "pccd/dcva.hpp"
#include "pccd/network.hpp"
#include "pccd/synth.hpp"
#include "pccd/train.hpp"

#include <cstdint>
#include <string>

namespace pccd {

/// Flat run configuration backing every CLI command. Parsed from a
/// `key = value` text file (# starts a comment); unknown keys are rejected.
/// Defaults match the documented values of each module.
struct RunConfig {
  SceneConfig scene;
  TrainConfig train;

  // network (base cell is shared with train.first_cell)
  int net_k = 6;
  std::vector<int> net_channels = {16, 32, 64, 64};
  int net_kernel_points = 7;
  double net_base_radius = 1.0;
  std::uint64_t net_seed = 1;

  DcvaParams dcva;
  M3C2Params m3c2;
  std::string baseline_method = "c2c";
  int eval_clean_k = 15;

  std::string in_pc1;
  std::string in_pc2;
  std::string in_checkpoint;
  std::string in_pred;
  std::string in_truth;
  std::string in_ground_mask_pc1;
  std::string in_ground_mask_pc2;

  /// Throws std::invalid_argument on unknown keys or malformed values.
  void set(const std::string& key, const std::string& value);

  /// Routes --seed to every module seed.
  void set_all_seeds(std::uint64_t seed);

  NetworkConfig network_config() const;

  static RunConfig from_file(const std::string& path);
};

}  // namespace pccd

#endif  // PCCD_CONFIG_HPP
