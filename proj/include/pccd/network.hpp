#ifndef PCCD_NETWORK_HPP
#define PCCD_NETWORK_HPP

#include "pccd/autodiff.hpp"
#include "pccd/kdtree.hpp"
#include "pccd/types.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace pccd {

/// Encoder-decoder point-convolution network configuration. The block count
/// is 2 * encoder_channels.size() + 1 (encoders, bottleneck, mirrored
/// decoders); the default is the 9-block layout.
struct NetworkConfig {
  std::vector<int> encoder_channels = {16, 32, 64, 64};
  int k_out = 6;          // output dimension = cluster count
  int kernel_points = 7;  // center + octahedron layout
  double base_cell = 0.5;    // level-0 subsample cell; doubles per stride
  double base_radius = 1.0;  // first conv radius; doubles per stride
  std::uint64_t seed = 1;

  int encoder_count() const { return static_cast<int>(encoder_channels.size()); }
  int num_blocks() const { return 2 * encoder_count() + 1; }
  double cell_at_level(int level) const;
  double radius_at_block(int block) const;  // encoder block index, 0-based
  void validate() const;
};

/// Center point plus the six octahedron vertices at distance radius/2.
/// Only count == 7 is supported.
std::vector<Point3> kernel_point_positions(int count, double radius);

/// Weight-independent preprocessing of one tile: the subsampled level
/// pyramid, per-level spatial indexes, convolution neighborhoods with
/// kernel correlation coefficients, and the nearest-neighbor maps used for
/// decoder upsampling and restoring original resolution.
///
/// Points are canonicalized to a sorted order internally so the forward
/// pass is exactly permutation-equivariant; `raw_to_l0` is expressed in the
/// caller's point order.
struct TilePyramid {
  std::vector<std::vector<Point3>> levels;          // 0..E
  std::vector<std::unique_ptr<KdIndex>> level_index;
  std::vector<ad::ConvGeometry> encoder_geom;       // E entries, level i -> i+1
  ad::ConvGeometry bottleneck_geom;                 // level E -> level E
  std::vector<std::vector<int>> up_maps;            // up_maps[l]: level-l point -> nearest level-(l+1) point
  std::vector<int> raw_to_l0;                       // raw point -> nearest level-0 point
  Eigen::MatrixXd input_features;                   // level-0 x 2: (1, z - z_min)
  std::size_t raw_count = 0;

  /// Nearest level-`level` point for every raw point, in caller order.
  std::vector<int> raw_to_level(const std::vector<Point3>& raw_points, int level) const;
};

TilePyramid build_tile_pyramid(const std::vector<Point3>& points, const NetworkConfig& cfg);

/// Per-point K-dim output at the tile's original resolution, plus any
/// requested tapped layer features, also at original resolution.
struct TileOutput {
  Eigen::MatrixXd y;
  std::map<int, Eigen::MatrixXd> taps;
};

class PointConvNet {
 public:
  explicit PointConvNet(NetworkConfig cfg);

  const NetworkConfig& config() const { return cfg_; }
  std::vector<ad::Parameter>& parameters() { return params_; }
  const std::vector<ad::Parameter>& parameters() const { return params_; }

  struct ForwardVars {
    ad::Var y_raw;                    // raw x K
    std::vector<ad::Var> layers;      // native resolution, index = layer 0..num_blocks
  };

  /// Records the forward pass of one preprocessed tile on the tape. The
  /// pyramid must outlive the tape.
  ForwardVars build_forward(ad::Tape& tape, const TilePyramid& pyramid);

  /// Convenience inference entry point: pyramid + tape + value extraction.
  /// Throws std::invalid_argument on an empty tile.
  TileOutput forward(const std::vector<Point3>& tile_points, const std::vector<int>& taps = {});

  /// Native pyramid level of a tap layer.
  int level_of_layer(int layer) const;

  void save_checkpoint(const std::string& path) const;
  static PointConvNet load_checkpoint(const std::string& path);

 private:
  NetworkConfig cfg_;
  std::vector<ad::Parameter> params_;

  ad::Parameter& weight(int block) { return params_[2 * block]; }
  ad::Parameter& bias(int block) { return params_[2 * block + 1]; }
};

/// v <- momentum * v + g;  w <- w - lr * v.
void sgd_step(std::vector<ad::Parameter>& params, double lr, double momentum);

/// Exponentially decaying learning rate: 0.01 * 0.95^epoch.
double lr_schedule(int epoch);

}  // namespace pccd

#endif  // PCCD_NETWORK_HPP
