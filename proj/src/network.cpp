#include "pccd/network.hpp"

#include "pccd/geometry.hpp"
#include "pccd/io.hpp"
#include "pccd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace pccd {

namespace {

constexpr double kLeakySlope = 0.1;
constexpr double kNormEps = 1e-6;
constexpr char kCheckpointMagic[8] = {'P', 'C', 'C', 'D', 'N', 'E', 'T', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;

ad::ConvGeometry make_conv_geometry(const std::vector<Point3>& source, const KdIndex& source_index,
                                    const std::vector<Point3>& targets, double radius,
                                    int kernel_count) {
  const std::vector<Point3> kernels = kernel_point_positions(kernel_count, radius);
  const double sigma = radius / 2.0;

  ad::ConvGeometry geom;
  geom.source_count = static_cast<int>(source.size());
  geom.kernel_count = kernel_count;
  geom.offsets.reserve(targets.size() + 1);
  geom.offsets.push_back(0);

  std::vector<double> h(kernel_count);
  for (const Point3& p : targets) {
    std::vector<int> nbrs = source_index.radius(p, radius);
    if (nbrs.empty()) nbrs.push_back(source_index.nearest(p).first);
    for (int q : nbrs) {
      const Point3 offset = source[q] - p;
      bool any = false;
      for (int k = 0; k < kernel_count; ++k) {
        h[k] = std::max(0.0, 1.0 - (offset - kernels[k]).norm() / sigma);
        any = any || h[k] > 0.0;
      }
      if (!any) continue;
      geom.neighbor.push_back(q);
      geom.coeff.insert(geom.coeff.end(), h.begin(), h.end());
    }
    geom.offsets.push_back(static_cast<int>(geom.neighbor.size()));
  }
  return geom;
}

std::vector<Point3> canonical_order(const std::vector<Point3>& points) {
  std::vector<int> order(points.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const Point3& pa = points[a];
    const Point3& pb = points[b];
    if (pa.x() != pb.x()) return pa.x() < pb.x();
    if (pa.y() != pb.y()) return pa.y() < pb.y();
    return pa.z() < pb.z();
  });
  std::vector<Point3> sorted;
  sorted.reserve(points.size());
  for (int i : order) sorted.push_back(points[i]);
  return sorted;
}

}  // namespace

double NetworkConfig::cell_at_level(int level) const {
  return base_cell * static_cast<double>(1 << level);
}

double NetworkConfig::radius_at_block(int block) const {
  return base_radius * static_cast<double>(1 << block);
}

void NetworkConfig::validate() const {
  if (k_out < 2) throw std::invalid_argument("network: k_out must be >= 2");
  if (encoder_channels.empty()) throw std::invalid_argument("network: need encoder channels");
  for (int c : encoder_channels) {
    if (c < 1) throw std::invalid_argument("network: channels must be >= 1");
  }
  if (kernel_points != 7) throw std::invalid_argument("network: only 7 kernel points supported");
  if (!(base_cell > 0.0) || !(base_radius > 0.0)) {
    throw std::invalid_argument("network: cells and radii must be positive");
  }
}

std::vector<Point3> kernel_point_positions(int count, double radius) {
  if (count != 7) throw std::invalid_argument("kernel_point_positions: only count == 7 supported");
  const double r = radius / 2.0;
  return {
      {0, 0, 0}, {r, 0, 0}, {-r, 0, 0}, {0, r, 0}, {0, -r, 0}, {0, 0, r}, {0, 0, -r},
  };
}

std::vector<int> TilePyramid::raw_to_level(const std::vector<Point3>& raw_points,
                                           int level) const {
  const KdIndex& index = *level_index[level];
  std::vector<int> map(raw_points.size());
  for (std::size_t i = 0; i < raw_points.size(); ++i) {
    map[i] = index.nearest(raw_points[i]).first;
  }
  return map;
}

TilePyramid build_tile_pyramid(const std::vector<Point3>& points, const NetworkConfig& cfg) {
  cfg.validate();
  if (points.empty()) throw std::invalid_argument("build_tile_pyramid: empty tile");
  const int levels = cfg.encoder_count() + 1;

  TilePyramid pyr;
  pyr.raw_count = points.size();

  // Canonical point order makes every downstream sum independent of the
  // caller's point order, so the forward pass is exactly
  // permutation-equivariant.
  PointCloud current;
  current.points = canonical_order(points);
  for (int l = 0; l < levels; ++l) {
    current = grid_subsample(current, cfg.cell_at_level(l));
    pyr.levels.push_back(current.points);
    pyr.level_index.push_back(std::make_unique<KdIndex>(current.points));
  }

  pyr.raw_to_l0.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    pyr.raw_to_l0[i] = pyr.level_index[0]->nearest(points[i]).first;
  }

  double z_min = points.front().z();
  for (const Point3& p : points) z_min = std::min(z_min, p.z());
  const auto& l0 = pyr.levels[0];
  pyr.input_features.resize(static_cast<int>(l0.size()), 2);
  for (std::size_t i = 0; i < l0.size(); ++i) {
    pyr.input_features(static_cast<int>(i), 0) = 1.0;
    pyr.input_features(static_cast<int>(i), 1) = l0[i].z() - z_min;
  }

  for (int b = 0; b < cfg.encoder_count(); ++b) {
    pyr.encoder_geom.push_back(make_conv_geometry(pyr.levels[b], *pyr.level_index[b],
                                                  pyr.levels[b + 1], cfg.radius_at_block(b),
                                                  cfg.kernel_points));
  }
  const int top = cfg.encoder_count();
  pyr.bottleneck_geom = make_conv_geometry(pyr.levels[top], *pyr.level_index[top],
                                           pyr.levels[top], cfg.radius_at_block(top),
                                           cfg.kernel_points);

  pyr.up_maps.resize(top);
  for (int l = 0; l < top; ++l) {
    const auto& pts = pyr.levels[l];
    pyr.up_maps[l].resize(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      pyr.up_maps[l][i] = pyr.level_index[l + 1]->nearest(pts[i]).first;
    }
  }
  return pyr;
}

PointConvNet::PointConvNet(NetworkConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  const int e = cfg_.encoder_count();
  const auto& ch = cfg_.encoder_channels;

  auto add_block = [&](const std::string& name, int rows, int cols) {
    params_.emplace_back(name + ".w", rows, cols);
    params_.emplace_back(name + ".b", 1, cols);
  };

  int in_ch = 2;
  for (int b = 0; b < e; ++b) {
    add_block("enc" + std::to_string(b + 1), cfg_.kernel_points * in_ch, ch[b]);
    in_ch = ch[b];
  }
  add_block("bottleneck", cfg_.kernel_points * ch[e - 1], ch[e - 1]);
  int prev = ch[e - 1];
  for (int j = 0; j < e; ++j) {
    const int target_level = e - 1 - j;
    const int skip = target_level == 0 ? 2 : ch[target_level - 1];
    const int out = ch[e - 1 - j];
    add_block("dec" + std::to_string(j + 1), prev + skip, out);
    prev = out;
  }
  add_block("head", prev, cfg_.k_out);

  Rng rng(cfg_.seed);
  for (std::size_t i = 0; i < params_.size(); i += 2) {
    ad::Parameter& w = params_[i];
    const double bound = std::sqrt(6.0 / static_cast<double>(w.value.rows() + w.value.cols()));
    for (int r = 0; r < w.value.rows(); ++r) {
      for (int c = 0; c < w.value.cols(); ++c) w.value(r, c) = rng.uniform(-bound, bound);
    }
    // biases stay zero
  }
}

int PointConvNet::level_of_layer(int layer) const {
  const int e = cfg_.encoder_count();
  if (layer < 0 || layer > cfg_.num_blocks()) {
    throw std::invalid_argument("level_of_layer: tap out of range");
  }
  if (layer <= e) return layer;
  if (layer == e + 1) return e;
  return 2 * e + 1 - layer;
}

PointConvNet::ForwardVars PointConvNet::build_forward(ad::Tape& tape, const TilePyramid& pyr) {
  const int e = cfg_.encoder_count();
  ForwardVars out;

  auto conv_block = [&](ad::Var in, const ad::ConvGeometry& geom, int block) {
    ad::Var a = tape.gather_correlate(in, geom);
    ad::Var h = tape.matmul(a, tape.parameter(weight(block)));
    h = tape.add_row_broadcast(h, tape.parameter(bias(block)));
    h = tape.standardize_columns(h, kNormEps);
    return tape.leaky_relu(h, kLeakySlope);
  };
  auto linear_block = [&](ad::Var in, int block) {
    ad::Var h = tape.matmul(in, tape.parameter(weight(block)));
    h = tape.add_row_broadcast(h, tape.parameter(bias(block)));
    h = tape.standardize_columns(h, kNormEps);
    return tape.leaky_relu(h, kLeakySlope);
  };

  ad::Var cur = tape.constant(pyr.input_features);
  out.layers.push_back(cur);
  for (int b = 0; b < e; ++b) {
    cur = conv_block(cur, pyr.encoder_geom[b], b);
    out.layers.push_back(cur);
  }
  cur = conv_block(cur, pyr.bottleneck_geom, e);
  out.layers.push_back(cur);

  for (int j = 0; j < e; ++j) {
    const int target_level = e - 1 - j;
    ad::Var up = tape.gather_rows(cur, pyr.up_maps[target_level]);
    ad::Var skip = out.layers[target_level];  // layer index == level for 0..E
    cur = linear_block(tape.concat_cols(up, skip), e + 1 + j);
    out.layers.push_back(cur);
  }

  const int head = 2 * e + 1;
  ad::Var y0 = tape.add_row_broadcast(tape.matmul(cur, tape.parameter(weight(head))),
                                      tape.parameter(bias(head)));
  out.y_raw = tape.gather_rows(y0, pyr.raw_to_l0);
  return out;
}

TileOutput PointConvNet::forward(const std::vector<Point3>& tile_points,
                                 const std::vector<int>& taps) {
  if (tile_points.empty()) throw std::invalid_argument("forward: empty tile, resample");
  for (int t : taps) level_of_layer(t);  // validates

  const TilePyramid pyr = build_tile_pyramid(tile_points, cfg_);
  ad::Tape tape;
  ForwardVars vars = build_forward(tape, pyr);

  TileOutput out;
  out.y = tape.value(vars.y_raw);
  for (int t : taps) {
    const Eigen::MatrixXd& native = tape.value(vars.layers[t]);
    const int level = level_of_layer(t);
    const std::vector<int> map =
        level == 0 ? pyr.raw_to_l0 : pyr.raw_to_level(tile_points, level);
    Eigen::MatrixXd lifted(static_cast<int>(tile_points.size()), native.cols());
    for (std::size_t i = 0; i < tile_points.size(); ++i) {
      lifted.row(static_cast<int>(i)) = native.row(map[i]);
    }
    out.taps.emplace(t, std::move(lifted));
  }
  return out;
}

void PointConvNet::save_checkpoint(const std::string& path) const {
  std::string buf;
  auto put = [&buf](const void* p, std::size_t n) {
    buf.append(static_cast<const char*>(p), n);
  };
  auto put_u32 = [&](std::uint32_t v) { put(&v, sizeof v); };
  auto put_f64 = [&](double v) { put(&v, sizeof v); };

  put(kCheckpointMagic, sizeof kCheckpointMagic);
  put_u32(kCheckpointVersion);
  put_u32(static_cast<std::uint32_t>(cfg_.encoder_channels.size()));
  for (int c : cfg_.encoder_channels) put_u32(static_cast<std::uint32_t>(c));
  put_u32(static_cast<std::uint32_t>(cfg_.k_out));
  put_u32(static_cast<std::uint32_t>(cfg_.kernel_points));
  put_f64(cfg_.base_cell);
  put_f64(cfg_.base_radius);
  const std::uint64_t seed = cfg_.seed;
  put(&seed, sizeof seed);

  put_u32(static_cast<std::uint32_t>(params_.size()));
  for (const ad::Parameter& p : params_) {
    put_u32(static_cast<std::uint32_t>(p.value.rows()));
    put_u32(static_cast<std::uint32_t>(p.value.cols()));
    for (int r = 0; r < p.value.rows(); ++r) {
      for (int c = 0; c < p.value.cols(); ++c) {
        const float f = static_cast<float>(p.value(r, c));
        put(&f, sizeof f);
      }
    }
  }
  atomic_write(path, buf);
}

PointConvNet PointConvNet::load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);

  auto get = [&in, &path](void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
  };
  auto get_u32 = [&] {
    std::uint32_t v;
    get(&v, sizeof v);
    return v;
  };
  auto get_f64 = [&] {
    double v;
    get(&v, sizeof v);
    return v;
  };

  char magic[8];
  get(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) {
    throw std::runtime_error("not a checkpoint file: " + path);
  }
  if (get_u32() != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version: " + path);
  }

  NetworkConfig cfg;
  cfg.encoder_channels.resize(get_u32());
  for (int& c : cfg.encoder_channels) c = static_cast<int>(get_u32());
  cfg.k_out = static_cast<int>(get_u32());
  cfg.kernel_points = static_cast<int>(get_u32());
  cfg.base_cell = get_f64();
  cfg.base_radius = get_f64();
  std::uint64_t seed;
  get(&seed, sizeof seed);
  cfg.seed = seed;

  PointConvNet net(cfg);
  const std::uint32_t count = get_u32();
  if (count != net.params_.size()) {
    throw std::runtime_error("checkpoint parameter count mismatch: " + path);
  }
  for (ad::Parameter& p : net.params_) {
    const int rows = static_cast<int>(get_u32());
    const int cols = static_cast<int>(get_u32());
    if (rows != p.value.rows() || cols != p.value.cols()) {
      throw std::runtime_error("checkpoint parameter shape mismatch: " + path);
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        float f;
        get(&f, sizeof f);
        p.value(r, c) = static_cast<double>(f);
      }
    }
    p.grad.setZero();
    p.momentum.setZero();
  }
  return net;
}

void sgd_step(std::vector<ad::Parameter>& params, double lr, double momentum) {
  for (ad::Parameter& p : params) {
    p.momentum = momentum * p.momentum + p.grad;
    p.value -= lr * p.momentum;
  }
}

double lr_schedule(int epoch) { return 0.01 * std::pow(0.95, epoch); }

}  // namespace pccd
