#include "pccd/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pccd {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  }
  if (pos != value.size()) {
    throw std::invalid_argument("config: bad number for " + key + ": '" + value + "'");
  }
  return v;
}

int parse_int(const std::string& key, const std::string& value) {
  const double v = parse_double(key, value);
  const int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) {
    throw std::invalid_argument("config: expected integer for " + key + ": '" + value + "'");
  }
  return i;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const std::uint64_t v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad seed for " + key + ": '" + value + "'");
  }
}

std::vector<double> parse_numbers(const std::string& key, const std::string& value,
                                  std::size_t min_count, std::size_t max_count) {
  std::istringstream ss(value);
  std::vector<double> out;
  double v;
  while (ss >> v) out.push_back(v);
  std::string rest;
  if (ss.clear(), ss >> rest) {
    throw std::invalid_argument("config: bad value for " + key + ": '" + value + "'");
  }
  if (out.size() < min_count || out.size() > max_count) {
    throw std::invalid_argument("config: wrong field count for " + key + ": '" + value + "'");
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
  std::vector<int> out;
  for (double v : parse_numbers(key, value, 1, 16)) {
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) {
      throw std::invalid_argument("config: expected integers for " + key);
    }
    out.push_back(i);
  }
  return out;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  // scene
  if (key == "scene.extent") {
    scene.extent = parse_double(key, value);
  } else if (key == "scene.density_t1") {
    scene.density_t1 = parse_double(key, value);
  } else if (key == "scene.density_t2") {
    scene.density_t2 = parse_double(key, value);
  } else if (key == "scene.noise_sigma") {
    scene.noise_sigma = parse_double(key, value);
  } else if (key == "scene.wall_density_factor") {
    scene.wall_density_factor = parse_double(key, value);
  } else if (key == "scene.seed") {
    scene.rng_seed = parse_u64(key, value);
  } else if (key == "scene.new_building") {
    const auto v = parse_numbers(key, value, 5, 5);
    scene.new_buildings.push_back({{v[0], v[1], v[2], v[3]}, v[4]});
  } else if (key == "scene.demolish_building") {
    const auto v = parse_numbers(key, value, 4, 5);
    DemolishBuildingOp op;
    op.footprint = {v[0], v[1], v[2], v[3]};
    if (v.size() == 5) op.height = v[4];
    scene.demolished_buildings.push_back(op);
  } else if (key == "scene.new_vegetation") {
    const auto v = parse_numbers(key, value, 4, 4);
    scene.vegetation.push_back({{v[0], v[1]}, v[2], v[3]});
  } else if (key == "scene.new_clutter") {
    const auto v = parse_numbers(key, value, 5, 5);
    scene.clutter.push_back({{v[0], v[1]}, v[2], v[3], v[4]});
    // train
  } else if (key == "train.epochs") {
    train.epochs = parse_int(key, value);
  } else if (key == "train.cylinders_per_epoch") {
    train.cylinders_per_epoch = parse_int(key, value);
  } else if (key == "train.batch_size") {
    train.batch_size = parse_int(key, value);
  } else if (key == "train.tile_radius") {
    train.tile_radius = parse_double(key, value);
  } else if (key == "train.first_cell") {
    train.first_cell = parse_double(key, value);
  } else if (key == "train.seed") {
    train.rng_seed = parse_u64(key, value);
    // network
  } else if (key == "net.k") {
    net_k = parse_int(key, value);
    train.k = net_k;
  } else if (key == "net.channels") {
    net_channels = parse_int_list(key, value);
  } else if (key == "net.kernel_points") {
    net_kernel_points = parse_int(key, value);
  } else if (key == "net.base_radius") {
    net_base_radius = parse_double(key, value);
  } else if (key == "net.seed") {
    net_seed = parse_u64(key, value);
    // dcva
  } else if (key == "dcva.tap") {
    dcva.tap = parse_int(key, value);
  } else if (key == "dcva.tile_radius") {
    dcva.tile_radius = parse_double(key, value);
  } else if (key == "dcva.stride_factor") {
    dcva.stride_factor = parse_double(key, value);
  } else if (key == "dcva.bins") {
    dcva.otsu_bins = parse_int(key, value);
  } else if (key == "dcva.clean_k") {
    dcva.clean_k = parse_int(key, value);
    // baselines
  } else if (key == "baseline.method") {
    if (value != "c2c" && value != "m3c2") {
      throw std::invalid_argument("config: baseline.method must be c2c or m3c2");
    }
    baseline_method = value;
  } else if (key == "m3c2.normal_scale") {
    m3c2.normal_scale = parse_double(key, value);
  } else if (key == "m3c2.projection_radius") {
    m3c2.projection_radius = parse_double(key, value);
  } else if (key == "m3c2.max_depth") {
    m3c2.max_cylinder_depth = parse_double(key, value);
  } else if (key == "m3c2.registration_error") {
    m3c2.registration_error = parse_double(key, value);
  } else if (key == "m3c2.core_cell") {
    m3c2.core_cell = parse_double(key, value);
    // eval
  } else if (key == "eval.clean_k") {
    eval_clean_k = parse_int(key, value);
    // inputs
  } else if (key == "in.pc1") {
    in_pc1 = value;
  } else if (key == "in.pc2") {
    in_pc2 = value;
  } else if (key == "in.checkpoint") {
    in_checkpoint = value;
  } else if (key == "in.pred") {
    in_pred = value;
  } else if (key == "in.truth") {
    in_truth = value;
  } else if (key == "in.ground_mask_pc1") {
    in_ground_mask_pc1 = value;
  } else if (key == "in.ground_mask_pc2") {
    in_ground_mask_pc2 = value;
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

void RunConfig::set_all_seeds(std::uint64_t seed) {
  scene.rng_seed = seed;
  train.rng_seed = seed;
  net_seed = seed;
}

NetworkConfig RunConfig::network_config() const {
  NetworkConfig cfg;
  cfg.encoder_channels = net_channels;
  cfg.k_out = net_k;
  cfg.kernel_points = net_kernel_points;
  cfg.base_cell = train.first_cell;
  cfg.base_radius = net_base_radius;
  cfg.seed = net_seed;
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);

  RunConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const std::size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": empty key");
    }
    try {
      cfg.set(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return cfg;
}

}  // namespace pccd
