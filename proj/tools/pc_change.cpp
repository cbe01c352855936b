// pc_change: bi-temporal point-cloud change detection toolkit.
//
// Subcommands: generate | train | detect | baseline | eval. Every command is
// deterministic given its config file; all randomness flows from declared
// seeds. PC_CHANGE_THREADS caps worker parallelism.

#include "pccd/baselines.hpp"
#include "pccd/config.hpp"
#include "pccd/dcva.hpp"
#include "pccd/geometry.hpp"
#include "pccd/io.hpp"
#include "pccd/metrics.hpp"
#include "pccd/network.hpp"
#include "pccd/synth.hpp"
#include "pccd/train.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "key = value config file");
  cmd->add_option("--out", args.out_dir, "output directory");
  cmd->add_option("--seed", args.seed, "override every module seed");
  cmd->add_option("--set", args.overrides, "config override, key=value (repeatable)");
}

pccd::RunConfig load_config(const CommonArgs& args) {
  pccd::RunConfig cfg;
  if (!args.config_path.empty()) cfg = pccd::RunConfig::from_file(args.config_path);
  for (const std::string& kv : args.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (args.seed) cfg.set_all_seeds(*args.seed);
  std::filesystem::create_directories(args.out_dir);
  return cfg;
}

pccd::PointCloud read_required_cloud(const std::string& path, const char* which) {
  if (path.empty()) {
    throw std::invalid_argument(std::string("missing required input path: ") + which);
  }
  return pccd::read_cloud(path);
}

std::vector<pccd::ChangeLabel> read_mask(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mask file: " + path);
  std::vector<pccd::ChangeLabel> mask;
  int v;
  while (in >> v) {
    if (v != 0 && v != 1) throw std::runtime_error("mask entries must be 0 or 1: " + path);
    mask.push_back(static_cast<pccd::ChangeLabel>(v));
  }
  return mask;
}

int run_generate(const CommonArgs& args) {
  const pccd::RunConfig cfg = load_config(args);
  const pccd::Scene scene = pccd::generate_scene(cfg.scene);
  pccd::write_cloud(args.out_dir + "/pc1.txt", scene.pc1);
  pccd::write_cloud(args.out_dir + "/pc2.txt", scene.pc2);
  pccd::atomic_write(args.out_dir + "/manifest.txt", pccd::render_manifest(cfg.scene));

  std::size_t changed = 0;
  for (pccd::ChangeLabel l : scene.pc2.labels) changed += l;
  std::printf("generated %zu + %zu points (%.1f%% of pc2 changed) into %s\n", scene.pc1.size(),
              scene.pc2.size(), 100.0 * changed / static_cast<double>(scene.pc2.size()),
              args.out_dir.c_str());
  return 0;
}

int run_train(const CommonArgs& args) {
  const pccd::RunConfig cfg = load_config(args);
  const pccd::PointCloud pc1 = read_required_cloud(cfg.in_pc1, "in.pc1");
  const pccd::PointCloud pc2 = read_required_cloud(cfg.in_pc2, "in.pc2");

  pccd::PointConvNet net(cfg.network_config());
  const std::vector<pccd::LossReport> log = pccd::train(net, pc1, pc2, cfg.train);
  net.save_checkpoint(args.out_dir + "/checkpoint.bin");
  pccd::atomic_write(args.out_dir + "/loss_log.csv", pccd::render_loss_log(log));
  std::printf("trained %d epochs (%zu iterations), checkpoint in %s\n", cfg.train.epochs,
              log.size(), args.out_dir.c_str());
  return 0;
}

int run_detect(const CommonArgs& args) {
  const pccd::RunConfig cfg = load_config(args);
  const pccd::PointCloud pc1 = read_required_cloud(cfg.in_pc1, "in.pc1");
  const pccd::PointCloud pc2 = read_required_cloud(cfg.in_pc2, "in.pc2");
  if (cfg.in_checkpoint.empty()) {
    throw std::invalid_argument("missing required input path: in.checkpoint");
  }
  pccd::PointConvNet net = pccd::PointConvNet::load_checkpoint(cfg.in_checkpoint);
  const pccd::ChangeMap map = pccd::detect_changes(net, pc1, pc2, cfg.dcva);
  pccd::write_change_map(args.out_dir + "/change_map.txt", pc2, map);

  std::size_t changed = 0;
  for (pccd::ChangeLabel l : map.decision) changed += l;
  std::printf("detect: %zu / %zu points changed (threshold %.6g)\n", changed, map.size(),
              map.threshold);
  return 0;
}

int run_baseline(const CommonArgs& args) {
  const pccd::RunConfig cfg = load_config(args);
  pccd::PointCloud pc1 = read_required_cloud(cfg.in_pc1, "in.pc1");
  pccd::PointCloud pc2 = read_required_cloud(cfg.in_pc2, "in.pc2");
  if (!cfg.in_ground_mask_pc1.empty()) {
    pc1 = pccd::apply_ground_mask(pc1, read_mask(cfg.in_ground_mask_pc1));
  }
  if (!cfg.in_ground_mask_pc2.empty()) {
    pc2 = pccd::apply_ground_mask(pc2, read_mask(cfg.in_ground_mask_pc2));
  }

  if (cfg.baseline_method == "c2c") {
    const pccd::KdIndex index1(pc1);
    const pccd::ChangeMap map = pccd::c2c(pc1, pc2, index1, cfg.dcva.otsu_bins);
    pccd::write_change_map(args.out_dir + "/change_map.txt", pc2, map);
    std::printf("c2c: threshold %.6g\n", map.threshold);
    return 0;
  }

  const pccd::M3C2Result result = pccd::m3c2(pc1, pc2, cfg.m3c2);
  pccd::write_change_map(args.out_dir + "/change_map.txt", pc2, result.map);
  std::string cores;
  char line[256];
  for (const pccd::M3C2Core& c : result.cores) {
    std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %.6g %d %.6g\n", c.point.x(), c.point.y(),
                  c.point.z(), std::abs(c.distance), c.significant ? 1 : 0, c.distance);
    cores += line;
  }
  pccd::atomic_write(args.out_dir + "/m3c2_cores.txt", cores);
  std::printf("m3c2: %zu core points\n", result.cores.size());
  return 0;
}

int run_eval(const CommonArgs& args) {
  const pccd::RunConfig cfg = load_config(args);
  if (cfg.in_pred.empty()) throw std::invalid_argument("missing required input path: in.pred");
  const pccd::LoadedChangeMap pred = pccd::read_change_map(cfg.in_pred);
  const pccd::PointCloud truth = read_required_cloud(cfg.in_truth, "in.truth");
  if (pred.cloud.size() != truth.size()) {
    throw std::invalid_argument("eval: prediction has " + std::to_string(pred.cloud.size()) +
                                " points but ground truth has " + std::to_string(truth.size()));
  }
  if (!truth.has_labels()) {
    throw std::invalid_argument("eval: ground truth cloud carries no labels");
  }

  // The cleaning pass is applied uniformly here so methods that do not
  // smooth their own output are compared fairly.
  const pccd::KdIndex index(pred.cloud);
  const std::vector<pccd::ChangeLabel> cleaned =
      pccd::clean_isolated(pred.map.decision, pred.cloud, index, cfg.eval_clean_k);

  const pccd::ConfusionMatrix cm = pccd::confusion(cleaned, truth.labels);
  const pccd::Scores sc = pccd::scores(cm);
  const std::string csv = pccd::scores_csv_line(sc);
  pccd::atomic_write(args.out_dir + "/metrics.txt",
                     pccd::render_scores_table(cm, sc) + csv + "\n");
  std::printf("%s\n", csv.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bi-temporal point cloud change detection"};
  app.require_subcommand(1);

  CommonArgs args;
  CLI::App* generate = app.add_subcommand("generate", "synthesize a bi-temporal scene");
  CLI::App* train = app.add_subcommand("train", "self-supervised feature training");
  CLI::App* detect = app.add_subcommand("detect", "feature-comparison change detection");
  CLI::App* baseline = app.add_subcommand("baseline", "c2c / m3c2 distance baselines");
  CLI::App* eval = app.add_subcommand("eval", "score a change map against ground truth");
  for (CLI::App* cmd : {generate, train, detect, baseline, eval}) add_common(cmd, args);

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) return run_generate(args);
    if (train->parsed()) return run_train(args);
    if (detect->parsed()) return run_detect(args);
    if (baseline->parsed()) return run_baseline(args);
    if (eval->parsed()) return run_eval(args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
