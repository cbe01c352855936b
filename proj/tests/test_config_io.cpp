#include "pccd/config.hpp"
#include "pccd/io.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace pccd;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = (std::filesystem::temp_directory_path() / name).string();
  std::ofstream out(path, std::ios::trunc);
  out << content;
  return path;
}

}  // namespace

TEST_CASE("cloud text round trip with and without labels") {
  PointCloud cloud;
  cloud.points.emplace_back(1.25, -3.5, 0.125);
  cloud.points.emplace_back(100.0, 200.0, -0.75);
  const std::string path = write_temp("pccd_cloud.txt", "");
  write_cloud(path, cloud);
  PointCloud back = read_cloud(path);
  REQUIRE(back.size() == 2);
  CHECK_FALSE(back.has_labels());
  CHECK(back.points[0] == cloud.points[0]);
  CHECK(back.points[1] == cloud.points[1]);

  cloud.labels = {kUnchanged, kChanged};
  write_cloud(path, cloud);
  back = read_cloud(path);
  REQUIRE(back.has_labels());
  CHECK(back.labels == cloud.labels);
  std::filesystem::remove(path);
}

TEST_CASE("cloud reader skips comments and rejects mixed label columns") {
  const std::string path =
      write_temp("pccd_cloud2.txt", "# header\n1 2 3\n\n  # another\n4 5 6\n");
  const PointCloud cloud = read_cloud(path);
  CHECK(cloud.size() == 2);

  const std::string bad = write_temp("pccd_cloud3.txt", "1 2 3 1\n4 5 6\n");
  CHECK_THROWS(read_cloud(bad));
  const std::string bad2 = write_temp("pccd_cloud4.txt", "1 2 x\n");
  CHECK_THROWS(read_cloud(bad2));
  const std::string bad3 = write_temp("pccd_cloud5.txt", "1 2 3 7\n");
  CHECK_THROWS(read_cloud(bad3));
  const std::string bad4 = write_temp("pccd_cloud6.txt", "1 2 nan\n");
  CHECK_THROWS(read_cloud(bad4));
  std::filesystem::remove(path);
  std::filesystem::remove(bad);
  std::filesystem::remove(bad2);
  std::filesystem::remove(bad3);
  std::filesystem::remove(bad4);
}

TEST_CASE("change map round trip keeps six significant digits of magnitude") {
  PointCloud cloud;
  cloud.points.emplace_back(1, 2, 3);
  cloud.points.emplace_back(4, 5, 6);
  ChangeMap map;
  map.magnitude = {0.12345649, 2.5};
  map.decision = {kChanged, kUnchanged};
  map.threshold = 1.0;
  const std::string path = write_temp("pccd_map.txt", "");
  write_change_map(path, cloud, map);

  const LoadedChangeMap back = read_change_map(path);
  REQUIRE(back.map.size() == 2);
  CHECK(back.map.decision == map.decision);
  CHECK(back.map.magnitude[0] == doctest::Approx(map.magnitude[0]).epsilon(1e-6));
  CHECK(back.cloud.points[0] == Point3(1, 2, 3));
  std::filesystem::remove(path);
}

TEST_CASE("atomic_write replaces content without leaving the temp file") {
  const std::string path = write_temp("pccd_atomic.txt", "old");
  atomic_write(path, "new content\n");
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  CHECK(line == "new content");
  CHECK_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove(path);
}

TEST_CASE("config file parsing: defaults, comments, overrides") {
  const std::string path = write_temp("pccd_cfg.txt",
                                      "# a comment\n"
                                      "scene.extent = 42.5\n"
                                      "train.epochs = 3   # trailing comment\n"
                                      "net.k = 4\n"
                                      "scene.new_building = 1 2 11 12 6\n"
                                      "scene.new_vegetation = 20 20 3 5\n"
                                      "baseline.method = m3c2\n"
                                      "in.pc1 = /tmp/a.txt\n");
  const RunConfig cfg = RunConfig::from_file(path);
  CHECK(cfg.scene.extent == 42.5);
  CHECK(cfg.train.epochs == 3);
  CHECK(cfg.net_k == 4);
  CHECK(cfg.train.k == 4);  // cluster count is shared
  REQUIRE(cfg.scene.new_buildings.size() == 1);
  CHECK(cfg.scene.new_buildings[0].footprint.x1 == 11);
  CHECK(cfg.scene.new_buildings[0].height == 6);
  REQUIRE(cfg.scene.vegetation.size() == 1);
  CHECK(cfg.baseline_method == "m3c2");
  CHECK(cfg.in_pc1 == "/tmp/a.txt");
  // untouched keys keep their documented defaults
  CHECK(cfg.train.batch_size == 10);
  CHECK(cfg.train.tile_radius == 20.0);
  CHECK(cfg.dcva.tap == 8);
  CHECK(cfg.dcva.clean_k == 15);
  CHECK(cfg.m3c2.registration_error == 0.07);
  std::filesystem::remove(path);
}

TEST_CASE("unknown keys and malformed values are rejected") {
  RunConfig cfg;
  CHECK_THROWS_AS(cfg.set("scene.extnet", "50"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("", "x"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("train.epochs", "three"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("train.epochs", "2.5"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("scene.new_building", "1 2 3"), std::invalid_argument);
  CHECK_THROWS_AS(cfg.set("baseline.method", "icp"), std::invalid_argument);

  const std::string bad = write_temp("pccd_cfg_bad.txt", "scene.bogus = 1\n");
  CHECK_THROWS(RunConfig::from_file(bad));
  const std::string bad2 = write_temp("pccd_cfg_bad2.txt", "no equals sign here\n");
  CHECK_THROWS(RunConfig::from_file(bad2));
  std::filesystem::remove(bad);
  std::filesystem::remove(bad2);
}

TEST_CASE("--seed routes to every module seed") {
  RunConfig cfg;
  cfg.set_all_seeds(99);
  CHECK(cfg.scene.rng_seed == 99);
  CHECK(cfg.train.rng_seed == 99);
  CHECK(cfg.net_seed == 99);
  CHECK(cfg.network_config().seed == 99);
}

TEST_CASE("network config is assembled from the shared keys") {
  RunConfig cfg;
  cfg.set("net.channels", "8 16 32 32");
  cfg.set("train.first_cell", "0.25");
  cfg.set("net.base_radius", "0.5");
  const NetworkConfig net = cfg.network_config();
  CHECK(net.encoder_channels == std::vector<int>{8, 16, 32, 32});
  CHECK(net.base_cell == 0.25);
  CHECK(net.base_radius == 0.5);
  CHECK(net.num_blocks() == 9);
}
