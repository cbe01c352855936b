#include "pccd/losses.hpp"

#include "fd_check.hpp"
#include "oracles.hpp"
#include "pccd/rng.hpp"

#include <doctest.h>

#include <cmath>

using namespace pccd;

namespace {

Eigen::MatrixXd random_matrix(std::uint64_t seed, int rows, int cols, double scale = 1.0) {
  Rng rng(seed);
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-scale, scale);
  }
  return m;
}

std::vector<Point3> random_points(std::uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<Point3> pts;
  for (int i = 0; i < n; ++i) {
    pts.emplace_back(rng.uniform(0, 5), rng.uniform(0, 5), rng.uniform(0, 2));
  }
  return pts;
}

}  // namespace

TEST_CASE("pseudo labels take the argmax, ties to the lowest index") {
  Eigen::MatrixXd y(2, 3);
  y << 0.1, 0.9, 0.3, 0.5, 0.5, 0.5;
  const auto labels = pseudo_labels(y);
  CHECK(labels[0] == 1);
  CHECK(labels[1] == 0);

  const Eigen::MatrixXd big = random_matrix(3, 100, 6);
  const auto got = pseudo_labels(big);
  for (int i = 0; i < 100; ++i) {
    int best = 0;
    for (int k = 1; k < 6; ++k) {
      if (big(i, k) > big(i, best)) best = k;
    }
    CHECK(got[i] == best);
  }
  CHECK_THROWS_AS(pseudo_labels(Eigen::MatrixXd::Zero(3, 1)), std::invalid_argument);
}

TEST_CASE("pseudo labels ignore perturbations that keep the argmax") {
  Eigen::MatrixXd y = random_matrix(7, 50, 4);
  const auto before = pseudo_labels(y);
  // nudge every non-argmax entry down and the argmax up
  for (int i = 0; i < y.rows(); ++i) {
    for (int k = 0; k < y.cols(); ++k) y(i, k) += (k == before[i] ? 1e-3 : -1e-3);
  }
  CHECK(pseudo_labels(y) == before);
}

TEST_CASE("cluster weights: equal-count arithmetic is exact") {
  std::vector<int> l1(10, 0), l2(10, 1);
  const ClusterWeights cw = cluster_weights(l1, l2, 2);
  CHECK(cw.alpha == 40.0);
  CHECK(cw.counts[0] == 10);
  CHECK(cw.counts[1] == 10);
  CHECK(cw.w[0] == 1.0 / 20.0);  // 1/sqrt(40*10) = 1/20 exactly
  CHECK(cw.w[1] == 1.0 / 20.0);
}

TEST_CASE("cluster weights: uneven counts follow the formula") {
  std::vector<int> l1(16, 0), l2(4, 1);
  const ClusterWeights cw = cluster_weights(l1, l2, 2);
  CHECK(cw.alpha == 40.0);
  CHECK(cw.w[0] == doctest::Approx(1.0 / std::sqrt(640.0)).epsilon(1e-15));
  CHECK(cw.w[1] == doctest::Approx(1.0 / std::sqrt(160.0)).epsilon(1e-15));
}

TEST_CASE("cluster weights: empty cluster falls back to the max non-empty weight") {
  std::vector<int> l1(20, 1);
  const ClusterWeights cw = cluster_weights(l1, {}, 2);
  CHECK(cw.counts[0] == 0);
  CHECK(cw.w[1] == 1.0 / std::sqrt(40.0 * 20.0));
  CHECK(cw.w[0] == cw.w[1]);
}

TEST_CASE("equal cluster counts give W_k = 1/(K*C) exactly") {
  for (int k : {2, 3, 6}) {
    for (int c : {1, 4, 25}) {
      std::vector<int> labels;
      for (int cl = 0; cl < k; ++cl) labels.insert(labels.end(), c, cl);
      const ClusterWeights cw = cluster_weights(labels, {}, k);
      for (int cl = 0; cl < k; ++cl) {
        // 1/sqrt(K * (K*C) * C) = 1/(K*C)
        CHECK(cw.w[cl] == 1.0 / (static_cast<double>(k) * c));
      }
    }
  }
}

TEST_CASE("uniform logits cost ln K per point regardless of weights") {
  const int k = 6;
  std::vector<Eigen::MatrixXd> y1 = {Eigen::MatrixXd::Constant(30, k, 0.37)};
  std::vector<Eigen::MatrixXd> y2 = {Eigen::MatrixXd::Constant(20, k, -1.4)};
  ClusterWeights cw;
  cw.w = Eigen::VectorXd::LinSpaced(k, 0.3, 2.1);  // arbitrary positive weights
  const DeepClusteringLoss loss = deep_clustering_loss(y1, y2, cw);
  CHECK(loss.l1 == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  CHECK(loss.l2 == doctest::Approx(std::log(6.0)).epsilon(1e-12));
  CHECK(loss.l_dc == doctest::Approx(std::log(6.0)).epsilon(1e-12));
}

TEST_CASE("confident logits drive the clustering loss to zero") {
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(10, 4);
  for (int i = 0; i < 10; ++i) y(i, i % 4) = 50.0;  // huge margin on the argmax
  ClusterWeights cw;
  cw.w = Eigen::VectorXd::Ones(4);
  const DeepClusteringLoss loss = deep_clustering_loss({y}, {y}, cw);
  CHECK(loss.l_dc < 1e-12);
}

TEST_CASE("deep clustering loss matches the naive weighted cross entropy") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    std::vector<Eigen::MatrixXd> y1 = {random_matrix(seed, 20, 6, 2.0),
                                       random_matrix(seed + 100, 13, 6, 2.0)};
    std::vector<Eigen::MatrixXd> y2 = {random_matrix(seed + 200, 17, 6, 2.0)};
    std::vector<std::vector<int>> l1, l2;
    std::vector<int> pooled1, pooled2;
    for (const auto& m : y1) {
      l1.push_back(pseudo_labels(m));
      pooled1.insert(pooled1.end(), l1.back().begin(), l1.back().end());
    }
    for (const auto& m : y2) {
      l2.push_back(pseudo_labels(m));
      pooled2.insert(pooled2.end(), l2.back().begin(), l2.back().end());
    }
    const ClusterWeights cw = cluster_weights(pooled1, pooled2, 6);

    const DeepClusteringLoss got = deep_clustering_loss(y1, y2, cw);
    const double want1 = oracles::weighted_cross_entropy_naive(y1, l1, cw.w);
    const double want2 = oracles::weighted_cross_entropy_naive(y2, l2, cw.w);
    CHECK(std::abs(got.l1 - want1) <= 1e-10);
    CHECK(std::abs(got.l2 - want2) <= 1e-10);
    CHECK(got.l_dc == doctest::Approx((got.l1 + got.l2) / 2).epsilon(1e-15));
  }
}

TEST_CASE("temporal loss is zero for identical tiles, and two for a constant L1 gap") {
  const Eigen::MatrixXd y = random_matrix(31, 25, 6);
  std::vector<int> identity(25);
  for (int i = 0; i < 25; ++i) identity[i] = i;
  CHECK(temporal_consistency_loss({y}, {y}, {identity}) == 0.0);

  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(8, 2);
  Eigen::MatrixXd ones(8, 2);
  ones.col(0).setConstant(1.0);
  ones.col(1).setConstant(-1.0);
  std::vector<int> id8(8);
  for (int i = 0; i < 8; ++i) id8[i] = i;
  CHECK(temporal_consistency_loss({zeros}, {ones}, {id8}) == doctest::Approx(2.0));
}

TEST_CASE("temporal loss matches the brute-force pairing oracle") {
  for (std::uint64_t seed = 41; seed <= 60; ++seed) {
    std::vector<std::vector<Point3>> tiles1 = {random_points(seed, 30),
                                               random_points(seed + 7, 11)};
    std::vector<std::vector<Point3>> tiles2 = {random_points(seed + 13, 22),
                                               random_points(seed + 17, 28)};
    std::vector<Eigen::MatrixXd> y1, y2;
    std::vector<std::vector<int>> pairing;
    for (std::size_t b = 0; b < tiles1.size(); ++b) {
      y1.push_back(random_matrix(seed + 23 + b, static_cast<int>(tiles1[b].size()), 6));
      y2.push_back(random_matrix(seed + 29 + b, static_cast<int>(tiles2[b].size()), 6));
      const KdIndex index(tiles1[b]);
      pairing.push_back(nearest_pairing(index, tiles2[b]));
    }
    const double got = temporal_consistency_loss(y1, y2, pairing);
    const double want = oracles::temporal_naive(y1, y2, tiles1, tiles2);
    CHECK(std::abs(got - want) <= 1e-10);
  }
}

TEST_CASE("contrastive loss: identity shuffle on identical tiles gives exactly one") {
  const Eigen::MatrixXd y = random_matrix(71, 18, 6);
  std::vector<int> identity(18);
  for (int i = 0; i < 18; ++i) identity[i] = i;
  CHECK(contrastive_loss({y}, {y}, {identity}) == 1.0);
}

TEST_CASE("contrastive loss: constant L1 gap of three gives exp(-3)") {
  const Eigen::MatrixXd zeros = Eigen::MatrixXd::Zero(12, 3);
  Eigen::MatrixXd gap(12, 3);
  gap.col(0).setConstant(1.0);
  gap.col(1).setConstant(-1.0);
  gap.col(2).setConstant(1.0);
  std::vector<int> id(12);
  for (int i = 0; i < 12; ++i) id[i] = i;
  CHECK(contrastive_loss({zeros}, {gap}, {id}) == doctest::Approx(std::exp(-3.0)).epsilon(1e-12));
}

TEST_CASE("contrastive loss matches the brute-force oracle and stays in (0, 1]") {
  for (std::uint64_t seed = 81; seed <= 100; ++seed) {
    std::vector<std::vector<Point3>> tiles1 = {random_points(seed, 26),
                                               random_points(seed + 3, 19)};
    std::vector<std::vector<Point3>> tiles2s = {random_points(seed + 5, 24),
                                                random_points(seed + 11, 15)};
    std::vector<Eigen::MatrixXd> y1, y2s;
    std::vector<std::vector<int>> pairing;
    for (std::size_t b = 0; b < tiles1.size(); ++b) {
      y1.push_back(random_matrix(seed + 31 + b, static_cast<int>(tiles1[b].size()), 6));
      y2s.push_back(random_matrix(seed + 37 + b, static_cast<int>(tiles2s[b].size()), 6));
      const KdIndex index(tiles1[b]);
      pairing.push_back(nearest_pairing(index, tiles2s[b]));
    }
    const double got = contrastive_loss(y1, y2s, pairing);
    const double want = oracles::contrastive_naive(y1, y2s, tiles1, tiles2s);
    CHECK(std::abs(got - want) <= 1e-10);
    CHECK(got > 0.0);
    CHECK(got <= 1.0);
  }
}

TEST_CASE("nearest pairing matches the linear scan") {
  const auto tile1 = random_points(111, 40);
  const auto tile2 = random_points(112, 55);
  const KdIndex index(tile1);
  const auto got = nearest_pairing(index, tile2);
  for (std::size_t i = 0; i < tile2.size(); ++i) {
    CHECK(got[i] == oracles::nearest_index_scan(tile1, tile2[i]));
  }
}

TEST_CASE("loss terms propagate gradients into both epochs' outputs") {
  const Eigen::MatrixXd y1m = random_matrix(121, 9, 4);
  const Eigen::MatrixXd y2m = random_matrix(122, 7, 4);
  Rng rng(123);
  std::vector<int> pairing(7);
  for (int& p : pairing) p = static_cast<int>(rng.uniform_index(9));

  // temporal
  {
    ad::Tape tape;
    const ad::Var v1 = tape.constant(y1m);
    const ad::Var v2 = tape.constant(y2m);
    tape.backward(temporal_term(tape, {v1}, {v2}, {pairing}));
    const Eigen::MatrixXd g1 = tape.grad_of(v1);
    const Eigen::MatrixXd g2 = tape.grad_of(v2);
    REQUIRE(g1.size() > 0);
    REQUIRE(g2.size() > 0);
    fd::check_gradient(
        [&](const Eigen::MatrixXd& x) {
          ad::Tape t;
          return t.value(temporal_term(t, {t.constant(x)}, {t.constant(y2m)}, {pairing}))(0, 0);
        },
        y1m, g1);
    fd::check_gradient(
        [&](const Eigen::MatrixXd& x) {
          ad::Tape t;
          return t.value(temporal_term(t, {t.constant(y1m)}, {t.constant(x)}, {pairing}))(0, 0);
        },
        y2m, g2);
  }
  // contrastive
  {
    ad::Tape tape;
    const ad::Var v1 = tape.constant(y1m);
    const ad::Var v2 = tape.constant(y2m);
    tape.backward(contrastive_term(tape, {v1}, {v2}, {pairing}));
    fd::check_gradient(
        [&](const Eigen::MatrixXd& x) {
          ad::Tape t;
          return t.value(contrastive_term(t, {t.constant(x)}, {t.constant(y2m)}, {pairing}))(0,
                                                                                             0);
        },
        y1m, tape.grad_of(v1));
    fd::check_gradient(
        [&](const Eigen::MatrixXd& x) {
          ad::Tape t;
          return t.value(contrastive_term(t, {t.constant(y1m)}, {t.constant(x)}, {pairing}))(0,
                                                                                             0);
        },
        y2m, tape.grad_of(v2));
  }
}
