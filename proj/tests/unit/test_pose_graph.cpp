#include "radarloop/evaluation.hpp"
#include "radarloop/pose_graph.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace radarloop;

namespace {

// Circle of `n` unit steps turning 360/n degrees each, closing on itself.
std::vector<Pose> circle_truth(int n) {
  std::vector<Pose> out = {Pose::identity()};
  const Pose step(yaw_rotation(360.0 / n), Vec3(1, 0, 0));
  for (int i = 0; i < n; ++i) out.push_back(out.back() * step);
  return out;
}

PoseGraph chain_from(const std::vector<Pose>& truth, const std::vector<Pose>& relatives, PoseGraphParams params = {}) {
  PoseGraph g(params);
  g.add_first_node(truth.front());
  for (std::size_t i = 0; i < relatives.size(); ++i) g.add_odometry_edge(static_cast<int>(i), relatives[i]);
  return g;
}

std::vector<Pose> noisy_relatives(const std::vector<Pose>& truth, std::mt19937_64& rng, double t_sigma,
                                  double yaw_sigma) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<Pose> out;
  for (std::size_t i = 1; i < truth.size(); ++i) {
    const Pose rel = truth[i - 1].inverse() * truth[i];
    out.push_back(rel * Pose(yaw_rotation(yaw_sigma * g(rng)), Vec3(t_sigma * g(rng), t_sigma * g(rng), 0.0)));
  }
  return out;
}

}  // namespace

TEST(PoseGraph, OdometryChainExamples) {
  PoseGraph a = chain_from({Pose::identity()}, std::vector<Pose>(5, Pose::identity()));
  for (const auto& p : a.nodes()) EXPECT_EQ(p.translation, Vec3::Zero());
  PoseGraph b = chain_from({Pose::identity()}, std::vector<Pose>(10, Pose(Mat3::Identity(), Vec3(1, 0, 0))));
  EXPECT_LT((b.node(10).translation - Vec3(10, 0, 0)).norm(), 1e-12);
  PoseGraph c = chain_from({Pose::identity()}, std::vector<Pose>(4, Pose(yaw_rotation(90.0), Vec3::Zero())));
  EXPECT_LT((c.node(4).rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_THROW(c.add_odometry_edge(2, Pose::identity()), std::invalid_argument);
  EXPECT_THROW(c.add_odometry_edge(9, Pose::identity()), std::out_of_range);
  EXPECT_THROW(c.add_first_node(Pose::identity()), std::logic_error);
  EXPECT_THROW(c.add_odometry_edge(4, Pose::identity(), Mat6::Zero()), std::invalid_argument);
}

TEST(PoseGraph, LoopEdgePreconditions) {
  PoseGraph g = chain_from({Pose::identity()}, std::vector<Pose>(30, Pose(Mat3::Identity(), Vec3(1, 0, 0))));
  g.add_loop_edge(25, 2, Pose::identity(), 0.9);
  EXPECT_EQ(g.loop_edge_count(), 1u);
  EXPECT_THROW(g.add_loop_edge(25, 2, Pose::identity(), 0.9), std::invalid_argument);
  EXPECT_THROW(g.add_loop_edge(2, 25, Pose::identity(), 0.9), std::invalid_argument);
  EXPECT_THROW(g.add_loop_edge(25, 10, Pose::identity(), 0.9), std::invalid_argument);
  EXPECT_THROW(g.add_loop_edge(40, 2, Pose::identity(), 0.9), std::out_of_range);
  Mat6 bad = Mat6::Identity();
  bad(0, 0) = -1.0;
  EXPECT_THROW(g.add_loop_edge(28, 2, Pose::identity(), 0.9, bad), std::invalid_argument);
  EXPECT_EQ(g.loop_edge_count(), 1u);
}

TEST(PoseGraph, ConsistentChainUnchanged) {
  const auto truth = circle_truth(40);
  std::vector<Pose> rel;
  for (std::size_t i = 1; i < truth.size(); ++i) rel.push_back(truth[i - 1].inverse() * truth[i]);
  PoseGraph g = chain_from(truth, rel);
  const auto before = g.nodes();
  const auto r = g.optimize();
  EXPECT_LT(r.final_chi2, 1e-20);
  for (std::size_t i = 0; i < before.size(); ++i) EXPECT_LT(test::translation_gap(before[i], g.node(i)), 1e-12);
}

TEST(PoseGraph, ExactLoopEdgeRemovesDrift) {
  // 60 m straight run; a constant yaw bias bends the odometry about 5 m off.
  std::vector<Pose> truth, rel;
  for (int i = 0; i <= 60; ++i) truth.push_back(test::planar_pose(i, 0, 0));
  for (int i = 1; i <= 60; ++i) rel.push_back(Pose(yaw_rotation(0.16), Vec3(1, 0, 0)));
  PoseGraph g = chain_from(truth, rel);
  const double before = test::translation_gap(g.node(60), truth[60]);
  ASSERT_GT(before, 4.5);
  ASSERT_LT(before, 6.0);
  g.add_loop_edge(60, 0, truth[0].inverse() * truth[60], 1.0, diagonal_information(1e-4, 1e-4));
  const Pose first = g.node(0);
  const auto r = g.optimize();
  const double after = test::translation_gap(g.node(60), truth[60]);
  EXPECT_LT(after, 0.01 * before);
  EXPECT_LE(r.final_chi2, r.initial_chi2);
  EXPECT_EQ(g.node(0).rotation, first.rotation);
  EXPECT_EQ(g.node(0).translation, first.translation);
}

TEST(PoseGraph, ChiSquaredNeverIncreases) {
  std::mt19937_64 rng(4);
  const auto truth = circle_truth(80);
  PoseGraph g = chain_from(truth, noisy_relatives(truth, rng, 0.05, 0.5));
  for (int q = 30; q <= 80; q += 10) g.add_loop_edge(q, q - 30, truth[q - 30].inverse() * truth[q], 1.0);
  g.add_loop_edge(80, 0, truth[0].inverse() * truth[80], 1.0);
  const auto r = g.optimize();
  ASSERT_FALSE(r.chi2_trace.empty());
  double prev = r.initial_chi2;
  for (const double c : r.chi2_trace) {
    EXPECT_LE(c, prev);
    prev = c;
  }
  EXPECT_NEAR(r.final_chi2, g.chi2(), 1e-9 * std::max(1.0, r.final_chi2));
}

TEST(PoseGraph, CorrectLoopsReduceAte) {
  std::mt19937_64 rng(5);
  // Square of 4 x 25 m, driven twice.
  std::vector<Pose> truth = {Pose::identity()};
  for (int lap = 0; lap < 2; ++lap) {
    for (int side = 0; side < 4; ++side) {
      for (int k = 0; k < 25; ++k) truth.push_back(truth.back() * Pose(yaw_rotation(k == 24 ? 90.0 : 0.0), Vec3(1, 0, 0)));
    }
  }
  PoseGraph g = chain_from(truth, noisy_relatives(truth, rng, 0.03, 0.4));
  const double ate_before = ate(g.nodes(), truth);
  for (int q = 100; q < static_cast<int>(truth.size()); q += 7) g.add_loop_edge(q, q - 100, truth[q - 100].inverse() * truth[q], 1.0);
  g.optimize();
  EXPECT_LT(ate(g.nodes(), truth), ate_before);
}

TEST(PoseGraph, ZeroResidualLoopEdgeChangesNothing) {
  std::mt19937_64 rng(6);
  const auto truth = circle_truth(50);
  PoseGraph noisy = chain_from(truth, noisy_relatives(truth, rng, 0.05, 0.5));
  noisy.add_loop_edge(50, 0, Pose::identity(), 1.0);
  noisy.optimize();
  const double chi2 = noisy.chi2();
  noisy.add_loop_edge(40, 5, noisy.node(5).inverse() * noisy.node(40), 1.0);
  EXPECT_NEAR(noisy.chi2(), chi2, 1e-12);

  std::vector<Pose> rel;
  for (std::size_t i = 1; i < truth.size(); ++i) rel.push_back(truth[i - 1].inverse() * truth[i]);
  PoseGraph g = chain_from(truth, rel);
  const auto before = g.nodes();
  g.add_loop_edge(45, 3, g.node(3).inverse() * g.node(45), 1.0);
  g.optimize();
  for (std::size_t i = 0; i < before.size(); ++i) {
    EXPECT_LT(test::translation_gap(before[i], g.node(i)), 1e-12);
    EXPECT_LT((before[i].rotation - g.node(i).rotation).norm(), 1e-12);
  }
}

TEST(PoseGraph, RobustLoopsDownweightOutlier) {
  const auto truth = circle_truth(60);
  std::vector<Pose> rel;
  for (std::size_t i = 1; i < truth.size(); ++i) rel.push_back(truth[i - 1].inverse() * truth[i]);
  PoseGraph g = chain_from(truth, rel);
  g.add_loop_edge(60, 0, truth[0].inverse() * truth[60], 1.0);
  g.add_loop_edge(45, 15, Pose(Mat3::Identity(), Vec3(8, 0, 0)) * (truth[15].inverse() * truth[45]), 1.0);
  PoseGraph robust = g;
  g.optimize();
  OptimizerParams params;
  params.robust_loops = true;
  robust.optimize(params);
  EXPECT_LT(ate(robust.nodes(), truth), ate(g.nodes(), truth));
}

TEST(PoseGraph, EdgeResidualAndInformation) {
  const Pose xi = test::planar_pose(1, 2, 30), xj = test::planar_pose(4, -1, 75);
  EXPECT_LT(edge_residual(xi, xj, xi.inverse() * xj).norm(), 1e-12);
  const Vec6 r = edge_residual(Pose::identity(), Pose(yaw_rotation(3.0), Vec3(0.5, 0, 0)), Pose::identity());
  EXPECT_NEAR(r(0), 0.5, 1e-12);
  EXPECT_NEAR(r(5), deg2rad(3.0), 1e-12);
  const Mat6 info = diagonal_information(0.5, 1.0);
  EXPECT_DOUBLE_EQ(info(0, 0), 4.0);
  EXPECT_DOUBLE_EQ(info(3, 3), 1.0 / std::pow(deg2rad(1.0), 2));
  EXPECT_THROW(diagonal_information(0.0, 1.0), std::invalid_argument);
}

TEST(PoseGraph, G2oExport) {
  PoseGraph g = chain_from({Pose::identity()}, std::vector<Pose>(25, Pose(Mat3::Identity(), Vec3(1, 0, 0))));
  g.add_loop_edge(24, 1, Pose(Mat3::Identity(), Vec3(23, 0, 0)), 0.7);
  std::ostringstream os;
  g.write_g2o(os);
  std::istringstream is(os.str());
  std::string line;
  int vertices = 0, edges = 0;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "VERTEX_SE3:QUAT") ++vertices;
    if (tag == "EDGE_SE3:QUAT") {
      ++edges;
      std::vector<double> values;
      double v;
      while (ls >> v) values.push_back(v);
      EXPECT_EQ(values.size(), 2u + 7u + 21u);
    }
  }
  EXPECT_EQ(vertices, 26);
  EXPECT_EQ(edges, 26);
}
