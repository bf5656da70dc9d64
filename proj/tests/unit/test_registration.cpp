#include "radarloop/registration.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>
#include <random>

using namespace radarloop;

namespace {

struct Location {
  std::string preset;
  std::size_t index;
};

// Sample locations on the structured presets, away from the trajectory start.
const std::vector<Location>& structured_locations() {
  static const std::vector<Location> locations = {
      {"campus_loop", 400},  {"campus_loop", 1800}, {"campus_loop", 3900}, {"campus_loop", 5300},
      {"corridor_with_side_tunnels", 400}, {"corridor_with_side_tunnels", 1800},
      {"corridor_with_side_tunnels", 3200}, {"corridor_with_side_tunnels", 4600}};
  return locations;
}

struct Scenario {
  SimulationSetup setup;
  std::vector<TrajectorySample> traj;
};

const Scenario& scenario(const std::string& preset) {
  static std::map<std::string, Scenario> cache;
  auto it = cache.find(preset);
  if (it == cache.end()) {
    Scenario s{make_preset(preset), {}};
    s.traj = generate_trajectory(s.setup.waypoints, s.setup.speed, s.setup.scan_rate);
    it = cache.emplace(preset, std::move(s)).first;
  }
  return it->second;
}

PointCloud submap_at(const Location& loc, std::uint64_t seed) {
  const Scenario& s = scenario(loc.preset);
  return test::simulated_submap(s.setup.scene, s.traj, loc.index, s.setup.radar, seed);
}

}  // namespace

TEST(BuildDistributions, CoplanarPointsGiveNormalToPlane) {
  PointCloud cloud;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.9);
  const Vec3 n = Vec3(1, 2, 3).normalized();
  const Vec3 a = n.unitOrthogonal();
  const Vec3 b = n.cross(a);
  for (int i = 0; i < 10; ++i) cloud.push_back({Vec3(1, 1, 1) + (u(rng) - 1.0) * 0.5 * a + (u(rng) - 1.0) * 0.5 * b, 1.0});
  const DistributionMap map = build_distributions(cloud, 2.0, 5);
  ASSERT_EQ(map.size(), 1u);
  EXPECT_LT(1.0 - std::abs(map.cells[0].normal.dot(n)), 1e-6);
  EXPECT_EQ(map.cells[0].count, 10);
}

TEST(BuildDistributions, MinPointsThreshold) {
  const PointCloud four = {{Vec3(0.1, 0.1, 0.1), 1}, {Vec3(0.2, 0.1, 0.1), 1}, {Vec3(0.1, 0.3, 0.1), 1},
                           {Vec3(0.1, 0.1, 0.5), 1}};
  EXPECT_TRUE(build_distributions(four, 2.0, 5).empty());
  EXPECT_EQ(build_distributions(four, 2.0, 4).size(), 1u);
  EXPECT_TRUE(build_distributions({}, 2.0, 5).empty());
  EXPECT_THROW(build_distributions(four, 0.0, 5), std::invalid_argument);
}

TEST(BuildDistributions, CovarianceRegularizedAndWhitened) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-6.0, 6.0);
  PointCloud cloud;
  for (int i = 0; i < 3000; ++i) cloud.push_back({Vec3(u(rng), u(rng), 0.0), 1.0});
  const DistributionMap map = build_distributions(cloud, 2.0, 5, 1e-4);
  ASSERT_FALSE(map.empty());
  for (const auto& d : map.cells) {
    EXPECT_GE(d.count, 5);
    EXPECT_LT((d.covariance - d.covariance.transpose()).norm(), 1e-15);
    const Eigen::SelfAdjointEigenSolver<Mat3> eig(d.covariance);
    EXPECT_GE(eig.eigenvalues().minCoeff(), 1e-4 * (1.0 - 1e-9));
    const Mat3 info = d.sqrt_information.transpose() * d.sqrt_information;
    EXPECT_LT((info * d.covariance - Mat3::Identity()).norm(), 1e-6);
    EXPECT_LT(1.0 - std::abs(d.normal.z()), 1e-9);
  }
}

TEST(BuildDistributions, SimulatedWallCellsLieOnWall) {
  Scene scene;
  scene.ground_reflectivity = 0.0;
  scene.walls.push_back({Vec2(10, -8), Vec2(10, 8), 0.0, 4.0, 150.0});
  const RadarScan scan = render_scan(scene, test::planar_pose(0, 0, 0, 1.0), Vec3::Zero(), 0.0, RadarConfig{}, 4);
  PointCloud cloud;
  for (const auto& p : scan.points) cloud.push_back({p.position + Vec3(0, 0, 1.0), p.intensity});
  const DistributionMap map = build_distributions(cloud, 2.0, 5);
  ASSERT_GE(map.size(), 5u);
  for (const auto& d : map.cells) {
    EXPECT_NEAR(d.mean.x(), 10.0, 0.1);
    // Sparse cells can be nearly collinear; only well populated ones fix the plane.
    if (d.count >= 10) EXPECT_GT(std::abs(d.normal.x()), std::cos(deg2rad(10.0)));
  }
}

TEST(InitialGuess, Examples) {
  const Pose p = test::planar_pose(4, 5, 30);
  const Pose sv = initial_guess(p, p, ViewpointMode::Similar);
  EXPECT_LT((sv.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_EQ(sv.translation, Vec3::Zero());
  const Pose ov = initial_guess(p, p, ViewpointMode::Opposing);
  EXPECT_LT((ov.rotation - yaw_rotation(180.0)).norm(), 1e-12);
  const Pose shifted = initial_guess(test::planar_pose(7, 5, 30), p, ViewpointMode::Similar);
  EXPECT_LT((shifted.rotation - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT((shifted.translation - Vec3(3, 0, 0)).norm(), 1e-12);
}

TEST(LoopConstraint, RecoversRelativePoseUnderOdometryDrift) {
  // Ground-truth poses P and drifted odometry poses O. The exact alignment of
  // the world-aligned submaps built from O maps to P_c^-1 P_q.
  std::mt19937_64 rng(3);
  for (int k = 0; k < 20; ++k) {
    const Pose pq = test::random_pose(rng), pc = test::random_pose(rng);
    const Pose oq = test::random_pose(rng), oc = test::random_pose(rng);
    const Mat3 m = oc.rotation * pc.rotation.transpose();
    const Pose alignment(m * pq.rotation * oq.rotation.transpose(), m * (pq.translation - pc.translation));
    const Pose expected = pc.inverse() * pq;
    const Pose got = loop_constraint(oq, oc, alignment);
    EXPECT_LT(test::translation_gap(got, expected), 1e-9);
    EXPECT_LT((got.rotation - expected.rotation).norm(), 1e-12);
  }
}

TEST(Align, SelfRegistrationFromIdentity) {
  const DistributionMap map = build_distributions(submap_at(structured_locations()[0], 1), 2.0);
  const auto r = align(map, map, Pose::identity());
  ASSERT_TRUE(r.has_value());
  EXPECT_LT(r->pose.translation.norm(), 1e-9);
  EXPECT_LT(rotation_angle_deg(r->pose.rotation), 1e-7);
  EXPECT_LT(r->quality.C_f, 1e-12);
  EXPECT_EQ(r->quality.C_o, static_cast<double>(map.size()));
  EXPECT_EQ(r->quality.C_a, static_cast<double>(map.size()));
}

TEST(Align, SelfRegistrationFromPerturbation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dir(-M_PI, M_PI);
  std::uniform_real_distribution<double> mag(0.0, 1.0);
  for (const auto& loc : structured_locations()) {
    const DistributionMap map = build_distributions(submap_at(loc, 1), 2.0);
    for (int k = 0; k < 3; ++k) {
      const double a = dir(rng), t = mag(rng), yaw = 5.0 * (2.0 * mag(rng) - 1.0);
      const auto r = align(map, map, test::planar_pose(t * std::cos(a), t * std::sin(a), yaw));
      ASSERT_TRUE(r.has_value()) << loc.preset << " " << loc.index;
      EXPECT_LT(r->pose.translation.norm(), 0.05) << loc.preset << " " << loc.index;
      EXPECT_LT(rotation_angle_deg(r->pose.rotation), 0.2) << loc.preset << " " << loc.index;
    }
  }
}

TEST(Align, RecoversKnownPerturbationOnStructuredScenes) {
  // Independent scans of the same place, the query expressed in a frame
  // displaced by 2 m and 10 deg.
  const Pose T = test::planar_pose(2.0 * std::cos(0.7), 2.0 * std::sin(0.7), 10.0);
  for (const auto& loc : structured_locations()) {
    const DistributionMap candidate = build_distributions(submap_at(loc, 1), 2.0);
    const PointCloud query = test::transformed(submap_at(loc, 2), T.inverse());
    const auto r = align(query, candidate, Pose::identity());
    ASSERT_TRUE(r.has_value()) << loc.preset << " " << loc.index;
    EXPECT_LT(test::translation_gap(r->pose, T), 0.1) << loc.preset << " " << loc.index;
    EXPECT_LT(test::rotation_gap_deg(r->pose, T), 0.5) << loc.preset << " " << loc.index;
    for (const auto& [before, after] : r->accepted_steps) EXPECT_LE(after, before);
    EXPECT_GE(r->quality.C_f, 0.0);
    EXPECT_LE(r->quality.C_o, 2.0 * r->quality.C_a);
  }
}

TEST(Align, CorrectAlignmentCostsLessThanForcedShift) {
  RegistrationParams frozen;
  frozen.max_iterations = 0;
  int separated = 0;
  for (const auto& loc : structured_locations()) {
    const DistributionMap candidate = build_distributions(submap_at(loc, 1), 2.0);
    const DistributionMap query = build_distributions(submap_at(loc, 2), 2.0);
    const auto good = align(query, candidate, Pose::identity());
    const auto bad = align(query, candidate, test::planar_pose(5.0, 0.0, 0.0), frozen);
    ASSERT_TRUE(good.has_value());
    if (!bad || good->quality.C_f < bad->quality.C_f) ++separated;
  }
  EXPECT_GE(separated, static_cast<int>(std::ceil(0.9 * structured_locations().size())));
}

TEST(Align, CorridorWrongWallConvergesFarFromTruth) {
  // Opposing traversals of the same corridor section, initialized 6 m along
  // the corridor: the evenly spaced side tunnels hold the alignment on the
  // wrong repetition with a cost close to that of the correct alignment.
  const Scenario& s = scenario("corridor_with_side_tunnels");
  std::size_t ic = 0, iq = 0;
  for (std::size_t i = 0; i < s.traj.size(); ++i) {
    const Pose& p = s.traj[i].pose;
    if (std::abs(p.translation.y()) > 0.5 || std::abs(p.translation.x() - 50.0) > 0.1) continue;
    if (std::abs(p.yaw_deg()) < 10.0 && ic == 0) ic = i;
    if (std::abs(p.yaw_deg()) > 170.0 && iq == 0) iq = i;
  }
  ASSERT_GT(ic, 0u);
  ASSERT_GT(iq, ic);
  const auto& sc = s.setup;
  const DistributionMap candidate =
      build_distributions(test::simulated_submap(sc.scene, s.traj, ic, sc.radar, 1), 2.0);
  const DistributionMap query = build_distributions(test::simulated_submap(sc.scene, s.traj, iq, sc.radar, 2), 2.0);
  const Pose truth(Mat3::Identity(), s.traj[iq].pose.translation - s.traj[ic].pose.translation);
  const auto good = align(query, candidate, truth);
  ASSERT_TRUE(good.has_value());
  EXPECT_LT(test::translation_gap(good->pose, truth), 1.0);
  Pose wrong = truth;
  wrong.translation.x() -= 6.0;
  const auto r = align(query, candidate, wrong);
  ASSERT_TRUE(r.has_value());
  EXPECT_GT(test::translation_gap(r->pose, truth), 4.0);
  EXPECT_LT(r->quality.C_f, 1.5 * good->quality.C_f);
}

TEST(Align, FailsWithoutEnoughCorrespondences) {
  const DistributionMap map = build_distributions(submap_at(structured_locations()[0], 1), 2.0);
  EXPECT_FALSE(align(map, map, test::planar_pose(500, 0, 0)).has_value());
  EXPECT_FALSE(align(DistributionMap{}, map, Pose::identity()).has_value());
  EXPECT_FALSE(align(map, DistributionMap{}, Pose::identity()).has_value());
}

TEST(Align, ReportsFailureWhenRotationLeavesBasin) {
  const DistributionMap map = build_distributions(submap_at(structured_locations()[0], 1), 2.0);
  RegistrationParams params;
  params.max_rotation_change_deg = 1.0;
  EXPECT_FALSE(align(map, map, test::planar_pose(0, 0, 4.0), params).has_value());
  EXPECT_TRUE(align(map, map, test::planar_pose(0, 0, 0.5), params).has_value());
}

TEST(Align, CoarseStageExtendsBasin) {
  const Location loc = structured_locations()[1];
  const PointCloud cand_cloud = submap_at(loc, 1), query_cloud = submap_at(loc, 2);
  RegistrationParams params;
  const auto fine_c = build_distributions(cand_cloud, params.cell_size);
  const auto fine_q = build_distributions(query_cloud, params.cell_size);
  const auto coarse_c = build_distributions(cand_cloud, params.coarse_cell_size);
  const auto coarse_q = build_distributions(query_cloud, params.coarse_cell_size);
  int fine_ok = 0, coarse_ok = 0;
  for (const double offset : {-7.0, -6.0, 6.0, 7.0}) {
    const Pose init = test::planar_pose(offset, 0.0, 0.0);
    const auto f = align(fine_q, fine_c, init, params);
    const auto c = align_coarse_to_fine(fine_q, fine_c, coarse_q, coarse_c, init, params);
    fine_ok += f && f->pose.translation.norm() < 0.5;
    coarse_ok += c && c->pose.translation.norm() < 0.5;
  }
  EXPECT_GT(coarse_ok, fine_ok);
  params.coarse_cell_size = 0.0;
  const auto same = align_coarse_to_fine(fine_q, fine_c, coarse_q, coarse_c, test::planar_pose(1, 0, 0), params);
  const auto plain = align(fine_q, fine_c, test::planar_pose(1, 0, 0), params);
  ASSERT_TRUE(same && plain);
  EXPECT_EQ(same->pose.translation, plain->pose.translation);
}
