#pragma once

#include "radarloop/geometry.hpp"
#include "radarloop/radar_sim.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace radarloop {

struct RansacParams {
  int max_iterations = 100;
  double inlier_threshold = 0.2;  // m/s
  double min_inlier_fraction = 0.3;

  bool operator==(const RansacParams&) const = default;
};

struct EgoVelocity {
  Vec3 velocity = Vec3::Zero();  // sensor frame, m/s
  std::vector<RadarPoint> static_points;
  std::vector<std::size_t> inlier_indices;
};

/// Three-point RANSAC on Doppler velocities followed by a least-squares refit
/// on the inliers. Returns nullopt when too few points agree or the geometry
/// of the inliers does not constrain all three velocity components.
std::optional<EgoVelocity> estimate_ego_velocity(const RadarScan& scan, const RansacParams& params,
                                                 std::uint64_t seed);

/// Least-squares velocity from all given points (no outlier rejection).
std::optional<Vec3> fit_ego_velocity(const std::vector<RadarPoint>& points);

struct OdometryState {
  Pose pose;
  double traveled = 0.0;              // m, cumulative
  std::vector<double> keyframe_marks;  // traveled distance at each keyframe
};

/// Rotation from the IMU, translation by integrating the sensor-frame velocity.
OdometryState integrate(OdometryState state, const Vec3& velocity, const Quat& imu_orientation, double dt);

bool keyframe_due(const OdometryState& state, double spacing);

}  // namespace radarloop
