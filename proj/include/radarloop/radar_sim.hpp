#pragma once

#include "radarloop/geometry.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace radarloop {

struct RadarPoint {
  Vec3 position = Vec3::Zero();  // sensor frame, m
  double intensity = 0.0;
  double doppler = 0.0;  // radial velocity, m/s
};

struct RadarScan {
  double timestamp = 0.0;
  std::vector<RadarPoint> points;
  Quat imu_orientation = Quat::Identity();  // world-from-sensor estimate
  // Filled by the simulator only: 1 where the return came from a moving object.
  std::vector<std::uint8_t> dynamic_mask;
};

// ---------------------------------------------------------------------------
// Scene primitives. All are finite; reflectivity is unitless and >= 0.

/// Vertical rectangle spanning the segment a-b between z_min and z_max.
struct Wall {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  double z_min = 0.0;
  double z_max = 3.0;
  double reflectivity = 100.0;
};

/// Vertical cylinder (tree trunk, pole, pillar).
struct Cylinder {
  Vec2 center = Vec2::Zero();
  double radius = 0.3;
  double z_min = 0.0;
  double z_max = 5.0;
  double reflectivity = 100.0;
};

/// Horizontal rectangle at height z (ceilings, overhangs).
struct Slab {
  Vec2 min = Vec2::Zero();
  Vec2 max = Vec2::Zero();
  double z = 4.0;
  double reflectivity = 100.0;
};

/// Cylinder shuttling back and forth between two points at constant speed.
struct DynamicObject {
  Cylinder shape;
  Vec2 start = Vec2::Zero();
  Vec2 end = Vec2::Zero();
  double speed = 1.0;  // m/s

  Vec2 position_at(double t) const;
  Vec2 velocity_at(double t) const;
};

struct Scene {
  std::string name;
  double ground_z = 0.0;
  double ground_reflectivity = 300.0;
  std::vector<Wall> walls;
  std::vector<Cylinder> cylinders;
  std::vector<Slab> slabs;
  std::vector<DynamicObject> dynamic_objects;

  /// Adds the four side walls of an axis-aligned box footprint.
  void add_box(const Vec2& min, const Vec2& max, double height, double reflectivity);
  void validate() const;
};

struct RadarConfig {
  double fov_azimuth_deg = 80.0;
  double fov_elevation_deg = 30.0;
  double max_range = 42.0;
  double range_noise = 0.05;       // m
  double angular_noise_deg = 0.3;  // deg
  double doppler_noise = 0.03;     // m/s
  double intensity_noise = 1.0;
  int azimuth_rays = 48;
  int elevation_rays = 12;
  double detection_probability = 0.75;
  double min_intensity = 1.0;     // weaker returns are not detected
  double reference_range = 10.0;  // m, intensity = reflectivity * cos(inc) at this range
  double sensor_height = 1.0;     // m above ground, used by presets

  int rays_per_scan() const { return azimuth_rays * elevation_rays; }

  static RadarConfig short_range();
  static RadarConfig long_range();
  static RadarConfig noiseless(RadarConfig base);
};

struct ImuConfig {
  double yaw_drift_deg_per_min = 0.5;
  double noise_deg = 0.05;
};

struct TrajectorySample {
  double timestamp = 0.0;
  Pose pose;                    // world-from-sensor
  Vec3 velocity = Vec3::Zero();  // world frame, m/s
};

struct TrajectoryOptions {
  double turn_radius = 4.0;         // corner blending radius, m
  double spin_rate_deg = 30.0;      // in-place rotation rate at reversals, deg/s
  double reversal_angle_deg = 150.0;  // corners sharper than this spin in place
};

/// Constant-speed path through `waypoints`, sampled at `scan_rate` Hz. Corners
/// are blended with circular arcs; near-reversals rotate in place. Heading
/// follows the direction of travel and the sensor is kept level.
std::vector<TrajectorySample> generate_trajectory(std::span<const Vec3> waypoints, double speed, double scan_rate,
                                                  const TrajectoryOptions& options = {});

/// Ray-casts one scan. `velocity` is the sensor velocity in the world frame.
RadarScan render_scan(const Scene& scene, const Pose& pose, const Vec3& velocity, double timestamp,
                      const RadarConfig& config, std::uint64_t seed);

/// IMU orientation estimate: yaw offset growing at `drift_deg_per_min` plus
/// white noise of `noise_deg` per axis.
Quat simulate_imu(const Pose& true_pose, double timestamp, double drift_deg_per_min, double noise_deg,
                  std::uint64_t seed);

struct SimulatedSequence {
  std::vector<RadarScan> scans;
  Trajectory ground_truth;
};

/// Renders every trajectory sample; scan i uses a seed derived from (seed, i).
SimulatedSequence simulate_sequence(const Scene& scene, std::span<const TrajectorySample> trajectory,
                                    const RadarConfig& radar, const ImuConfig& imu, std::uint64_t seed);

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// ---------------------------------------------------------------------------
// Presets

struct SimulationSetup {
  Scene scene;
  std::vector<Vec3> waypoints;
  double speed = 1.5;
  double scan_rate = 10.0;
  RadarConfig radar;
  ImuConfig imu;
  int sequence_length = 6;  // retrieval window suited to the environment
};

enum class RadarProfile { ShortRange, LongRange };

RadarProfile radar_profile_from_string(const std::string& name);

/// `corridor_with_side_tunnels`, `campus_loop` or `forest_loop`.
SimulationSetup make_preset(const std::string& name, RadarProfile profile = RadarProfile::ShortRange);
std::vector<std::string> preset_names();

}  // namespace radarloop
