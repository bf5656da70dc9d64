#pragma once

#include "radarloop/geometry.hpp"
#include "radarloop/radar_sim.hpp"

#include <array>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

namespace radarloop {

/// Point with intensity; used for submaps in world-aligned, keyframe-centered
/// coordinates.
struct MapPoint {
  Vec3 position = Vec3::Zero();
  double intensity = 0.0;
};

using PointCloud = std::vector<MapPoint>;

struct VoxelGridParams {
  double resolution = 1.0;  // m
  double radius = 50.0;     // m
  std::size_t capacity = 20;

  bool operator==(const VoxelGridParams&) const = default;
};

/// Robocentric voxel grid. Points are stored in the world frame; voxels whose
/// centers move farther than `radius` from the sensor are dropped.
class VoxelGrid {
 public:
  explicit VoxelGrid(VoxelGridParams params = {});

  /// Transforms sensor-frame points by `sensor_pose`, fills voxels up to
  /// capacity (later points are rejected) and evicts out-of-range voxels.
  void insert_points(const std::vector<RadarPoint>& points, const Pose& sensor_pose);

  /// Drops voxels whose centers are farther than the radius from `position`.
  void evict(const Vec3& position);

  /// All stored points relative to `pose.translation`; axes stay world-aligned.
  /// Ordered by voxel key, then insertion order.
  PointCloud snapshot(const Pose& pose) const;

  std::size_t voxel_count() const { return voxels_.size(); }
  std::size_t point_count() const;
  std::size_t max_voxel_occupancy() const;
  const VoxelGridParams& params() const { return params_; }

 private:
  using Key = std::array<long, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };

  Key key_of(const Vec3& p) const;
  Vec3 center_of(const Key& k) const;

  VoxelGridParams params_;
  std::unordered_map<Key, std::vector<MapPoint>, KeyHash> voxels_;
};

/// Debug export: one `x y z intensity` line per point.
void write_point_cloud(std::ostream& os, const PointCloud& cloud);
void write_point_cloud_file(const std::string& path, const PointCloud& cloud);

}  // namespace radarloop
