#include "radarloop/submap.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace radarloop {

VoxelGrid::VoxelGrid(VoxelGridParams params) : params_(params) {
  if (!(params_.resolution > 0.0) || !(params_.radius > 0.0) || params_.capacity == 0) {
    throw std::invalid_argument("invalid voxel grid parameters");
  }
}

std::size_t VoxelGrid::KeyHash::operator()(const Key& k) const {
  std::size_t h = static_cast<std::size_t>(k[0]) * 73856093u;
  h ^= static_cast<std::size_t>(k[1]) * 19349663u;
  h ^= static_cast<std::size_t>(k[2]) * 83492791u;
  return h;
}

VoxelGrid::Key VoxelGrid::key_of(const Vec3& p) const {
  return {static_cast<long>(std::floor(p.x() / params_.resolution)),
          static_cast<long>(std::floor(p.y() / params_.resolution)),
          static_cast<long>(std::floor(p.z() / params_.resolution))};
}

Vec3 VoxelGrid::center_of(const Key& k) const {
  return (Vec3(static_cast<double>(k[0]), static_cast<double>(k[1]), static_cast<double>(k[2])) +
          Vec3::Constant(0.5)) *
         params_.resolution;
}

void VoxelGrid::insert_points(const std::vector<RadarPoint>& points, const Pose& sensor_pose) {
  const Vec3& origin = sensor_pose.translation;
  for (const auto& p : points) {
    const Vec3 w = sensor_pose * p.position;
    const Key k = key_of(w);
    if ((center_of(k) - origin).norm() > params_.radius) continue;
    auto& cell = voxels_[k];
    if (cell.size() < params_.capacity) cell.push_back({w, p.intensity});
  }
  evict(origin);
}

void VoxelGrid::evict(const Vec3& position) {
  std::erase_if(voxels_, [&](const auto& kv) { return (center_of(kv.first) - position).norm() > params_.radius; });
}

PointCloud VoxelGrid::snapshot(const Pose& pose) const {
  std::vector<const decltype(voxels_)::value_type*> entries;
  entries.reserve(voxels_.size());
  for (const auto& kv : voxels_) entries.push_back(&kv);
  std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) { return a->first < b->first; });
  PointCloud out;
  out.reserve(point_count());
  for (const auto* kv : entries) {
    for (const auto& p : kv->second) out.push_back({p.position - pose.translation, p.intensity});
  }
  return out;
}

std::size_t VoxelGrid::point_count() const {
  std::size_t n = 0;
  for (const auto& kv : voxels_) n += kv.second.size();
  return n;
}

std::size_t VoxelGrid::max_voxel_occupancy() const {
  std::size_t n = 0;
  for (const auto& kv : voxels_) n = std::max(n, kv.second.size());
  return n;
}

void write_point_cloud(std::ostream& os, const PointCloud& cloud) {
  os << std::setprecision(6) << std::fixed;
  for (const auto& p : cloud) {
    os << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << p.intensity << '\n';
  }
}

void write_point_cloud_file(const std::string& path, const PointCloud& cloud) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_point_cloud(os, cloud);
}

}  // namespace radarloop
