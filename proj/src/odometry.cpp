#include "radarloop/odometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <random>
#include <stdexcept>

namespace radarloop {

namespace {

// Ratio of smallest to largest eigenvalue of the normal matrix below which the
// velocity is considered unobservable.
constexpr double kMinConditioning = 1e-6;

Vec3 unit_direction(const RadarPoint& p) {
  const double n = p.position.norm();
  return n > 0.0 ? Vec3(p.position / n) : Vec3::Zero();
}

}  // namespace

std::optional<Vec3> fit_ego_velocity(const std::vector<RadarPoint>& points) {
  if (points.size() < 3) return std::nullopt;
  // doppler_i = -d_i . v
  Mat3 ata = Mat3::Zero();
  Vec3 atb = Vec3::Zero();
  for (const auto& p : points) {
    const Vec3 d = unit_direction(p);
    ata += d * d.transpose();
    atb -= d * p.doppler;
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(ata);
  const Vec3 ev = eig.eigenvalues();
  if (!(ev(2) > 0.0) || ev(0) / ev(2) < kMinConditioning) return std::nullopt;
  return Vec3(ata.ldlt().solve(atb));
}

std::optional<EgoVelocity> estimate_ego_velocity(const RadarScan& scan, const RansacParams& params,
                                                 std::uint64_t seed) {
  if (params.max_iterations < 1 || !(params.inlier_threshold > 0.0)) {
    throw std::invalid_argument("invalid RANSAC parameters");
  }
  const auto& pts = scan.points;
  const std::size_t n = pts.size();
  if (n < 3) return std::nullopt;

  std::vector<Vec3> dirs(n);
  for (std::size_t i = 0; i < n; ++i) dirs[i] = unit_direction(pts[i]);

  auto count_inliers = [&](const Vec3& v, std::vector<std::size_t>* out) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::abs(pts[i].doppler + dirs[i].dot(v)) <= params.inlier_threshold) {
        ++count;
        if (out) out->push_back(i);
      }
    }
    return count;
  };

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t best_count = 0;
  Vec3 best_v = Vec3::Zero();
  for (int it = 0; it < params.max_iterations; ++it) {
    std::size_t a = pick(rng), b = pick(rng), c = pick(rng);
    if (a == b || b == c || a == c) continue;
    Mat3 m;
    m.row(0) = dirs[a].transpose();
    m.row(1) = dirs[b].transpose();
    m.row(2) = dirs[c].transpose();
    const double det = m.determinant();
    if (std::abs(det) < 1e-9) continue;
    const Vec3 v = m.inverse() * Vec3(-pts[a].doppler, -pts[b].doppler, -pts[c].doppler);
    const std::size_t count = count_inliers(v, nullptr);
    if (count > best_count) {
      best_count = count;
      best_v = v;
    }
  }
  if (best_count == 0 || static_cast<double>(best_count) < params.min_inlier_fraction * static_cast<double>(n)) {
    return std::nullopt;
  }

  // Refit on the consensus set, then settle the inlier set once more so that
  // every reported static point satisfies the threshold for the final velocity.
  EgoVelocity out;
  std::vector<std::size_t> inliers;
  count_inliers(best_v, &inliers);
  for (int refine = 0; refine < 2; ++refine) {
    std::vector<RadarPoint> subset;
    subset.reserve(inliers.size());
    for (std::size_t i : inliers) subset.push_back(pts[i]);
    const auto v = fit_ego_velocity(subset);
    if (!v) return std::nullopt;
    out.velocity = *v;
    inliers.clear();
    count_inliers(out.velocity, &inliers);
  }
  if (static_cast<double>(inliers.size()) < params.min_inlier_fraction * static_cast<double>(n)) return std::nullopt;
  out.inlier_indices = inliers;
  out.static_points.reserve(inliers.size());
  for (std::size_t i : inliers) out.static_points.push_back(pts[i]);
  return out;
}

OdometryState integrate(OdometryState state, const Vec3& velocity, const Quat& imu_orientation, double dt) {
  if (!(dt > 0.0)) throw std::invalid_argument("integrate: dt must be positive");
  state.pose.rotation = from_quaternion(imu_orientation);
  state.pose.translation += state.pose.rotation * velocity * dt;
  state.traveled += velocity.norm() * dt;
  return state;
}

bool keyframe_due(const OdometryState& state, double spacing) {
  if (state.keyframe_marks.empty()) return true;
  return state.traveled - state.keyframe_marks.back() >= spacing - 1e-9;
}

}  // namespace radarloop
