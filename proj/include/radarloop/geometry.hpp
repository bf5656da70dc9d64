#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <iosfwd>
#include <string>
#include <vector>

namespace radarloop {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Rigid transform in SE(3). Applied to a point as R * p + t.
struct Pose {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  Pose() = default;
  Pose(const Mat3& r, const Vec3& t) : rotation(r), translation(t) {}

  static Pose identity() { return {}; }

  Vec3 operator*(const Vec3& p) const { return rotation * p + translation; }
  Pose operator*(const Pose& other) const;

  Pose inverse() const;

  /// Heading angle in degrees, measured about world z.
  double yaw_deg() const;
};

Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Rotation about the vertical axis by `angle_deg`.
Mat3 yaw_rotation(double angle_deg);

/// Angle in degrees of Ra^-1 * Rb * delta. The trace argument is clamped to
/// [-1, 1] so identical rotations give exactly 0 rather than NaN.
double geodesic_angle(const Mat3& ra, const Mat3& rb, const Mat3& delta);

/// Rotation angle of R in degrees, in [0, 180].
double rotation_angle_deg(const Mat3& r);

enum class ViewpointMode { Similar, Opposing };

/// yaw(0) for similar viewpoints, yaw(180) for opposing.
Mat3 expected_rotation(ViewpointMode mode);
const char* to_string(ViewpointMode mode);
ViewpointMode viewpoint_from_string(const std::string& s);

Mat3 skew(const Vec3& v);
Mat3 so3_exp(const Vec3& phi);
Vec3 so3_log(const Mat3& r);

/// Projects a near-rotation onto SO(3).
Mat3 orthonormalize(const Mat3& r);

Quat to_quaternion(const Mat3& r);
Mat3 from_quaternion(const Quat& q);

struct StampedPose {
  double timestamp = 0.0;
  Pose pose;
};

using Trajectory = std::vector<StampedPose>;

// TUM format: `timestamp tx ty tz qx qy qz qw`, one pose per line.
void write_tum(std::ostream& os, const Trajectory& traj);
Trajectory read_tum(std::istream& is);
void write_tum_file(const std::string& path, const Trajectory& traj);
Trajectory read_tum_file(const std::string& path);

}  // namespace radarloop
