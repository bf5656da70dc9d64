#include "radarloop/geometry.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace radarloop {

Pose Pose::operator*(const Pose& other) const {
  return {rotation * other.rotation, rotation * other.translation + translation};
}

Pose Pose::inverse() const {
  const Mat3 rt = rotation.transpose();
  return {rt, -(rt * translation)};
}

double Pose::yaw_deg() const { return rad2deg(std::atan2(rotation(1, 0), rotation(0, 0))); }

Pose compose(const Pose& a, const Pose& b) { return a * b; }

Pose inverse(const Pose& p) { return p.inverse(); }

Mat3 yaw_rotation(double angle_deg) {
  // Reduce first so that 360 deg maps onto identity to within rounding of the
  // reduced angle, not of a large multiple of pi.
  const double reduced = std::remainder(angle_deg, 360.0);
  const double a = deg2rad(reduced);
  const double c = std::cos(a);
  const double s = std::sin(a);
  Mat3 r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  if (reduced == 180.0 || reduced == -180.0) {
    r << -1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 1.0;
  }
  return r;
}

double geodesic_angle(const Mat3& ra, const Mat3& rb, const Mat3& delta) {
  const Mat3 m = ra.transpose() * rb * delta;
  const double arg = std::clamp(0.5 * (m.trace() - 1.0), -1.0, 1.0);
  return rad2deg(std::acos(arg));
}

double rotation_angle_deg(const Mat3& r) { return geodesic_angle(Mat3::Identity(), r, Mat3::Identity()); }

Mat3 expected_rotation(ViewpointMode mode) {
  return mode == ViewpointMode::Similar ? yaw_rotation(0.0) : yaw_rotation(180.0);
}

const char* to_string(ViewpointMode mode) { return mode == ViewpointMode::Similar ? "sv" : "ov"; }

ViewpointMode viewpoint_from_string(const std::string& s) {
  if (s == "sv") return ViewpointMode::Similar;
  if (s == "ov") return ViewpointMode::Opposing;
  throw std::invalid_argument("unknown viewpoint mode '" + s + "'");
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Mat3 so3_exp(const Vec3& phi) {
  const double theta = phi.norm();
  if (theta < 1e-10) return Mat3::Identity() + skew(phi);
  return Eigen::AngleAxisd(theta, phi / theta).toRotationMatrix();
}

Vec3 so3_log(const Mat3& r) {
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::acos(cos_theta);
  const Vec3 w(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  if (theta < 1e-7) return 0.5 * w;
  if (kPi - theta < 1e-6) {
    const Eigen::AngleAxisd aa(r);
    return aa.angle() * aa.axis();
  }
  return theta / (2.0 * std::sin(theta)) * w;
}

Mat3 orthonormalize(const Mat3& r) {
  Eigen::JacobiSVD<Mat3> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 out = svd.matrixU() * svd.matrixV().transpose();
  if (out.determinant() < 0.0) {
    Mat3 u = svd.matrixU();
    u.col(2) *= -1.0;
    out = u * svd.matrixV().transpose();
  }
  return out;
}

Quat to_quaternion(const Mat3& r) {
  Quat q(r);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() *= -1.0;
  return q;
}

Mat3 from_quaternion(const Quat& q) { return q.normalized().toRotationMatrix(); }

void write_tum(std::ostream& os, const Trajectory& traj) {
  for (const auto& sp : traj) {
    const Quat q = to_quaternion(sp.pose.rotation);
    const Vec3& t = sp.pose.translation;
    os << std::setprecision(9) << std::fixed << sp.timestamp << ' ' << std::setprecision(9) << t.x() << ' ' << t.y()
       << ' ' << t.z() << ' ' << std::setprecision(12) << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w()
       << '\n';
  }
}

Trajectory read_tum(std::istream& is) {
  Trajectory traj;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    double ts, tx, ty, tz, qx, qy, qz, qw;
    if (!(ss >> ts >> tx >> ty >> tz >> qx >> qy >> qz >> qw)) {
      throw std::runtime_error("malformed TUM line " + std::to_string(line_no));
    }
    traj.push_back({ts, Pose(from_quaternion(Quat(qw, qx, qy, qz)), Vec3(tx, ty, tz))});
  }
  return traj;
}

void write_tum_file(const std::string& path, const Trajectory& traj) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_tum(os, traj);
}

Trajectory read_tum_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_tum(is);
}

}  // namespace radarloop
