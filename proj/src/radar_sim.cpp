#include "radarloop/radar_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>

namespace radarloop {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 over the combined value
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Vec2 DynamicObject::position_at(double t) const {
  const Vec2 span = end - start;
  const double length = span.norm();
  if (length < 1e-9 || speed <= 0.0) return start;
  const double travel = std::fmod(std::max(t, 0.0) * speed, 2.0 * length);
  const Vec2 dir = span / length;
  return travel <= length ? Vec2(start + dir * travel) : Vec2(end - dir * (travel - length));
}

Vec2 DynamicObject::velocity_at(double t) const {
  const Vec2 span = end - start;
  const double length = span.norm();
  if (length < 1e-9 || speed <= 0.0) return Vec2::Zero();
  const double travel = std::fmod(std::max(t, 0.0) * speed, 2.0 * length);
  const Vec2 dir = span / length;
  return travel <= length ? Vec2(dir * speed) : Vec2(-dir * speed);
}

void Scene::add_box(const Vec2& min, const Vec2& max, double height, double reflectivity) {
  const Vec2 c1(max.x(), min.y());
  const Vec2 c3(min.x(), max.y());
  walls.push_back({min, c1, ground_z, ground_z + height, reflectivity});
  walls.push_back({c1, max, ground_z, ground_z + height, reflectivity});
  walls.push_back({max, c3, ground_z, ground_z + height, reflectivity});
  walls.push_back({c3, min, ground_z, ground_z + height, reflectivity});
}

void Scene::validate() const {
  auto finite2 = [](const Vec2& v) { return std::isfinite(v.x()) && std::isfinite(v.y()); };
  if (ground_reflectivity < 0.0) throw std::invalid_argument("scene: negative ground reflectivity");
  for (const auto& w : walls) {
    if (!finite2(w.a) || !finite2(w.b) || !(w.z_max > w.z_min) || w.reflectivity < 0.0)
      throw std::invalid_argument("scene: invalid wall");
  }
  for (const auto& c : cylinders) {
    if (!finite2(c.center) || !(c.radius > 0.0) || !(c.z_max > c.z_min) || c.reflectivity < 0.0)
      throw std::invalid_argument("scene: invalid cylinder");
  }
  for (const auto& s : slabs) {
    if (!finite2(s.min) || !finite2(s.max) || s.reflectivity < 0.0) throw std::invalid_argument("scene: invalid slab");
  }
  for (const auto& d : dynamic_objects) {
    if (!(d.shape.radius > 0.0) || d.speed < 0.0) throw std::invalid_argument("scene: invalid dynamic object");
  }
}

RadarConfig RadarConfig::short_range() { return RadarConfig{}; }

RadarConfig RadarConfig::long_range() {
  RadarConfig c;
  c.max_range = 78.0;
  // longer range at the cost of range resolution
  c.range_noise = 0.12;
  c.reference_range = 14.0;
  return c;
}

RadarConfig RadarConfig::noiseless(RadarConfig base) {
  base.range_noise = 0.0;
  base.angular_noise_deg = 0.0;
  base.doppler_noise = 0.0;
  base.intensity_noise = 0.0;
  return base;
}

// ---------------------------------------------------------------------------
// Trajectory generation

namespace {

struct PathPiece {
  enum class Kind { Line, Arc, Spin } kind = Kind::Line;
  double duration = 0.0;
  Vec3 p0 = Vec3::Zero();
  Vec3 p1 = Vec3::Zero();
  // arc
  Vec2 center = Vec2::Zero();
  double radius = 0.0;
  double angle0 = 0.0;  // rad, polar angle of the start point about center
  double turn_sign = 1.0;
  // spin
  double yaw0 = 0.0;  // rad
  double yaw_delta = 0.0;
};

double heading_of(const Vec3& d) { return std::atan2(d.y(), d.x()); }

TrajectorySample sample_piece(const PathPiece& piece, double tau, double speed) {
  TrajectorySample s;
  switch (piece.kind) {
    case PathPiece::Kind::Line: {
      const double f = piece.duration > 0.0 ? tau / piece.duration : 0.0;
      const Vec3 delta = piece.p1 - piece.p0;
      s.pose.translation = piece.p0 + f * delta;
      s.pose.rotation = yaw_rotation(rad2deg(heading_of(delta)));
      s.velocity = delta / piece.duration;
      break;
    }
    case PathPiece::Kind::Arc: {
      const double phi = piece.angle0 + piece.turn_sign * speed * tau / piece.radius;
      s.pose.translation =
          Vec3(piece.center.x() + piece.radius * std::cos(phi), piece.center.y() + piece.radius * std::sin(phi),
               piece.p0.z());
      const double heading = phi + piece.turn_sign * 0.5 * kPi;
      s.pose.rotation = yaw_rotation(rad2deg(heading));
      s.velocity = speed * Vec3(std::cos(heading), std::sin(heading), 0.0);
      break;
    }
    case PathPiece::Kind::Spin: {
      const double f = piece.duration > 0.0 ? tau / piece.duration : 0.0;
      s.pose.translation = piece.p0;
      s.pose.rotation = yaw_rotation(rad2deg(piece.yaw0 + f * piece.yaw_delta));
      s.velocity = Vec3::Zero();
      break;
    }
  }
  return s;
}

}  // namespace

std::vector<TrajectorySample> generate_trajectory(std::span<const Vec3> waypoints, double speed, double scan_rate,
                                                  const TrajectoryOptions& options) {
  if (waypoints.size() < 2) throw std::invalid_argument("generate_trajectory: need at least 2 waypoints");
  if (!(speed > 0.0) || !(scan_rate > 0.0)) throw std::invalid_argument("generate_trajectory: speed and rate must be > 0");
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    const Vec3 d = waypoints[i] - waypoints[i - 1];
    if (d.head<2>().norm() < 1e-9) throw std::invalid_argument("generate_trajectory: coincident consecutive waypoints");
  }

  const std::size_t n = waypoints.size();
  // Per-corner geometry: tangent offset and piece to insert.
  std::vector<double> trim(n, 0.0);
  std::vector<std::optional<PathPiece>> corner(n);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const Vec3 in = waypoints[i] - waypoints[i - 1];
    const Vec3 out = waypoints[i + 1] - waypoints[i];
    const Vec2 din = in.head<2>().normalized();
    const Vec2 dout = out.head<2>().normalized();
    const double cross = din.x() * dout.y() - din.y() * dout.x();
    const double turn = std::atan2(cross, din.dot(dout));  // signed, rad
    if (std::abs(turn) < 1e-9) continue;
    if (std::abs(rad2deg(turn)) > options.reversal_angle_deg) {
      PathPiece spin;
      spin.kind = PathPiece::Kind::Spin;
      spin.p0 = waypoints[i];
      spin.yaw0 = heading_of(in);
      // an exact reversal turns counter-clockwise
      spin.yaw_delta = std::abs(std::abs(turn) - kPi) < 1e-9 ? kPi : turn;
      spin.duration = rad2deg(std::abs(spin.yaw_delta)) / options.spin_rate_deg;
      corner[i] = spin;
      continue;
    }
    const double half_tan = std::tan(0.5 * std::abs(turn));
    const double max_trim = 0.45 * std::min(in.head<2>().norm(), out.head<2>().norm());
    const double radius = std::min(options.turn_radius, max_trim / half_tan);
    const double offset = radius * half_tan;
    trim[i] = offset;
    PathPiece arc;
    arc.kind = PathPiece::Kind::Arc;
    arc.radius = radius;
    arc.turn_sign = turn > 0.0 ? 1.0 : -1.0;
    const Vec2 start = waypoints[i].head<2>() - din * offset;
    const Vec2 normal = arc.turn_sign * Vec2(-din.y(), din.x());
    arc.center = start + normal * radius;
    const Vec2 rel = start - arc.center;
    arc.angle0 = std::atan2(rel.y(), rel.x());
    arc.p0 = Vec3(start.x(), start.y(), waypoints[i].z());
    arc.duration = radius * std::abs(turn) / speed;
    corner[i] = arc;
  }

  std::vector<PathPiece> pieces;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Vec3 d = waypoints[i + 1] - waypoints[i];
    const Vec3 dir = d / d.head<2>().norm();
    PathPiece line;
    line.kind = PathPiece::Kind::Line;
    line.p0 = waypoints[i] + dir * trim[i];
    line.p1 = waypoints[i + 1] - dir * trim[i + 1];
    line.duration = (line.p1 - line.p0).norm() / speed;
    if (line.duration > 0.0) pieces.push_back(line);
    if (corner[i + 1]) pieces.push_back(*corner[i + 1]);
  }

  double total = 0.0;
  for (const auto& p : pieces) total += p.duration;

  std::vector<TrajectorySample> samples;
  const auto count = static_cast<std::size_t>(std::ceil(total * scan_rate - 1e-9));
  samples.reserve(count);
  std::size_t piece = 0;
  double piece_start = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) / scan_rate;
    while (piece + 1 < pieces.size() && t >= piece_start + pieces[piece].duration) {
      piece_start += pieces[piece].duration;
      ++piece;
    }
    TrajectorySample s = sample_piece(pieces[piece], t - piece_start, speed);
    s.timestamp = t;
    samples.push_back(s);
  }
  return samples;
}

// ---------------------------------------------------------------------------
// Ray casting

namespace {

struct Hit {
  double range = std::numeric_limits<double>::infinity();
  double cos_incidence = 0.0;
  double reflectivity = 0.0;
  Vec3 object_velocity = Vec3::Zero();
  bool dynamic = false;
};

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double f = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + f * ab)).norm();
}

// True if segment a-b intersects the horizontal wedge of half angle `half`
// around `heading` with apex o.
bool segment_in_wedge(const Vec2& o, double heading, double half, const Vec2& a, const Vec2& b) {
  if (half >= kPi) return true;
  const Vec2 fwd(std::cos(heading), std::sin(heading));
  auto local_angle = [&](const Vec2& p) {
    const Vec2 r = p - o;
    return std::atan2(fwd.x() * r.y() - fwd.y() * r.x(), fwd.dot(r));
  };
  const double ta = local_angle(a);
  const double tb = local_angle(b);
  if (std::abs(ta) <= half || std::abs(tb) <= half) return true;
  // Both endpoints outside; the segment may still sweep across the wedge.
  for (const double side : {half, -half}) {
    const Vec2 ray(std::cos(heading + side), std::sin(heading + side));
    const Vec2 ab = b - a;
    const double denom = ray.x() * (-ab.y()) - ray.y() * (-ab.x());
    if (std::abs(denom) < 1e-12) continue;
    const Vec2 ao = a - o;
    const double t = (ao.x() * (-ab.y()) - ao.y() * (-ab.x())) / denom;
    const double u = (ray.x() * ao.y() - ray.y() * ao.x()) / denom;
    if (t >= 0.0 && u >= 0.0 && u <= 1.0) return true;
  }
  return false;
}

void intersect_wall(const Wall& w, const Vec3& o, const Vec3& d, Hit& best) {
  const Vec2 ab = w.b - w.a;
  const double len = ab.norm();
  const Vec2 n(-ab.y() / len, ab.x() / len);
  const double denom = n.x() * d.x() + n.y() * d.y();
  if (std::abs(denom) < 1e-12) return;
  const double t = n.dot(w.a - o.head<2>()) / denom;
  if (t <= 1e-6 || t >= best.range) return;
  const Vec3 p = o + t * d;
  if (p.z() < w.z_min || p.z() > w.z_max) return;
  const double s = (p.head<2>() - w.a).dot(ab) / (len * len);
  if (s < 0.0 || s > 1.0) return;
  best.range = t;
  best.cos_incidence = std::abs(denom);
  best.reflectivity = w.reflectivity;
  best.object_velocity.setZero();
  best.dynamic = false;
}

bool intersect_cylinder(const Vec2& center, double radius, double z_min, double z_max, const Vec3& o, const Vec3& d,
                        double max_t, double& t_out, double& cos_out) {
  const Vec2 oc = o.head<2>() - center;
  const Vec2 dxy = d.head<2>();
  const double a = dxy.squaredNorm();
  if (a < 1e-12) return false;
  const double b = 2.0 * oc.dot(dxy);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double t = (-b - sq) / (2.0 * a);
  if (t <= 1e-6) t = (-b + sq) / (2.0 * a);
  if (t <= 1e-6 || t >= max_t) return false;
  const Vec3 p = o + t * d;
  if (p.z() < z_min || p.z() > z_max) return false;
  const Vec2 n = (p.head<2>() - center) / radius;
  t_out = t;
  cos_out = std::abs(n.dot(dxy));
  return true;
}

}  // namespace

RadarScan render_scan(const Scene& scene, const Pose& pose, const Vec3& velocity, double timestamp,
                      const RadarConfig& config, std::uint64_t seed) {
  RadarScan scan;
  scan.timestamp = timestamp;
  scan.imu_orientation = to_quaternion(pose.rotation);

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);

  const Vec3 o = pose.translation;
  const Mat3& R = pose.rotation;
  const Vec3 v_sensor = R.transpose() * velocity;
  const Vec2 o2 = o.head<2>();

  // Only primitives that can be reached within max range and the horizontal
  // field of view (with a margin for pitch and roll of the sensor).
  const double wedge = 0.5 * deg2rad(config.fov_azimuth_deg) + deg2rad(10.0);
  const Vec3 fwd3 = R.col(0);
  const double heading = std::atan2(fwd3.y(), fwd3.x());
  std::vector<const Wall*> walls;
  for (const auto& w : scene.walls) {
    if (segment_distance(o2, w.a, w.b) <= config.max_range && segment_in_wedge(o2, heading, wedge, w.a, w.b)) {
      walls.push_back(&w);
    }
  }
  std::vector<const Cylinder*> cylinders;
  for (const auto& c : scene.cylinders) {
    if ((c.center - o2).norm() <= config.max_range + c.radius) cylinders.push_back(&c);
  }
  struct Mover {
    Vec2 center;
    Vec3 velocity;
    const Cylinder* shape;
  };
  std::vector<Mover> movers;
  for (const auto& d : scene.dynamic_objects) {
    const Vec2 c = d.position_at(timestamp);
    if ((c - o2).norm() <= config.max_range + d.shape.radius) {
      const Vec2 v = d.velocity_at(timestamp);
      movers.push_back({c, Vec3(v.x(), v.y(), 0.0), &d.shape});
    }
  }

  const double half_az = 0.5 * deg2rad(config.fov_azimuth_deg);
  const double half_el = 0.5 * deg2rad(config.fov_elevation_deg);
  const double step_az = 2.0 * half_az / config.azimuth_rays;
  const double step_el = 2.0 * half_el / config.elevation_rays;
  const double sigma_ang = deg2rad(config.angular_noise_deg);

  scan.points.reserve(static_cast<std::size_t>(config.rays_per_scan()));
  for (int ie = 0; ie < config.elevation_rays; ++ie) {
    for (int ia = 0; ia < config.azimuth_rays; ++ia) {
      const double az = -half_az + (ia + unit(rng)) * step_az;
      const double el = -half_el + (ie + unit(rng)) * step_el;
      const Vec3 d_sensor(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
      const Vec3 d = R * d_sensor;

      Hit hit;
      hit.range = config.max_range;
      if (d.z() < -1e-12) {
        const double t = (scene.ground_z - o.z()) / d.z();
        if (t > 0.0 && t < hit.range) {
          hit.range = t;
          hit.cos_incidence = -d.z();
          hit.reflectivity = scene.ground_reflectivity;
        }
      }
      for (const auto& s : scene.slabs) {
        if (std::abs(d.z()) < 1e-12) continue;
        const double t = (s.z - o.z()) / d.z();
        if (t <= 0.0 || t >= hit.range) continue;
        const Vec3 p = o + t * d;
        if (p.x() < s.min.x() || p.x() > s.max.x() || p.y() < s.min.y() || p.y() > s.max.y()) continue;
        hit.range = t;
        hit.cos_incidence = std::abs(d.z());
        hit.reflectivity = s.reflectivity;
      }
      for (const Wall* w : walls) intersect_wall(*w, o, d, hit);
      for (const Cylinder* c : cylinders) {
        double t, cs;
        if (intersect_cylinder(c->center, c->radius, c->z_min, c->z_max, o, d, hit.range, t, cs)) {
          hit = {t, cs, c->reflectivity, Vec3::Zero(), false};
        }
      }
      for (const Mover& m : movers) {
        double t, cs;
        if (intersect_cylinder(m.center, m.shape->radius, m.shape->z_min, m.shape->z_max, o, d, hit.range, t, cs)) {
          hit = {t, cs, m.shape->reflectivity, m.velocity, true};
        }
      }
      if (hit.reflectivity <= 0.0 || !(hit.range < config.max_range)) continue;

      const double detect = unit(rng);
      if (detect > config.detection_probability) continue;

      const double falloff = config.reference_range / hit.range;
      double intensity = hit.reflectivity * hit.cos_incidence * falloff * falloff;
      intensity = std::max(0.0, intensity + config.intensity_noise * gauss(rng));
      if (intensity < config.min_intensity) continue;

      const double range = hit.range + config.range_noise * gauss(rng);
      const double az_m = az + sigma_ang * gauss(rng);
      const double el_m = el + sigma_ang * gauss(rng);
      if (range <= 0.0 || range > config.max_range || std::abs(az_m) > half_az || std::abs(el_m) > half_el) continue;

      RadarPoint p;
      p.position = range * Vec3(std::cos(el_m) * std::cos(az_m), std::cos(el_m) * std::sin(az_m), std::sin(el_m));
      p.intensity = intensity;
      const Vec3 relative = R.transpose() * hit.object_velocity - v_sensor;
      p.doppler = d_sensor.dot(relative) + config.doppler_noise * gauss(rng);
      scan.points.push_back(p);
      scan.dynamic_mask.push_back(hit.dynamic ? 1 : 0);
    }
  }
  return scan;
}

Quat simulate_imu(const Pose& true_pose, double timestamp, double drift_deg_per_min, double noise_deg,
                  std::uint64_t seed) {
  Mat3 r = true_pose.rotation;
  if (drift_deg_per_min != 0.0) r = yaw_rotation(drift_deg_per_min * timestamp / 60.0) * r;
  if (noise_deg > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, deg2rad(noise_deg));
    const double nx = gauss(rng);
    const double ny = gauss(rng);
    const double nz = gauss(rng);
    r = r * so3_exp(Vec3(nx, ny, nz));
  }
  return to_quaternion(r);
}

SimulatedSequence simulate_sequence(const Scene& scene, std::span<const TrajectorySample> trajectory,
                                    const RadarConfig& radar, const ImuConfig& imu, std::uint64_t seed) {
  scene.validate();
  SimulatedSequence out;
  out.scans.reserve(trajectory.size());
  out.ground_truth.reserve(trajectory.size());
  for (std::size_t i = 0; i < trajectory.size(); ++i) {
    const auto& s = trajectory[i];
    RadarScan scan = render_scan(scene, s.pose, s.velocity, s.timestamp, radar, mix_seed(seed, 2 * i));
    scan.imu_orientation =
        simulate_imu(s.pose, s.timestamp, imu.yaw_drift_deg_per_min, imu.noise_deg, mix_seed(seed, 2 * i + 1));
    out.scans.push_back(std::move(scan));
    out.ground_truth.push_back({s.timestamp, s.pose});
  }
  return out;
}

}  // namespace radarloop
