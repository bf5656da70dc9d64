#include "radarloop/radar_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace radarloop {

namespace {

// Fixed generator seeds: scene geometry is part of the preset, sensor noise
// is controlled by the sequence seed.
constexpr std::uint64_t kCampusLayoutSeed = 7;
constexpr std::uint64_t kForestLayoutSeed = 11;
constexpr std::uint64_t kCorridorLayoutSeed = 13;

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double f = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + f * ab)).norm();
}

bool segments_intersect(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
  };
  const double d1 = orient(q1, q2, p1);
  const double d2 = orient(q1, q2, p2);
  const double d3 = orient(p1, p2, q1);
  const double d4 = orient(p1, p2, q2);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

double segment_segment_distance(const Vec2& p1, const Vec2& p2, const Vec2& q1, const Vec2& q2) {
  if (segments_intersect(p1, p2, q1, q2)) return 0.0;
  return std::min({point_segment_distance(p1, q1, q2), point_segment_distance(p2, q1, q2),
                   point_segment_distance(q1, p1, p2), point_segment_distance(q2, p1, p2)});
}

/// Distance from an axis-aligned rectangle to a route polyline.
double rect_route_distance(const Vec2& min, const Vec2& max, const std::vector<Vec3>& route) {
  const Vec2 corners[4] = {min, Vec2(max.x(), min.y()), max, Vec2(min.x(), max.y())};
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    const Vec2 a = route[i].head<2>();
    const Vec2 b = route[i + 1].head<2>();
    for (const Vec2& p : {a, b}) {
      if (p.x() >= min.x() && p.x() <= max.x() && p.y() >= min.y() && p.y() <= max.y()) return 0.0;
    }
    for (int k = 0; k < 4; ++k) {
      best = std::min(best, segment_segment_distance(a, b, corners[k], corners[(k + 1) % 4]));
    }
  }
  return best;
}

double point_route_distance(const Vec2& p, const std::vector<Vec3>& route) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < route.size(); ++i) {
    best = std::min(best, point_segment_distance(p, route[i].head<2>(), route[i + 1].head<2>()));
  }
  return best;
}

/// Wall made of short panels whose joints are jittered sideways, emulating
/// rough rock faces.
void add_rough_wall(Scene& scene, const Vec2& a, const Vec2& b, double height, double reflectivity, double jitter,
                    std::mt19937_64& rng) {
  const Vec2 ab = b - a;
  const double len = ab.norm();
  const int panels = std::max(1, static_cast<int>(std::round(len / 2.0)));
  const Vec2 normal(-ab.y() / len, ab.x() / len);
  std::uniform_real_distribution<double> off(-jitter, jitter);
  std::uniform_real_distribution<double> refl(0.8, 1.2);
  Vec2 prev = a;
  for (int i = 1; i <= panels; ++i) {
    Vec2 next = a + ab * (static_cast<double>(i) / panels);
    if (i < panels) next += normal * off(rng);
    scene.walls.push_back({prev, next, scene.ground_z, scene.ground_z + height, reflectivity * refl(rng)});
    prev = next;
  }
}

std::vector<Vec3> out_and_back(std::vector<Vec3> out) {
  std::vector<Vec3> route = out;
  for (auto it = out.rbegin() + 1; it != out.rend(); ++it) route.push_back(*it);
  return route;
}

SimulationSetup campus_loop() {
  SimulationSetup setup;
  Scene& scene = setup.scene;
  scene.name = "campus_loop";
  scene.ground_reflectivity = 300.0;
  const double h = setup.radar.sensor_height;
  const std::vector<Vec3> streets = {{0.0, 0.0, h}, {200.0, 0.0, h}, {200.0, 120.0, h}, {330.0, 120.0, h}};
  setup.waypoints = out_and_back(streets);
  setup.speed = 1.5;
  setup.imu = {0.5, 0.05};
  setup.sequence_length = 6;

  std::mt19937_64 rng(kCampusLayoutSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  const double clearance = 5.0;
  for (std::size_t s = 0; s + 1 < streets.size(); ++s) {
    const Vec2 a = streets[s].head<2>();
    const Vec2 b = streets[s + 1].head<2>();
    const Vec2 dir = (b - a).normalized();
    const Vec2 left(-dir.y(), dir.x());
    const double len = (b - a).norm();
    for (const double side : {1.0, -1.0}) {
      // buildings
      double along = uni(-20.0, 0.0);
      while (along < len + 20.0) {
        const double length = uni(10.0, 32.0);
        const double setback = uni(6.0, 14.0);
        const double depth = uni(8.0, 20.0);
        const Vec2 p0 = a + dir * along + left * side * setback;
        const Vec2 p1 = a + dir * (along + length) + left * side * (setback + depth);
        const Vec2 mn(std::min(p0.x(), p1.x()), std::min(p0.y(), p1.y()));
        const Vec2 mx(std::max(p0.x(), p1.x()), std::max(p0.y(), p1.y()));
        if (rect_route_distance(mn, mx, streets) >= clearance) {
          scene.add_box(mn, mx, uni(6.0, 16.0), uni(80.0, 160.0));
        }
        along += length + uni(3.0, 12.0);
      }
      // trees, lamp posts and parked cars along the curb
      along = uni(0.0, 6.0);
      while (along < len) {
        const double kind = u(rng);
        const double offset = uni(3.2, 4.8);
        const Vec2 c = a + dir * along + left * side * offset;
        if (point_route_distance(c, streets) >= 3.0) {
          if (kind < 0.5) {
            scene.cylinders.push_back({c, uni(0.2, 0.4), scene.ground_z, scene.ground_z + uni(5.0, 9.0), uni(60.0, 110.0)});
          } else if (kind < 0.7) {
            scene.cylinders.push_back({c, 0.12, scene.ground_z, scene.ground_z + 6.0, 220.0});
          } else if (kind < 0.85) {
            const Vec2 half = dir.cwiseAbs() * 2.2 + left.cwiseAbs() * 0.9;
            const Vec2 center = a + dir * along + left * side * (offset - 0.4);
            if (rect_route_distance(center - half, center + half, streets) >= 2.0) {
              scene.add_box(center - half, center + half, 1.5, 180.0);
            }
          }
        }
        along += uni(6.0, 16.0);
      }
    }
    // pedestrians walking along the sidewalks
    for (int i = 0; i < 3; ++i) {
      const double side = (i % 2 == 0) ? 1.0 : -1.0;
      const double start = uni(0.0, 0.5 * len);
      DynamicObject walker;
      walker.shape = {Vec2::Zero(), 0.3, scene.ground_z, scene.ground_z + 1.8, 120.0};
      walker.start = a + dir * start + left * side * 2.6;
      walker.end = a + dir * (start + uni(20.0, 60.0)) + left * side * 2.6;
      walker.speed = uni(1.0, 1.8);
      scene.dynamic_objects.push_back(walker);
    }
  }
  return setup;
}

SimulationSetup forest_loop() {
  SimulationSetup setup;
  Scene& scene = setup.scene;
  scene.name = "forest_loop";
  scene.ground_reflectivity = 350.0;
  const double h = setup.radar.sensor_height;
  const std::vector<Vec3> lap = {{0, 0, h}, {100, 0, h}, {100, 70, h}, {0, 70, h}, {0, 0, h}};
  setup.waypoints = lap;
  for (std::size_t i = 1; i < lap.size(); ++i) setup.waypoints.push_back(lap[i]);
  setup.speed = 1.5;
  setup.imu = {0.5, 0.05};
  setup.sequence_length = 6;

  std::mt19937_64 rng(kForestLayoutSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };
  const int trees = 1400;
  for (int i = 0; i < trees; ++i) {
    const Vec2 c(uni(-50.0, 150.0), uni(-50.0, 120.0));
    if (point_route_distance(c, lap) < 2.5) continue;
    scene.cylinders.push_back({c, uni(0.12, 0.45), scene.ground_z, scene.ground_z + uni(6.0, 18.0), uni(50.0, 130.0)});
  }
  for (int i = 0; i < 40; ++i) {
    const Vec2 c(uni(-40.0, 140.0), uni(-40.0, 110.0));
    const Vec2 half(uni(0.5, 1.5), uni(0.5, 1.5));
    if (rect_route_distance(c - half, c + half, lap) < 2.5) continue;
    scene.add_box(c - half, c + half, uni(0.8, 2.0), uni(150.0, 250.0));  // boulders
  }
  return setup;
}

SimulationSetup corridor_with_side_tunnels() {
  SimulationSetup setup;
  Scene& scene = setup.scene;
  scene.name = "corridor_with_side_tunnels";
  scene.ground_reflectivity = 250.0;
  const double h = setup.radar.sensor_height;
  const double length = 120.0;
  const double width = 30.0;
  const double half_w = 2.5;  // corridor half width
  const double tunnel_half = 3.5;
  const double tunnel_depth = 8.0;
  const double spacing = 15.0;
  const double wall_h = 4.0;
  const double refl = 120.0;

  const Vec3 c0(0, 0, h), c1(length, 0, h), c2(length, width, h), c3(0, width, h);
  // first lap counter-clockwise, second lap clockwise, then half a lap
  // counter-clockwise again
  setup.waypoints = {c0, c1, c2, c3, c0, c3, c2, c1, c0, c1, c2};
  setup.speed = 1.5;
  setup.imu = {0.5, 0.05};
  setup.sequence_length = 15;

  std::mt19937_64 rng(kCorridorLayoutSeed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto uni = [&](double lo, double hi) { return lo + (hi - lo) * u(rng); };

  std::vector<double> tunnels;
  for (double x = spacing; x < length - 0.5 * spacing; x += spacing) tunnels.push_back(x);

  // Long wall at height y from x0 to x1 with side tunnels opening towards
  // `outward` (+1 or -1 in y).
  auto long_wall = [&](double y, double x0, double x1, double outward) {
    double cursor = x0;
    for (double xc : tunnels) {
      add_rough_wall(scene, Vec2(cursor, y), Vec2(xc - tunnel_half, y), wall_h, refl, 0.2, rng);
      const double y_end = y + outward * tunnel_depth;
      add_rough_wall(scene, Vec2(xc - tunnel_half, y), Vec2(xc - tunnel_half, y_end), wall_h, refl, 0.2, rng);
      add_rough_wall(scene, Vec2(xc - tunnel_half, y_end), Vec2(xc + tunnel_half, y_end), wall_h, refl, 0.2, rng);
      add_rough_wall(scene, Vec2(xc + tunnel_half, y_end), Vec2(xc + tunnel_half, y), wall_h, refl, 0.2, rng);
      cursor = xc + tunnel_half;
    }
    add_rough_wall(scene, Vec2(cursor, y), Vec2(x1, y), wall_h, refl, 0.2, rng);
  };
  long_wall(-half_w, -half_w, length + half_w, -1.0);
  long_wall(half_w, half_w, length - half_w, 1.0);
  long_wall(width + half_w, -half_w, length + half_w, 1.0);
  long_wall(width - half_w, half_w, length - half_w, -1.0);
  add_rough_wall(scene, Vec2(-half_w, -half_w), Vec2(-half_w, width + half_w), wall_h, refl, 0.2, rng);
  add_rough_wall(scene, Vec2(half_w, half_w), Vec2(half_w, width - half_w), wall_h, refl, 0.2, rng);
  add_rough_wall(scene, Vec2(length + half_w, -half_w), Vec2(length + half_w, width + half_w), wall_h, refl, 0.2, rng);
  add_rough_wall(scene, Vec2(length - half_w, half_w), Vec2(length - half_w, width - half_w), wall_h, refl, 0.2, rng);
  scene.slabs.push_back({Vec2(-20.0, -20.0), Vec2(length + 20.0, width + 20.0), scene.ground_z + wall_h, 60.0});

  // Sparse clutter (boulders, equipment) close to the walls.
  const std::vector<Vec3> loop = {c0, c1, c2, c3, c0};
  for (std::size_t s = 0; s + 1 < loop.size(); ++s) {
    const Vec2 a = loop[s].head<2>();
    const Vec2 b = loop[s + 1].head<2>();
    const Vec2 dir = (b - a).normalized();
    const Vec2 left(-dir.y(), dir.x());
    double along = uni(3.0, 10.0);
    while (along < (b - a).norm() - 3.0) {
      const double side = u(rng) < 0.5 ? 1.0 : -1.0;
      const Vec2 c = a + dir * along + left * side * uni(1.7, 2.0);
      scene.cylinders.push_back({c, uni(0.25, 0.45), scene.ground_z, scene.ground_z + uni(0.6, 1.6), uni(150.0, 250.0)});
      along += uni(3.0, 8.0);
    }
  }
  return setup;
}

}  // namespace

RadarProfile radar_profile_from_string(const std::string& name) {
  if (name == "short" || name == "short_range") return RadarProfile::ShortRange;
  if (name == "long" || name == "long_range") return RadarProfile::LongRange;
  throw std::invalid_argument("unknown radar profile '" + name + "'");
}

std::vector<std::string> preset_names() { return {"corridor_with_side_tunnels", "campus_loop", "forest_loop"}; }

SimulationSetup make_preset(const std::string& name, RadarProfile profile) {
  SimulationSetup setup;
  if (name == "campus_loop") {
    setup = campus_loop();
  } else if (name == "forest_loop") {
    setup = forest_loop();
  } else if (name == "corridor_with_side_tunnels") {
    setup = corridor_with_side_tunnels();
  } else {
    throw std::invalid_argument("unknown scene preset '" + name + "'");
  }
  if (profile == RadarProfile::LongRange) {
    const double height = setup.radar.sensor_height;
    setup.radar = RadarConfig::long_range();
    setup.radar.sensor_height = height;
  }
  setup.scene.validate();
  return setup;
}

}  // namespace radarloop
