#include "radarloop/scan_io.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace radarloop {

namespace {

using nlohmann::json;

// Shortest representation that parses back to the same double.
void append_number(std::string& out, double v) {
  std::array<char, 64> buf;
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

/// Parses up to `n` whitespace separated doubles from `line` starting at `pos`.
template <std::size_t N>
bool parse_numbers(std::string_view line, std::size_t pos, std::array<double, N>& out) {
  const char* p = line.data() + pos;
  const char* end = line.data() + line.size();
  for (std::size_t i = 0; i < N; ++i) {
    while (p < end && (*p == ' ' || *p == '\t')) ++p;
    const auto res = std::from_chars(p, end, out[i]);
    if (res.ec != std::errc()) return false;
    p = res.ptr;
  }
  return true;
}

json vec2_json(const Vec2& v) { return json::array({v.x(), v.y()}); }
Vec2 vec2_from(const json& j) { return Vec2(j.at(0).get<double>(), j.at(1).get<double>()); }

json cylinder_json(const Cylinder& c) {
  return {{"center", vec2_json(c.center)},
          {"radius", c.radius},
          {"z_min", c.z_min},
          {"z_max", c.z_max},
          {"reflectivity", c.reflectivity}};
}

Cylinder cylinder_from(const json& j) {
  return {vec2_from(j.at("center")), j.at("radius").get<double>(), j.at("z_min").get<double>(),
          j.at("z_max").get<double>(), j.at("reflectivity").get<double>()};
}

}  // namespace

ScanFileHeader header_from(const RadarConfig& config) {
  return {config.fov_azimuth_deg, config.fov_elevation_deg, config.max_range};
}

void write_scans(std::ostream& os, const ScanSequence& seq) {
  std::string buf;
  buf.reserve(1 << 16);
  buf += "#radar ";
  append_number(buf, seq.header.fov_azimuth_deg);
  buf += ' ';
  append_number(buf, seq.header.fov_elevation_deg);
  buf += ' ';
  append_number(buf, seq.header.max_range);
  buf += '\n';
  for (const auto& scan : seq.scans) {
    const Quat q = scan.imu_orientation.normalized();
    buf += "S ";
    append_number(buf, scan.timestamp);
    for (const double c : {q.w(), q.x(), q.y(), q.z()}) {
      buf += ' ';
      append_number(buf, c);
    }
    buf += '\n';
    for (const auto& p : scan.points) {
      buf += "P ";
      for (const double c : {p.position.x(), p.position.y(), p.position.z(), p.intensity, p.doppler}) {
        append_number(buf, c);
        buf += ' ';
      }
      buf.back() = '\n';
    }
    if (buf.size() > (1 << 15)) {
      os << buf;
      buf.clear();
    }
  }
  os << buf;
}

ScanSequence read_scans(std::istream& is) {
  ScanSequence seq;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string_view view(line);
    if (view.rfind("#radar", 0) == 0) {
      std::array<double, 3> v;
      if (!parse_numbers(view, 6, v)) throw std::runtime_error("malformed radar header on line " + std::to_string(line_no));
      seq.header = {v[0], v[1], v[2]};
      have_header = true;
    } else if (view[0] == '#') {
      continue;
    } else if (view[0] == 'S') {
      std::array<double, 5> v;
      if (!parse_numbers(view, 1, v)) throw std::runtime_error("malformed scan line " + std::to_string(line_no));
      RadarScan scan;
      scan.timestamp = v[0];
      scan.imu_orientation = Quat(v[1], v[2], v[3], v[4]).normalized();
      seq.scans.push_back(std::move(scan));
    } else if (view[0] == 'P') {
      if (seq.scans.empty()) throw std::runtime_error("point before first scan on line " + std::to_string(line_no));
      std::array<double, 5> v;
      if (!parse_numbers(view, 1, v)) throw std::runtime_error("malformed point line " + std::to_string(line_no));
      seq.scans.back().points.push_back({Vec3(v[0], v[1], v[2]), v[3], v[4]});
    } else {
      throw std::runtime_error("unknown record on line " + std::to_string(line_no));
    }
  }
  if (!have_header) throw std::runtime_error("scan file lacks a #radar header");
  return seq;
}

void write_scans_file(const std::string& path, const ScanSequence& seq) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_scans(os, seq);
}

ScanSequence read_scans_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  return read_scans(is);
}

std::string scene_to_json(const Scene& scene) {
  json j;
  j["name"] = scene.name;
  j["ground_z"] = scene.ground_z;
  j["ground_reflectivity"] = scene.ground_reflectivity;
  j["walls"] = json::array();
  for (const auto& w : scene.walls) {
    j["walls"].push_back({{"a", vec2_json(w.a)},
                          {"b", vec2_json(w.b)},
                          {"z_min", w.z_min},
                          {"z_max", w.z_max},
                          {"reflectivity", w.reflectivity}});
  }
  j["cylinders"] = json::array();
  for (const auto& c : scene.cylinders) j["cylinders"].push_back(cylinder_json(c));
  j["slabs"] = json::array();
  for (const auto& s : scene.slabs) {
    j["slabs"].push_back(
        {{"min", vec2_json(s.min)}, {"max", vec2_json(s.max)}, {"z", s.z}, {"reflectivity", s.reflectivity}});
  }
  j["dynamic_objects"] = json::array();
  for (const auto& d : scene.dynamic_objects) {
    j["dynamic_objects"].push_back(
        {{"shape", cylinder_json(d.shape)}, {"start", vec2_json(d.start)}, {"end", vec2_json(d.end)}, {"speed", d.speed}});
  }
  return j.dump(1);
}

Scene scene_from_json(const std::string& text) {
  const json j = json::parse(text);
  Scene scene;
  scene.name = j.value("name", "");
  scene.ground_z = j.value("ground_z", 0.0);
  scene.ground_reflectivity = j.value("ground_reflectivity", 300.0);
  for (const auto& w : j.value("walls", json::array())) {
    scene.walls.push_back({vec2_from(w.at("a")), vec2_from(w.at("b")), w.at("z_min").get<double>(),
                           w.at("z_max").get<double>(), w.at("reflectivity").get<double>()});
  }
  for (const auto& c : j.value("cylinders", json::array())) scene.cylinders.push_back(cylinder_from(c));
  for (const auto& s : j.value("slabs", json::array())) {
    scene.slabs.push_back({vec2_from(s.at("min")), vec2_from(s.at("max")), s.at("z").get<double>(),
                           s.at("reflectivity").get<double>()});
  }
  for (const auto& d : j.value("dynamic_objects", json::array())) {
    DynamicObject obj;
    obj.shape = cylinder_from(d.at("shape"));
    obj.start = vec2_from(d.at("start"));
    obj.end = vec2_from(d.at("end"));
    obj.speed = d.at("speed").get<double>();
    scene.dynamic_objects.push_back(obj);
  }
  scene.validate();
  return scene;
}

}  // namespace radarloop
