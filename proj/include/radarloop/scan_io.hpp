#pragma once

#include "radarloop/radar_sim.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace radarloop {

/// Sensor header stored at the top of a scan file.
struct ScanFileHeader {
  double fov_azimuth_deg = 80.0;
  double fov_elevation_deg = 30.0;
  double max_range = 42.0;
};

struct ScanSequence {
  ScanFileHeader header;
  std::vector<RadarScan> scans;
};

// Line format:
//   #radar fov_az fov_el max_range
//   S timestamp qw qx qy qz
//   P x y z intensity doppler
void write_scans(std::ostream& os, const ScanSequence& seq);
ScanSequence read_scans(std::istream& is);
void write_scans_file(const std::string& path, const ScanSequence& seq);
ScanSequence read_scans_file(const std::string& path);

ScanFileHeader header_from(const RadarConfig& config);

// Scene description as JSON.
std::string scene_to_json(const Scene& scene);
Scene scene_from_json(const std::string& text);

}  // namespace radarloop
