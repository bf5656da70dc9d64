#pragma once

#include "radarloop/submap.hpp"

#include <Eigen/Core>

#include <iosfwd>
#include <string>

namespace radarloop {

enum class EncodingMode { MaxHeight, MaxIntensity, IntensitySum };

const char* to_string(EncodingMode mode);
EncodingMode encoding_from_string(const std::string& s);

struct DescriptorConfig {
  double r_lo = 30.0;  // m, longitudinal side length
  double r_la = 30.0;  // m, lateral side length
  int n_lo = 20;
  int n_la = 20;
  EncodingMode mode = EncodingMode::IntensitySum;
  double balancing_weight = 1000.0;

  void validate() const;
  bool operator==(const DescriptorConfig&) const = default;
};

/// Cartesian grid descriptor. Rows run along the sensor forward axis (row 0 is
/// behind the keyframe), columns along the lateral axis (column 0 is right).
struct CartContext {
  Eigen::MatrixXd values;

  int rows() const { return static_cast<int>(values.rows()); }
  int cols() const { return static_cast<int>(values.cols()); }
  bool operator==(const CartContext& other) const { return values == other.values; }
};

constexpr double kEmptyCell = -1.0;

/// Rotates the world-aligned submap by -heading and bins it into a rectangle
/// centered on the keyframe.
CartContext encode(const PointCloud& submap, double heading_deg, const DescriptorConfig& config);

/// Reverses row and column order (descriptor seen from the opposite heading).
CartContext double_flip(const CartContext& d);

/// Mean over columns of 0.5 * (1 - cosine similarity). Columns where either
/// side has zero norm, or both sides are entirely empty, are skipped. Returns 1
/// when no column qualifies.
double cosine_distance(const CartContext& a, const CartContext& b);

/// Comma-separated rows.
void write_descriptor(std::ostream& os, const CartContext& d);

}  // namespace radarloop
