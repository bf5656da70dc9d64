#include "radarloop/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace radarloop {

namespace {

// Sums f(i) for i in [0, n) by pairing i with n-1-i first. Reversing the
// index order therefore yields a bit-identical result, which keeps distances
// exactly invariant under double flipping.
template <typename F>
double mirrored_sum(int n, F&& f) {
  double sum = 0.0;
  for (int i = 0; i < n / 2; ++i) sum += f(i) + f(n - 1 - i);
  if (n % 2 == 1) sum += f(n / 2);
  return sum;
}

}  // namespace

const char* to_string(EncodingMode mode) {
  switch (mode) {
    case EncodingMode::MaxHeight:
      return "max_height";
    case EncodingMode::MaxIntensity:
      return "max_intensity";
    case EncodingMode::IntensitySum:
      return "intensity_sum";
  }
  return "intensity_sum";
}

EncodingMode encoding_from_string(const std::string& s) {
  if (s == "max_height") return EncodingMode::MaxHeight;
  if (s == "max_intensity") return EncodingMode::MaxIntensity;
  if (s == "intensity_sum") return EncodingMode::IntensitySum;
  throw std::invalid_argument("unknown encoding mode '" + s + "'");
}

void DescriptorConfig::validate() const {
  if (n_lo < 1 || n_la < 1 || !(r_lo > 0.0) || !(r_la > 0.0) || !(balancing_weight > 0.0)) {
    throw std::invalid_argument("invalid descriptor configuration");
  }
}

CartContext encode(const PointCloud& submap, double heading_deg, const DescriptorConfig& config) {
  config.validate();
  CartContext d;
  d.values = Eigen::MatrixXd::Constant(config.n_lo, config.n_la, kEmptyCell);
  const Mat3 to_heading = yaw_rotation(-heading_deg);
  const double cell_lo = config.r_lo / config.n_lo;
  const double cell_la = config.r_la / config.n_la;
  for (const auto& p : submap) {
    const Vec3 h = to_heading * p.position;
    const double fi = std::floor((h.x() + 0.5 * config.r_lo) / cell_lo);
    const double fj = std::floor((h.y() + 0.5 * config.r_la) / cell_la);
    if (fi < 0.0 || fj < 0.0 || fi >= config.n_lo || fj >= config.n_la) continue;
    double& cell = d.values(static_cast<int>(fi), static_cast<int>(fj));
    switch (config.mode) {
      case EncodingMode::MaxHeight:
        cell = cell == kEmptyCell ? h.z() : std::max(cell, h.z());
        break;
      case EncodingMode::MaxIntensity:
        cell = cell == kEmptyCell ? p.intensity : std::max(cell, p.intensity);
        break;
      case EncodingMode::IntensitySum:
        cell = (cell == kEmptyCell ? 0.0 : cell) + p.intensity / config.balancing_weight;
        break;
    }
  }
  return d;
}

CartContext double_flip(const CartContext& d) { return {d.values.reverse()}; }

double cosine_distance(const CartContext& a, const CartContext& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument("cosine_distance: descriptor dimensions differ");
  }
  const int rows = a.rows();
  const int cols = a.cols();
  constexpr double skip = std::numeric_limits<double>::quiet_NaN();
  Eigen::VectorXd per_column(cols);
  int used = 0;
  for (int j = 0; j < cols; ++j) {
    const auto ca = a.values.col(j);
    const auto cb = b.values.col(j);
    const bool empty_a = (ca.array() == kEmptyCell).all();
    const bool empty_b = (cb.array() == kEmptyCell).all();
    const double na = std::sqrt(mirrored_sum(rows, [&](int i) { return ca(i) * ca(i); }));
    const double nb = std::sqrt(mirrored_sum(rows, [&](int i) { return cb(i) * cb(i); }));
    if ((empty_a && empty_b) || !(na > 0.0) || !(nb > 0.0)) {
      per_column(j) = skip;
      continue;
    }
    const double dot = mirrored_sum(rows, [&](int i) { return ca(i) * cb(i); });
    const double cosine = std::clamp(dot / (na * nb), -1.0, 1.0);
    per_column(j) = 0.5 * (1.0 - cosine);
    ++used;
  }
  if (used == 0) return 1.0;
  const double sum = mirrored_sum(cols, [&](int j) { return std::isnan(per_column(j)) ? 0.0 : per_column(j); });
  return sum / used;
}

void write_descriptor(std::ostream& os, const CartContext& d) {
  os << std::setprecision(6);
  for (int i = 0; i < d.rows(); ++i) {
    for (int j = 0; j < d.cols(); ++j) {
      if (j) os << ',';
      os << d.values(i, j);
    }
    os << '\n';
  }
}

}  // namespace radarloop
