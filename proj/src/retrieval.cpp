#include "radarloop/retrieval.hpp"

#include "radarloop/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace radarloop {

void OdometrySimilarityParams::validate() const {
  if (!(sigma_trans > 0.0) || !(sigma_rot > 0.0) || !(epsilon_trans > 0.0) || !(epsilon_rot > 0.0)) {
    throw std::invalid_argument("odometry similarity parameters must be positive");
  }
}

void RetrievalConfig::validate() const {
  if (sequence_length < 1 || candidates < 1 || exclusion_gap < 1) {
    throw std::invalid_argument("invalid retrieval configuration");
  }
}

double odometry_similarity(const Pose& query, const Pose& candidate, double traveled, ViewpointMode mode,
                           const OdometrySimilarityParams& params) {
  if (!(traveled > 0.0)) throw std::invalid_argument("odometry_similarity: traveled distance must be positive");
  const double dist = (query.translation - candidate.translation).norm();
  const double t_err = std::max(dist - params.epsilon_trans, 0.0) / traveled;
  const double dtheta = geodesic_angle(query.rotation, candidate.rotation, expected_rotation(mode));
  const double r_err = std::max(dtheta - params.epsilon_rot, 0.0);
  const double pt = std::exp(-t_err * t_err / (2.0 * params.sigma_trans * params.sigma_trans));
  const double pr = std::exp(-r_err * r_err / (2.0 * params.sigma_rot * params.sigma_rot));
  return 1.0 - pt * pr;
}

double odometry_similarity(const Keyframe& query, const Keyframe& candidate, ViewpointMode mode,
                           const OdometrySimilarityParams& params) {
  return odometry_similarity(query.pose, candidate.pose, query.traveled - candidate.traveled, mode, params);
}

double joint_distance(double d_cc, double d_odom, double descriptor_weight) { return descriptor_weight * d_cc + d_odom; }

DistanceMatrices::DistanceMatrices(int exclusion_gap, int sequence_length)
    : gap_(exclusion_gap), window_(sequence_length) {
  if (gap_ < 1 || window_ < 1) throw std::invalid_argument("DistanceMatrices: gap and window must be >= 1");
}

void DistanceMatrices::append_keyframe(const Keyframe& query, std::span<const Keyframe> history,
                                       const RetrievalConfig& config, const OdometrySimilarityParams& params) {
  const int q = size();
  if (query.index != q) throw std::invalid_argument("append_keyframe: query index must equal the next row");
  const int n = admissible_count(q);
  if (static_cast<int>(history.size()) < n) throw std::invalid_argument("append_keyframe: history too short");
  std::vector<JointEntry> sv(n), ov(n);
  for (int c = 0; c < n; ++c) {
    const Keyframe& cand = history[c];
    const double dcc_sv = cosine_distance(query.descriptor, cand.descriptor);
    const double dcc_ov = cosine_distance(query.descriptor_flipped, cand.descriptor);
    const double dodom_sv = odometry_similarity(query, cand, ViewpointMode::Similar, params);
    const double dodom_ov = odometry_similarity(query, cand, ViewpointMode::Opposing, params);
    sv[c] = {joint_distance(dcc_sv, dodom_sv, config.descriptor_weight), dcc_sv, dodom_sv};
    ov[c] = {joint_distance(dcc_ov, dodom_ov, config.descriptor_weight), dcc_ov, dodom_ov};
  }
  append_row(std::move(sv), std::move(ov));
}

void DistanceMatrices::append_row(std::vector<JointEntry> sv, std::vector<JointEntry> ov) {
  const int q = size();
  const auto n = static_cast<std::size_t>(admissible_count(q));
  if (sv.size() != n || ov.size() != n) throw std::invalid_argument("append_row: row length mismatch");
  sv_.push_back(std::move(sv));
  ov_.push_back(std::move(ov));
  std::vector<double> fs(n), fo(n);
  for (std::size_t c = 0; c < n; ++c) {
    fs[c] = sequence_filter(*this, q, static_cast<int>(c), ViewpointMode::Similar, window_);
    fo[c] = sequence_filter(*this, q, static_cast<int>(c), ViewpointMode::Opposing, window_);
  }
  f_sv_.push_back(std::move(fs));
  f_ov_.push_back(std::move(fo));
}

const JointEntry* DistanceMatrices::entry(ViewpointMode mode, int q, int c) const {
  if (!admissible(q, c)) return nullptr;
  return mode == ViewpointMode::Similar ? &sv_[q][c] : &ov_[q][c];
}

double DistanceMatrices::joint(ViewpointMode mode, int q, int c) const {
  const JointEntry* e = entry(mode, q, c);
  return e ? e->d_joint : std::numeric_limits<double>::quiet_NaN();
}

double DistanceMatrices::filtered(ViewpointMode mode, int q, int c) const {
  if (!admissible(q, c) || q >= static_cast<int>(f_sv_.size())) return std::numeric_limits<double>::quiet_NaN();
  return mode == ViewpointMode::Similar ? f_sv_[q][c] : f_ov_[q][c];
}

Eigen::MatrixXd DistanceMatrices::dense_joint(ViewpointMode mode) const {
  const int n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (int q = 0; q < n; ++q) {
    for (int c = 0; c < admissible_count(q); ++c) m(q, c) = joint(mode, q, c);
  }
  return m;
}

Eigen::MatrixXd DistanceMatrices::dense_filtered(ViewpointMode mode) const {
  const int n = size();
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(n, n, std::numeric_limits<double>::quiet_NaN());
  for (int q = 0; q < n; ++q) {
    for (int c = 0; c < admissible_count(q); ++c) m(q, c) = filtered(mode, q, c);
  }
  return m;
}

double sequence_filter(const DistanceMatrices& m, int q, int c, ViewpointMode mode, int w) {
  if (!m.admissible(q, c)) throw std::invalid_argument("sequence_filter: anchor entry does not exist");
  const int step = mode == ViewpointMode::Similar ? -1 : 1;
  double sum = 0.0;
  int count = 0;
  for (int i = 0; i < w; ++i) {
    const JointEntry* e = m.entry(mode, q - i, c + step * i);
    if (!e) continue;
    sum += e->d_joint;
    ++count;
  }
  return sum / count;
}

std::vector<LoopCandidate> retrieve_candidates(const DistanceMatrices& m, int q, int k) {
  std::vector<LoopCandidate> all;
  if (q < 0 || q >= m.size()) return all;
  const int n = m.admissible_count(q);
  all.reserve(2 * static_cast<std::size_t>(n));
  for (const ViewpointMode mode : {ViewpointMode::Similar, ViewpointMode::Opposing}) {
    for (int c = 0; c < n; ++c) {
      const JointEntry* e = m.entry(mode, q, c);
      LoopCandidate cand;
      cand.query = q;
      cand.candidate = c;
      cand.mode = mode;
      cand.d_filtered = m.filtered(mode, q, c);
      cand.d_joint = e->d_joint;
      cand.d_cc = e->d_cc;
      cand.d_odom = e->d_odom;
      all.push_back(cand);
    }
  }
  auto key = [](const LoopCandidate& c) { return std::make_tuple(c.d_filtered, c.candidate, static_cast<int>(c.mode)); };
  const auto top = static_cast<std::size_t>(std::max(k, 0));
  if (all.size() > top) {
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(top), all.end(),
                      [&](const LoopCandidate& a, const LoopCandidate& b) { return key(a) < key(b); });
    all.resize(top);
  } else {
    std::sort(all.begin(), all.end(), [&](const LoopCandidate& a, const LoopCandidate& b) { return key(a) < key(b); });
  }
  return all;
}

void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m) {
  os << std::setprecision(8);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      if (std::isnan(m(i, j))) {
        os << "nan";
      } else {
        os << m(i, j);
      }
    }
    os << '\n';
  }
}

}  // namespace radarloop
