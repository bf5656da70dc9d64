#pragma once

#include "radarloop/geometry.hpp"
#include "radarloop/keyframe.hpp"
#include "radarloop/loop_candidate.hpp"

#include <iosfwd>
#include <span>
#include <vector>

namespace radarloop {

struct OdometrySimilarityParams {
  double sigma_trans = 0.04;   // ratio of distance traveled
  double sigma_rot = 3.0;      // deg
  double epsilon_trans = 5.0;  // m
  double epsilon_rot = 5.0;    // deg

  void validate() const;
  bool operator==(const OdometrySimilarityParams&) const = default;
};

struct RetrievalConfig {
  int sequence_length = 6;  // w
  int candidates = 3;       // k
  int exclusion_gap = 20;   // keyframes
  double descriptor_weight = 0.5;

  void validate() const;
  bool operator==(const RetrievalConfig&) const = default;
};

/// Gaussian drift model on translation (normalized by distance traveled) and
/// on the rotation angle after removing the expected viewpoint rotation.
double odometry_similarity(const Pose& query, const Pose& candidate, double traveled, ViewpointMode mode,
                           const OdometrySimilarityParams& params);
double odometry_similarity(const Keyframe& query, const Keyframe& candidate, ViewpointMode mode,
                           const OdometrySimilarityParams& params);

double joint_distance(double d_cc, double d_odom, double descriptor_weight = 0.5);

struct JointEntry {
  double d_joint = 0.0;
  double d_cc = 0.0;
  double d_odom = 0.0;
};

/// Lower-triangular similar/opposing viewpoint distance matrices and their
/// sequence-filtered counterparts. Row q holds candidates 0 .. q - gap. Rows
/// are append-only; filtered values are computed when the row is appended.
class DistanceMatrices {
 public:
  explicit DistanceMatrices(int exclusion_gap = 20, int sequence_length = 6);

  /// Computes the joint distances of `query` against `history` (indices
  /// 0 .. query.index - 1) and appends the row.
  void append_keyframe(const Keyframe& query, std::span<const Keyframe> history, const RetrievalConfig& config,
                       const OdometrySimilarityParams& params);

  /// Appends precomputed rows. Both rows must hold exactly admissible_count(q)
  /// entries where q is the new row index.
  void append_row(std::vector<JointEntry> sv, std::vector<JointEntry> ov);

  int size() const { return static_cast<int>(sv_.size()); }
  int exclusion_gap() const { return gap_; }
  int sequence_length() const { return window_; }
  int admissible_count(int q) const { return q - gap_ + 1 > 0 ? q - gap_ + 1 : 0; }
  bool admissible(int q, int c) const { return q >= 0 && q < size() && c >= 0 && c <= q - gap_; }

  /// Joint entry or nullptr when (q, c) is not admissible.
  const JointEntry* entry(ViewpointMode mode, int q, int c) const;
  double joint(ViewpointMode mode, int q, int c) const;
  double filtered(ViewpointMode mode, int q, int c) const;

  /// Full size() x size() matrix with NaN for inadmissible pairs.
  Eigen::MatrixXd dense_joint(ViewpointMode mode) const;
  Eigen::MatrixXd dense_filtered(ViewpointMode mode) const;

 private:
  int gap_;
  int window_;
  std::vector<std::vector<JointEntry>> sv_, ov_;
  std::vector<std::vector<double>> f_sv_, f_ov_;
};

/// Mean of the joint distances along the diagonal through (q, c): (q-i, c-i)
/// for similar and (q-i, c+i) for opposing viewpoints, i < w. Inadmissible
/// pairs are skipped.
double sequence_filter(const DistanceMatrices& m, int q, int c, ViewpointMode mode, int w);

/// Global top-k over both filtered rows of q, ordered by filtered distance,
/// then candidate index, then similar before opposing.
std::vector<LoopCandidate> retrieve_candidates(const DistanceMatrices& m, int q, int k);

/// Comma-separated matrix, `nan` for missing entries.
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace radarloop
