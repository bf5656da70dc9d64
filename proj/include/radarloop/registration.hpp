#pragma once

#include "radarloop/geometry.hpp"
#include "radarloop/keyframe.hpp"
#include "radarloop/loop_candidate.hpp"
#include "radarloop/submap.hpp"

#include <optional>
#include <vector>

namespace radarloop {

struct Distribution {
  Vec3 mean = Vec3::Zero();
  Mat3 covariance = Mat3::Identity();
  Mat3 sqrt_information = Mat3::Identity();  // U with U^T U = covariance^-1
  Vec3 normal = Vec3::UnitZ();
  int count = 0;
};

struct DistributionMap {
  std::vector<Distribution> cells;
  bool empty() const { return cells.empty(); }
  std::size_t size() const { return cells.size(); }
};

/// Partitions the cloud into cubic cells and fits a Gaussian to every cell
/// holding at least `min_points` points. `lambda_floor` is added to the
/// covariance diagonal.
DistributionMap build_distributions(const PointCloud& cloud, double cell_size = 2.0, int min_points = 5,
                                    double lambda_floor = 1e-4);

struct RegistrationParams {
  double cell_size = 2.0;
  int min_points = 5;
  double lambda_floor = 1e-4;
  double correspondence_radius = 4.0;  // m
  double huber_delta = 1.0;
  double inlier_threshold = 3.0;  // Mahalanobis distance counted towards C_o
  int max_iterations = 50;
  double step_tolerance = 1e-6;
  int min_correspondences = 5;
  // A local method that rotates further than this from its initialization has
  // left its basin; the result is reported as a failure.
  double max_rotation_change_deg = 30.0;
  double failure_cost = 100.0;  // C_f reported for failed registrations
  // Pre-alignment on cells of this size with a proportionally larger search
  // radius; 0 disables the coarse stage.
  double coarse_cell_size = 4.0;

  bool operator==(const RegistrationParams&) const = default;
};

struct RegistrationResult {
  Pose pose;  // maps query coordinates into candidate coordinates
  AlignmentQuality quality;
  int iterations = 0;
  // Robustified cost before and after every accepted step, evaluated on the
  // same correspondence set.
  std::vector<std::pair<double, double>> accepted_steps;
};

/// Aligns the query cell means to the candidate distributions starting from
/// `initial`. Fails when fewer than `min_correspondences` pairs are found at
/// the initial pose or when the rotation drifts more than
/// `max_rotation_change_deg` away from the initial one.
std::optional<RegistrationResult> align(const DistributionMap& query, const DistributionMap& candidate,
                                        const Pose& initial, const RegistrationParams& params = {});

/// Coarse stage on `coarse_query`/`coarse_candidate` followed by the regular
/// alignment. Quality measures come from the fine stage. Falls back to `initial`
/// when the coarse stage fails.
std::optional<RegistrationResult> align_coarse_to_fine(const DistributionMap& query, const DistributionMap& candidate,
                                                       const DistributionMap& coarse_query,
                                                       const DistributionMap& coarse_candidate, const Pose& initial,
                                                       const RegistrationParams& params = {});

/// Convenience overload building the query distributions from points.
std::optional<RegistrationResult> align(const PointCloud& query, const DistributionMap& candidate,
                                        const Pose& initial, const RegistrationParams& params = {});

/// Initial alignment of the keyframe-centered, world-aligned submaps of
/// `query` and `candidate` under the viewpoint hypothesis `mode`: rotation
/// R_c * dR(mode) * R_q^T, translation t_q - t_c.
Pose initial_guess(const Keyframe& query, const Keyframe& candidate, ViewpointMode mode);
Pose initial_guess(const Pose& query, const Pose& candidate, ViewpointMode mode);

/// Converts an alignment between world-aligned submap frames into the
/// relative pose between the keyframe sensor frames (x_c^-1 * x_q).
Pose loop_constraint(const Pose& query_pose, const Pose& candidate_pose, const Pose& submap_alignment);

}  // namespace radarloop
