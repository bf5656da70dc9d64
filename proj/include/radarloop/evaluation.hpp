#pragma once

#include "radarloop/geometry.hpp"
#include "radarloop/loop_candidate.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radarloop {

struct DetectionCriteria {
  double tp_trans = 4.0;    // m
  double tp_rot = 2.5;      // deg
  double gtp_radius = 6.0;  // m

  bool operator==(const DetectionCriteria&) const = default;
};

struct DetectionCounts {
  int tp = 0;
  int fp = 0;
  int gtp = 0;
  int tp_on_gtp = 0;  // true positives whose query is a ground-truth positive
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Ground-truth relative pose x_c^-1 * x_q from ground-truth keyframe poses.
Pose ground_truth_relative(std::span<const Pose> gt, int query, int candidate);

bool is_true_positive(const LoopCandidate& loop, std::span<const Pose> gt, const DetectionCriteria& criteria);

/// Queries with an admissible earlier keyframe (index <= q - gap) within the
/// ground-truth radius.
std::vector<bool> ground_truth_positive_queries(std::span<const Pose> gt, int exclusion_gap,
                                                const DetectionCriteria& criteria);

/// TP/FP over the accepted loops; recall counts true positives on
/// ground-truth-positive queries. `query_mask`, if given, restricts both the
/// loops and the ground-truth positives to the marked queries.
DetectionCounts classify_loops(std::span<const LoopCandidate> accepted, std::span<const Pose> gt, int exclusion_gap,
                               const DetectionCriteria& criteria, const std::vector<bool>* query_mask = nullptr);

struct PrPoint {
  double threshold = 0.0;
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Accepted loops for threshold y_th: per query, the best-scoring registered
/// candidate with score > y_th.
std::vector<LoopCandidate> accept_at_threshold(std::span<const LoopCandidate> log, double threshold);

/// Sweeps the threshold over 0 and every distinct score in the log.
std::vector<PrPoint> pr_curve(std::span<const LoopCandidate> log, std::span<const Pose> gt, int exclusion_gap,
                              const DetectionCriteria& criteria, const std::vector<bool>* query_mask = nullptr);

/// Threshold of the curve point with the highest F1 (the larger threshold on
/// ties), moved halfway towards the next curve threshold so that the same
/// detections are accepted with some margin.
double f1_optimal_threshold(std::span<const PrPoint> curve);

/// Largest recall with precision 1 along a PR curve.
double recall_at_full_precision(std::span<const PrPoint> curve);

struct KittiMetrics {
  double t_rel = 0.0;  // %
  double r_rel = 0.0;  // deg / 100 m
  std::size_t segments = 0;
  std::string diagnostic;
};

std::vector<double> default_segment_lengths();  // 100 .. 800 m
std::vector<double> desk_segment_lengths();     // 25, 50, 100, 200 m

/// Average relative error over all segments of the given lengths, starting at
/// every `step`-th pose. Trajectories must be index-aligned.
KittiMetrics kitti_metric(std::span<const Pose> estimate, std::span<const Pose> gt, std::span<const double> lengths,
                          int step = 1);

/// Closed-form rigid alignment (no scale) of the estimate onto the ground
/// truth, then position RMSE. Throws if fewer than 3 pairs are given.
double ate(std::span<const Pose> estimate, std::span<const Pose> gt);

/// Rigid transform minimizing sum |T * est_i - gt_i|^2.
Pose align_rigid(std::span<const Pose> estimate, std::span<const Pose> gt);

/// Ground-truth poses at the given timestamps (nearest sample within `max_dt`).
std::vector<Pose> poses_at(const Trajectory& gt, std::span<const double> timestamps, double max_dt = 1e-3);

}  // namespace radarloop
