#include "radarloop/evaluation.hpp"

#include "radarloop/verification.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>

namespace radarloop {

Pose ground_truth_relative(std::span<const Pose> gt, int query, int candidate) {
  return gt[static_cast<std::size_t>(candidate)].inverse() * gt[static_cast<std::size_t>(query)];
}

bool is_true_positive(const LoopCandidate& loop, std::span<const Pose> gt, const DetectionCriteria& criteria) {
  if (!loop.registered) return false;
  const RegistrationError err = relative_pose_error(loop.relative, ground_truth_relative(gt, loop.query, loop.candidate));
  return err.translation <= criteria.tp_trans && err.rotation <= criteria.tp_rot;
}

std::vector<bool> ground_truth_positive_queries(std::span<const Pose> gt, int exclusion_gap,
                                                const DetectionCriteria& criteria) {
  std::vector<bool> out(gt.size(), false);
  for (std::size_t q = 0; q < gt.size(); ++q) {
    for (long c = 0; c <= static_cast<long>(q) - exclusion_gap; ++c) {
      if ((gt[q].translation - gt[static_cast<std::size_t>(c)].translation).norm() <= criteria.gtp_radius) {
        out[q] = true;
        break;
      }
    }
  }
  return out;
}

DetectionCounts classify_loops(std::span<const LoopCandidate> accepted, std::span<const Pose> gt, int exclusion_gap,
                               const DetectionCriteria& criteria, const std::vector<bool>* query_mask) {
  const auto gtp = ground_truth_positive_queries(gt, exclusion_gap, criteria);
  auto in_mask = [&](int q) { return !query_mask || (*query_mask)[static_cast<std::size_t>(q)]; };
  DetectionCounts out;
  for (std::size_t q = 0; q < gtp.size(); ++q) {
    if (gtp[q] && in_mask(static_cast<int>(q))) ++out.gtp;
  }
  for (const auto& loop : accepted) {
    if (!in_mask(loop.query)) continue;
    if (is_true_positive(loop, gt, criteria)) {
      ++out.tp;
      if (gtp[static_cast<std::size_t>(loop.query)]) ++out.tp_on_gtp;
    } else {
      ++out.fp;
    }
  }
  out.precision = out.tp + out.fp > 0 ? static_cast<double>(out.tp) / (out.tp + out.fp) : 1.0;
  out.recall = out.gtp > 0 ? static_cast<double>(out.tp_on_gtp) / out.gtp : 0.0;
  out.f1 = out.precision + out.recall > 0.0 ? 2.0 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
  return out;
}

std::vector<LoopCandidate> accept_at_threshold(std::span<const LoopCandidate> log, double threshold) {
  std::map<int, std::vector<const LoopCandidate*>> by_query;
  for (const auto& c : log) {
    if (c.registered) by_query[c.query].push_back(&c);
  }
  std::vector<LoopCandidate> out;
  for (const auto& [q, cands] : by_query) {
    std::vector<double> scores;
    scores.reserve(cands.size());
    for (const auto* c : cands) scores.push_back(c->score);
    if (const auto best = select_best(scores, threshold)) out.push_back(*cands[*best]);
  }
  return out;
}

std::vector<PrPoint> pr_curve(std::span<const LoopCandidate> log, std::span<const Pose> gt, int exclusion_gap,
                              const DetectionCriteria& criteria, const std::vector<bool>* query_mask) {
  std::set<double> thresholds = {0.0};
  for (const auto& c : log) {
    if (c.registered) thresholds.insert(c.score);
  }
  std::vector<PrPoint> curve;
  curve.reserve(thresholds.size());
  for (const double th : thresholds) {
    const auto accepted = accept_at_threshold(log, th);
    const auto counts = classify_loops(accepted, gt, exclusion_gap, criteria, query_mask);
    curve.push_back({th, counts.precision, counts.recall, counts.f1});
  }
  return curve;
}

double f1_optimal_threshold(std::span<const PrPoint> curve) {
  if (curve.empty()) throw std::invalid_argument("f1_optimal_threshold: empty curve");
  std::size_t best = 0;
  for (std::size_t i = 1; i < curve.size(); ++i) {
    if (curve[i].f1 >= curve[best].f1) best = i;
  }
  const double next = best + 1 < curve.size() ? curve[best + 1].threshold : 1.0;
  return 0.5 * (curve[best].threshold + next);
}

double recall_at_full_precision(std::span<const PrPoint> curve) {
  double best = 0.0;
  for (const auto& p : curve) {
    if (p.precision >= 1.0) best = std::max(best, p.recall);
  }
  return best;
}

std::vector<double> default_segment_lengths() { return {100, 200, 300, 400, 500, 600, 700, 800}; }

std::vector<double> desk_segment_lengths() { return {25, 50, 100, 200}; }

KittiMetrics kitti_metric(std::span<const Pose> estimate, std::span<const Pose> gt, std::span<const double> lengths,
                          int step) {
  KittiMetrics out;
  if (estimate.size() != gt.size()) throw std::invalid_argument("kitti_metric: trajectories differ in length");
  if (step < 1) throw std::invalid_argument("kitti_metric: step must be >= 1");
  std::vector<double> dist(gt.size(), 0.0);
  for (std::size_t i = 1; i < gt.size(); ++i) {
    dist[i] = dist[i - 1] + (gt[i].translation - gt[i - 1].translation).norm();
  }
  double t_sum = 0.0;
  double r_sum = 0.0;
  for (std::size_t first = 0; first < gt.size(); first += static_cast<std::size_t>(step)) {
    for (const double len : lengths) {
      // first index whose traveled distance reaches the segment length
      const auto it = std::lower_bound(dist.begin() + static_cast<std::ptrdiff_t>(first), dist.end(), dist[first] + len);
      if (it == dist.end()) continue;
      const std::size_t last = static_cast<std::size_t>(it - dist.begin());
      const Pose delta_gt = gt[first].inverse() * gt[last];
      const Pose delta_est = estimate[first].inverse() * estimate[last];
      const Pose err = delta_est.inverse() * delta_gt;
      t_sum += err.translation.norm() / len;
      r_sum += deg2rad(rotation_angle_deg(err.rotation)) / len;
      ++out.segments;
    }
  }
  if (out.segments == 0) {
    out.diagnostic = "trajectory shorter than the smallest segment length";
    return out;
  }
  out.t_rel = 100.0 * t_sum / static_cast<double>(out.segments);
  out.r_rel = rad2deg(r_sum / static_cast<double>(out.segments)) * 100.0;
  return out;
}

Pose align_rigid(std::span<const Pose> estimate, std::span<const Pose> gt) {
  if (estimate.size() != gt.size()) throw std::invalid_argument("align_rigid: trajectories differ in length");
  if (estimate.size() < 3) throw std::invalid_argument("align_rigid: need at least 3 pose pairs");
  Eigen::Matrix3Xd src(3, estimate.size()), dst(3, gt.size());
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    src.col(static_cast<Eigen::Index>(i)) = estimate[i].translation;
    dst.col(static_cast<Eigen::Index>(i)) = gt[i].translation;
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
  return {T.topLeftCorner<3, 3>(), T.topRightCorner<3, 1>()};
}

double ate(std::span<const Pose> estimate, std::span<const Pose> gt) {
  const Pose T = align_rigid(estimate, gt);
  double sum = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) sum += (T * estimate[i].translation - gt[i].translation).squaredNorm();
  return std::sqrt(sum / static_cast<double>(estimate.size()));
}

std::vector<Pose> poses_at(const Trajectory& gt, std::span<const double> timestamps, double max_dt) {
  std::vector<Pose> out;
  out.reserve(timestamps.size());
  for (const double t : timestamps) {
    const auto it = std::lower_bound(gt.begin(), gt.end(), t,
                                     [](const StampedPose& p, double ts) { return p.timestamp < ts; });
    const StampedPose* best = nullptr;
    if (it != gt.end()) best = &*it;
    if (it != gt.begin() && (!best || std::abs(std::prev(it)->timestamp - t) < std::abs(best->timestamp - t))) {
      best = &*std::prev(it);
    }
    if (!best || std::abs(best->timestamp - t) > max_dt) {
      throw std::runtime_error("no ground-truth pose near timestamp " + std::to_string(t));
    }
    out.push_back(best->pose);
  }
  return out;
}

}  // namespace radarloop
