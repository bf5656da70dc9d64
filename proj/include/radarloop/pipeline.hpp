#pragma once

#include "radarloop/config.hpp"
#include "radarloop/evaluation.hpp"
#include "radarloop/keyframe.hpp"
#include "radarloop/loop_candidate.hpp"
#include "radarloop/pose_graph.hpp"
#include "radarloop/retrieval.hpp"
#include "radarloop/scan_io.hpp"
#include "radarloop/verification.hpp"

#include <string>
#include <vector>

namespace radarloop {

struct SlamResult {
  std::vector<Keyframe> keyframes;  // submaps are released after encoding
  std::vector<int> keyframe_scans;  // scan index of every keyframe
  Trajectory odometry;              // one pose per scan
  std::vector<LoopCandidate> candidates;  // every retrieved candidate, in query order
  std::vector<LoopCandidate> loops;       // accepted loop closures
  DistanceMatrices matrices;
  PoseGraph graph;
  int ransac_failures = 0;
  double mean_loop_closure_ms = 0.0;  // retrieval + registration + verification per keyframe

  std::vector<double> keyframe_timestamps() const;
  std::vector<Pose> keyframe_odometry() const;
  Trajectory optimized_trajectory() const;
};

/// Runs odometry, submapping, retrieval, registration and, when a classifier
/// is given, verification with loop insertion and pose-graph optimization.
/// Without a classifier the candidates are registered and logged but no loop
/// edge is added (training mode).
SlamResult run_slam(const ScanSequence& scans, const PipelineConfig& config, const LoopClassifier* classifier);

/// Re-scores logged candidates with a classifier.
void rescore(std::vector<LoopCandidate>& candidates, const LoopClassifier& classifier);

struct LabeledCandidate {
  LoopCandidate candidate;
  bool positive = false;
  RegistrationError error;  // NaN when registration failed
};

std::vector<LabeledCandidate> label_candidates(std::span<const LoopCandidate> candidates,
                                               std::span<const Pose> keyframe_gt, const LabelThresholds& thresholds);

struct TrainingOutcome {
  LoopClassifier model;
  std::vector<LabeledCandidate> corpus;
  std::vector<PrPoint> curve;  // on the training run
  PrPoint chosen;              // curve point at the selected threshold
};

/// Labels the candidates of a training run, fits the classifier and picks the
/// F1-optimal decision threshold on the training run itself.
TrainingOutcome train_classifier(const SlamResult& run, const Trajectory& gt, const PipelineConfig& config);

/// Training corpus: `qidx cidx mode d_odom d_cc C_f C_a C_o label terr rerr`.
void write_corpus(const std::string& path, std::span<const LabeledCandidate> corpus);

/// Everything `eval` needs, as stored on disk by `write_artifacts`.
struct Artifacts {
  std::vector<double> keyframe_timestamps;
  std::vector<Pose> keyframe_odometry;
  std::vector<Pose> optimized;
  std::vector<LoopCandidate> candidates;
  std::vector<LoopCandidate> loops;
};

Artifacts artifacts_of(const SlamResult& result);
void write_artifacts(const std::string& dir, const SlamResult& result, const PipelineConfig& config);
Artifacts read_artifacts(const std::string& dir);

struct EvaluationReport {
  int keyframes = 0;
  int candidates = 0;
  DetectionCounts detection;
  std::vector<PrPoint> curve;
  double recall_at_precision_1 = 0.0;
  KittiMetrics odometry_kitti;
  KittiMetrics optimized_kitti;
  double odometry_ate = 0.0;
  double optimized_ate = 0.0;
};

EvaluationReport evaluate(const Artifacts& artifacts, const Trajectory& gt, const PipelineConfig& config);
void write_report(const std::string& dir, const EvaluationReport& report);

}  // namespace radarloop
