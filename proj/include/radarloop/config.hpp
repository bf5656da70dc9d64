#pragma once

#include "radarloop/descriptor.hpp"
#include "radarloop/evaluation.hpp"
#include "radarloop/odometry.hpp"
#include "radarloop/pose_graph.hpp"
#include "radarloop/registration.hpp"
#include "radarloop/retrieval.hpp"
#include "radarloop/submap.hpp"
#include "radarloop/verification.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace radarloop {

struct PipelineConfig {
  double keyframe_spacing = 3.0;  // s, m
  VoxelGridParams voxel;          // nu, r_a, capacity
  DescriptorConfig descriptor;    // r_lo, r_la, n_lo, n_la
  OdometrySimilarityParams odometry_similarity;
  RetrievalConfig retrieval;  // w, k, exclusion gap
  std::optional<double> y_th;  // overrides the threshold stored with the model
  RansacParams ransac;
  RegistrationParams registration;
  PoseGraphParams graph;
  OptimizerParams optimizer;
  int optimize_every = 10;  // keyframes between optimizations; 0 optimizes only at the end
  bool loops_enabled = true;
  bool single_thread = false;
  std::uint64_t seed = 1;
  LabelThresholds labels;
  DetectionCriteria criteria;
  std::vector<double> kitti_segments = desk_segment_lengths();

  void validate() const;
  bool operator==(const PipelineConfig&) const = default;
};

/// Defaults with the sequence length suited to a scene preset.
PipelineConfig default_config_for(const std::string& preset);

std::string config_to_json(const PipelineConfig& config);
/// Keys absent from the text keep their default values; unknown keys throw.
PipelineConfig config_from_json(const std::string& text);
PipelineConfig load_config(const std::string& path);
void save_config(const std::string& path, const PipelineConfig& config);

}  // namespace radarloop
