#pragma once

#include "radarloop/geometry.hpp"

namespace radarloop {

struct AlignmentQuality {
  double C_f = 0.0;  // mean robustified residual over final correspondences
  double C_a = 0.0;  // mean size (cells) of the two registered sets
  double C_o = 0.0;  // final correspondences within the inlier threshold
};

struct LoopCandidate {
  int query = 0;
  int candidate = 0;
  ViewpointMode mode = ViewpointMode::Similar;
  double d_filtered = 0.0;
  double d_joint = 0.0;
  double d_cc = 0.0;
  double d_odom = 0.0;

  // Filled after registration. `relative` maps query keyframe coordinates into
  // candidate keyframe coordinates (x_c^-1 * x_q).
  bool registered = false;
  Pose relative;
  AlignmentQuality quality;

  double score = 0.0;  // classifier output
};

}  // namespace radarloop
