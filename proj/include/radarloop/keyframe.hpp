#pragma once

#include "radarloop/descriptor.hpp"
#include "radarloop/geometry.hpp"
#include "radarloop/submap.hpp"

namespace radarloop {

struct Keyframe {
  int index = 0;
  double timestamp = 0.0;
  Pose pose;              // odometry estimate at creation
  double traveled = 0.0;  // m, cumulative at creation
  PointCloud submap;      // keyframe-centered, world-aligned; may be released after use
  CartContext descriptor;          // heading-aligned encoding
  CartContext descriptor_flipped;  // double_flip(descriptor)
};

}  // namespace radarloop
