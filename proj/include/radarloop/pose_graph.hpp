#pragma once

#include "radarloop/geometry.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace radarloop {

struct GraphEdge {
  int from = 0;
  int to = 0;
  Pose relative;  // x_from^-1 * x_to
  Mat6 information = Mat6::Identity();  // order: translation, rotation
  double score = 0.0;
  bool loop = false;
};

struct PoseGraphParams {
  double odom_trans_ratio = 0.02;  // sigma_t as a fraction of edge length
  double odom_trans_min = 0.01;    // m
  double odom_rot_deg = 0.5;
  double loop_trans = 0.5;  // m
  double loop_rot_deg = 1.0;
  int min_loop_gap = 20;  // q - c must be at least this

  bool operator==(const PoseGraphParams&) const = default;
};

struct OptimizerParams {
  int max_iterations = 100;
  double relative_decrease = 1e-9;
  bool robust_loops = false;
  double huber_delta = 1.0;  // on the whitened residual norm

  bool operator==(const OptimizerParams&) const = default;
};

struct OptimizationResult {
  double initial_chi2 = 0.0;
  double final_chi2 = 0.0;
  int iterations = 0;
  std::vector<double> chi2_trace;  // after every accepted step
};

Mat6 diagonal_information(double sigma_trans, double sigma_rot_deg);

/// Residual [t; log R] of Z^-1 * Xi^-1 * Xj.
Vec6 edge_residual(const Pose& xi, const Pose& xj, const Pose& measurement);

class PoseGraph {
 public:
  explicit PoseGraph(PoseGraphParams params = {});

  /// Adds the first node; must be called once before adding edges.
  void add_first_node(const Pose& pose);

  /// Appends node i+1 at x_i * relative with an odometry edge (i, i+1). Uses
  /// the default odometry information unless one is given.
  void add_odometry_edge(int i, const Pose& relative);
  void add_odometry_edge(int i, const Pose& relative, const Mat6& information);

  void add_loop_edge(int q, int c, const Pose& relative, double score);
  void add_loop_edge(int q, int c, const Pose& relative, double score, const Mat6& information);

  OptimizationResult optimize(const OptimizerParams& params = {});
  double chi2() const;

  int node_count() const { return static_cast<int>(nodes_.size()); }
  const std::vector<Pose>& nodes() const { return nodes_; }
  const Pose& node(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  void set_nodes(std::vector<Pose> nodes);
  const std::vector<GraphEdge>& edges() const { return edges_; }
  std::size_t loop_edge_count() const;
  const PoseGraphParams& params() const { return params_; }

  /// g2o text (VERTEX_SE3:QUAT / EDGE_SE3:QUAT).
  void write_g2o(std::ostream& os) const;

 private:
  double chi2_of(const std::vector<Pose>& nodes, const OptimizerParams* robust) const;

  PoseGraphParams params_;
  std::vector<Pose> nodes_;
  std::vector<GraphEdge> edges_;
};

}  // namespace radarloop
