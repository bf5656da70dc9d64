#include "radarloop/config.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace radarloop {

namespace {

using nlohmann::json;

// Reads `key` into `value` if present and records it as consumed.
template <typename T>
void read(const json& j, const char* key, T& value, std::vector<std::string>& seen) {
  seen.emplace_back(key);
  if (j.contains(key)) value = j.at(key).get<T>();
}

void reject_unknown(const json& j, const std::vector<std::string>& seen, const std::string& where) {
  for (const auto& item : j.items()) {
    if (std::find(seen.begin(), seen.end(), item.key()) == seen.end()) {
      throw std::invalid_argument("unknown config key '" + where + item.key() + "'");
    }
  }
}

}  // namespace

void PipelineConfig::validate() const {
  if (!(keyframe_spacing > 0.0)) throw std::invalid_argument("config: s must be positive");
  descriptor.validate();
  odometry_similarity.validate();
  retrieval.validate();
  if (y_th && !(*y_th >= 0.0 && *y_th < 1.0)) throw std::invalid_argument("config: y_th must lie in [0, 1)");
  if (optimize_every < 0) throw std::invalid_argument("config: optimize_every must be >= 0");
  if (graph.min_loop_gap > retrieval.exclusion_gap) {
    throw std::invalid_argument("config: graph loop gap exceeds the retrieval exclusion gap");
  }
}

PipelineConfig default_config_for(const std::string& preset) {
  PipelineConfig config;
  const bool self_similar = preset == "corridor_with_side_tunnels";
  config.retrieval.sequence_length = self_similar ? 15 : 6;
  // A wide basin lets evenly spaced structure pull alignments onto the
  // neighbouring repetition.
  if (self_similar) config.registration.coarse_cell_size = 0.0;
  return config;
}

std::string config_to_json(const PipelineConfig& c) {
  json j;
  j["s"] = c.keyframe_spacing;
  j["nu"] = c.voxel.resolution;
  j["r_a"] = c.voxel.radius;
  j["voxel_capacity"] = c.voxel.capacity;
  j["r_lo"] = c.descriptor.r_lo;
  j["r_la"] = c.descriptor.r_la;
  j["n_lo"] = c.descriptor.n_lo;
  j["n_la"] = c.descriptor.n_la;
  j["encoding"] = to_string(c.descriptor.mode);
  j["balancing_weight"] = c.descriptor.balancing_weight;
  j["sigma_trans"] = c.odometry_similarity.sigma_trans;
  j["sigma_rot"] = c.odometry_similarity.sigma_rot;
  j["epsilon_trans"] = c.odometry_similarity.epsilon_trans;
  j["epsilon_rot"] = c.odometry_similarity.epsilon_rot;
  j["w"] = c.retrieval.sequence_length;
  j["k"] = c.retrieval.candidates;
  j["exclusion_gap"] = c.retrieval.exclusion_gap;
  j["descriptor_weight"] = c.retrieval.descriptor_weight;
  j["y_th"] = c.y_th ? json(*c.y_th) : json(nullptr);
  j["ransac"] = {{"max_iterations", c.ransac.max_iterations},
                 {"inlier_threshold", c.ransac.inlier_threshold},
                 {"min_inlier_fraction", c.ransac.min_inlier_fraction}};
  const auto& r = c.registration;
  j["registration"] = {{"cell_size", r.cell_size},
                       {"min_points", r.min_points},
                       {"lambda_floor", r.lambda_floor},
                       {"correspondence_radius", r.correspondence_radius},
                       {"huber_delta", r.huber_delta},
                       {"inlier_threshold", r.inlier_threshold},
                       {"max_iterations", r.max_iterations},
                       {"step_tolerance", r.step_tolerance},
                       {"min_correspondences", r.min_correspondences},
                       {"max_rotation_change_deg", r.max_rotation_change_deg},
                       {"failure_cost", r.failure_cost},
                       {"coarse_cell_size", r.coarse_cell_size}};
  j["graph"] = {{"odom_trans_ratio", c.graph.odom_trans_ratio},
                {"odom_trans_min", c.graph.odom_trans_min},
                {"odom_rot_deg", c.graph.odom_rot_deg},
                {"loop_trans", c.graph.loop_trans},
                {"loop_rot_deg", c.graph.loop_rot_deg},
                {"min_loop_gap", c.graph.min_loop_gap},
                {"max_iterations", c.optimizer.max_iterations},
                {"relative_decrease", c.optimizer.relative_decrease},
                {"robust_loops", c.optimizer.robust_loops},
                {"huber_delta", c.optimizer.huber_delta}};
  j["optimize_every"] = c.optimize_every;
  j["loops_enabled"] = c.loops_enabled;
  j["single_thread"] = c.single_thread;
  j["seed"] = c.seed;
  j["label_trans"] = c.labels.max_translation;
  j["label_rot"] = c.labels.max_rotation;
  j["tp_trans"] = c.criteria.tp_trans;
  j["tp_rot"] = c.criteria.tp_rot;
  j["gtp_radius"] = c.criteria.gtp_radius;
  j["kitti_segments"] = c.kitti_segments;
  return j.dump(2);
}

PipelineConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  PipelineConfig c;
  std::vector<std::string> seen;
  read(j, "s", c.keyframe_spacing, seen);
  read(j, "nu", c.voxel.resolution, seen);
  read(j, "r_a", c.voxel.radius, seen);
  read(j, "voxel_capacity", c.voxel.capacity, seen);
  read(j, "r_lo", c.descriptor.r_lo, seen);
  read(j, "r_la", c.descriptor.r_la, seen);
  read(j, "n_lo", c.descriptor.n_lo, seen);
  read(j, "n_la", c.descriptor.n_la, seen);
  std::string encoding = to_string(c.descriptor.mode);
  read(j, "encoding", encoding, seen);
  c.descriptor.mode = encoding_from_string(encoding);
  read(j, "balancing_weight", c.descriptor.balancing_weight, seen);
  read(j, "sigma_trans", c.odometry_similarity.sigma_trans, seen);
  read(j, "sigma_rot", c.odometry_similarity.sigma_rot, seen);
  read(j, "epsilon_trans", c.odometry_similarity.epsilon_trans, seen);
  read(j, "epsilon_rot", c.odometry_similarity.epsilon_rot, seen);
  read(j, "w", c.retrieval.sequence_length, seen);
  read(j, "k", c.retrieval.candidates, seen);
  read(j, "exclusion_gap", c.retrieval.exclusion_gap, seen);
  read(j, "descriptor_weight", c.retrieval.descriptor_weight, seen);
  seen.emplace_back("y_th");
  if (j.contains("y_th") && !j.at("y_th").is_null()) c.y_th = j.at("y_th").get<double>();

  seen.emplace_back("ransac");
  if (j.contains("ransac")) {
    const json& s = j.at("ransac");
    std::vector<std::string> sub;
    read(s, "max_iterations", c.ransac.max_iterations, sub);
    read(s, "inlier_threshold", c.ransac.inlier_threshold, sub);
    read(s, "min_inlier_fraction", c.ransac.min_inlier_fraction, sub);
    reject_unknown(s, sub, "ransac.");
  }
  seen.emplace_back("registration");
  if (j.contains("registration")) {
    const json& s = j.at("registration");
    std::vector<std::string> sub;
    auto& r = c.registration;
    read(s, "cell_size", r.cell_size, sub);
    read(s, "min_points", r.min_points, sub);
    read(s, "lambda_floor", r.lambda_floor, sub);
    read(s, "correspondence_radius", r.correspondence_radius, sub);
    read(s, "huber_delta", r.huber_delta, sub);
    read(s, "inlier_threshold", r.inlier_threshold, sub);
    read(s, "max_iterations", r.max_iterations, sub);
    read(s, "step_tolerance", r.step_tolerance, sub);
    read(s, "min_correspondences", r.min_correspondences, sub);
    read(s, "max_rotation_change_deg", r.max_rotation_change_deg, sub);
    read(s, "failure_cost", r.failure_cost, sub);
    read(s, "coarse_cell_size", r.coarse_cell_size, sub);
    reject_unknown(s, sub, "registration.");
  }
  seen.emplace_back("graph");
  if (j.contains("graph")) {
    const json& s = j.at("graph");
    std::vector<std::string> sub;
    read(s, "odom_trans_ratio", c.graph.odom_trans_ratio, sub);
    read(s, "odom_trans_min", c.graph.odom_trans_min, sub);
    read(s, "odom_rot_deg", c.graph.odom_rot_deg, sub);
    read(s, "loop_trans", c.graph.loop_trans, sub);
    read(s, "loop_rot_deg", c.graph.loop_rot_deg, sub);
    read(s, "min_loop_gap", c.graph.min_loop_gap, sub);
    read(s, "max_iterations", c.optimizer.max_iterations, sub);
    read(s, "relative_decrease", c.optimizer.relative_decrease, sub);
    read(s, "robust_loops", c.optimizer.robust_loops, sub);
    read(s, "huber_delta", c.optimizer.huber_delta, sub);
    reject_unknown(s, sub, "graph.");
  }
  read(j, "optimize_every", c.optimize_every, seen);
  read(j, "loops_enabled", c.loops_enabled, seen);
  read(j, "single_thread", c.single_thread, seen);
  read(j, "seed", c.seed, seen);
  read(j, "label_trans", c.labels.max_translation, seen);
  read(j, "label_rot", c.labels.max_rotation, seen);
  read(j, "tp_trans", c.criteria.tp_trans, seen);
  read(j, "tp_rot", c.criteria.tp_rot, seen);
  read(j, "gtp_radius", c.criteria.gtp_radius, seen);
  read(j, "kitti_segments", c.kitti_segments, seen);
  reject_unknown(j, seen, "");
  c.validate();
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return config_from_json(ss.str());
}

void save_config(const std::string& path, const PipelineConfig& config) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << config_to_json(config) << '\n';
}

}  // namespace radarloop
