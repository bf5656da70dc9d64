#include "radarloop/pipeline.hpp"

#include "radarloop/descriptor.hpp"
#include "radarloop/odometry.hpp"
#include "radarloop/registration.hpp"
#include "radarloop/submap.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace radarloop {

namespace fs = std::filesystem;

std::vector<double> SlamResult::keyframe_timestamps() const {
  std::vector<double> out;
  out.reserve(keyframes.size());
  for (const auto& k : keyframes) out.push_back(k.timestamp);
  return out;
}

std::vector<Pose> SlamResult::keyframe_odometry() const {
  std::vector<Pose> out;
  out.reserve(keyframes.size());
  for (const auto& k : keyframes) out.push_back(k.pose);
  return out;
}

Trajectory SlamResult::optimized_trajectory() const {
  Trajectory out;
  for (std::size_t i = 0; i < keyframes.size(); ++i) out.push_back({keyframes[i].timestamp, graph.node(static_cast<int>(i))});
  return out;
}

namespace {

struct SubmapDistributions {
  DistributionMap fine;
  DistributionMap coarse;
};

void register_candidate(LoopCandidate& cand, const std::vector<Keyframe>& keyframes,
                        const std::vector<SubmapDistributions>& distributions, const RegistrationParams& params) {
  const Keyframe& q = keyframes[static_cast<std::size_t>(cand.query)];
  const Keyframe& c = keyframes[static_cast<std::size_t>(cand.candidate)];
  const Pose init = initial_guess(q, c, cand.mode);
  const auto& sq = distributions[static_cast<std::size_t>(cand.query)];
  const auto& sc = distributions[static_cast<std::size_t>(cand.candidate)];
  const auto res = align_coarse_to_fine(sq.fine, sc.fine, sq.coarse, sc.coarse, init, params);
  const auto& dq = sq.fine;
  const auto& dc = sc.fine;
  if (res) {
    cand.registered = true;
    cand.relative = loop_constraint(q.pose, c.pose, res->pose);
    cand.quality = res->quality;
  } else {
    cand.registered = false;
    cand.relative = Pose::identity();
    cand.quality = {params.failure_cost, 0.5 * static_cast<double>(dq.size() + dc.size()), 0.0};
  }
}

}  // namespace

SlamResult run_slam(const ScanSequence& scans, const PipelineConfig& config, const LoopClassifier* classifier) {
  config.validate();
  SlamResult out;
  out.matrices = DistanceMatrices(config.retrieval.exclusion_gap, config.retrieval.sequence_length);
  PoseGraphParams graph_params = config.graph;
  out.graph = PoseGraph(graph_params);

  VoxelGrid grid(config.voxel);
  OdometryState state;
  Vec3 last_velocity = Vec3::Zero();
  std::vector<SubmapDistributions> distributions;
  const double threshold = classifier ? config.y_th.value_or(classifier->threshold) : 1.0;
  double loop_ms = 0.0;
  std::size_t loop_keyframes = 0;

  for (std::size_t k = 0; k < scans.scans.size(); ++k) {
    const RadarScan& scan = scans.scans[k];
    const auto ego = estimate_ego_velocity(scan, config.ransac, mix_seed(config.seed, k));
    Vec3 velocity = last_velocity;
    if (ego) {
      velocity = ego->velocity;
    } else {
      ++out.ransac_failures;
    }
    if (k == 0) {
      state.pose.rotation = from_quaternion(scan.imu_orientation);
    } else {
      const double dt = scan.timestamp - scans.scans[k - 1].timestamp;
      state = integrate(state, velocity, scan.imu_orientation, dt);
    }
    last_velocity = velocity;
    out.odometry.push_back({scan.timestamp, state.pose});
    if (ego) {
      grid.insert_points(ego->static_points, state.pose);
    } else {
      grid.evict(state.pose.translation);
    }

    if (!keyframe_due(state, config.keyframe_spacing)) continue;
    state.keyframe_marks.push_back(state.traveled);

    Keyframe kf;
    kf.index = static_cast<int>(out.keyframes.size());
    kf.timestamp = scan.timestamp;
    kf.pose = state.pose;
    kf.traveled = state.traveled;
    kf.submap = grid.snapshot(state.pose);
    kf.descriptor = encode(kf.submap, state.pose.yaw_deg(), config.descriptor);
    kf.descriptor_flipped = double_flip(kf.descriptor);
    const auto& rp = config.registration;
    SubmapDistributions sd;
    sd.fine = build_distributions(kf.submap, rp.cell_size, rp.min_points, rp.lambda_floor);
    if (rp.coarse_cell_size > 0.0) {
      sd.coarse = build_distributions(kf.submap, rp.coarse_cell_size, rp.min_points, rp.lambda_floor);
    }
    distributions.push_back(std::move(sd));
    kf.submap.clear();
    kf.submap.shrink_to_fit();

    if (kf.index == 0) {
      out.graph.add_first_node(kf.pose);
    } else {
      out.graph.add_odometry_edge(kf.index - 1, out.keyframes.back().pose.inverse() * kf.pose);
    }
    out.keyframes.push_back(std::move(kf));
    out.keyframe_scans.push_back(static_cast<int>(k));
    const Keyframe& query = out.keyframes.back();

    if (!config.loops_enabled) continue;
    const auto t0 = std::chrono::steady_clock::now();
    out.matrices.append_keyframe(query, out.keyframes, config.retrieval, config.odometry_similarity);
    auto cands = retrieve_candidates(out.matrices, query.index, config.retrieval.candidates);
    if (config.single_thread || cands.size() < 2) {
      for (auto& c : cands) register_candidate(c, out.keyframes, distributions, config.registration);
    } else {
      std::vector<std::future<void>> jobs;
      jobs.reserve(cands.size());
      for (auto& c : cands) {
        jobs.push_back(std::async(std::launch::async, [&c, &out, &distributions, &config] {
          register_candidate(c, out.keyframes, distributions, config.registration);
        }));
      }
      for (auto& j : jobs) j.get();
    }
    if (classifier) {
      std::vector<double> scores;
      for (auto& c : cands) {
        c.score = c.registered ? score(*classifier, features_of(c)) : 0.0;
        scores.push_back(c.registered ? c.score : -1.0);
      }
      if (const auto best = select_best(scores, threshold)) {
        const LoopCandidate& loop = cands[*best];
        out.graph.add_loop_edge(loop.query, loop.candidate, loop.relative, loop.score);
        out.loops.push_back(loop);
      }
    }
    out.candidates.insert(out.candidates.end(), cands.begin(), cands.end());
    loop_ms += std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    ++loop_keyframes;

    if (classifier && config.optimize_every > 0 && out.keyframes.size() % static_cast<std::size_t>(config.optimize_every) == 0 &&
        !out.loops.empty()) {
      out.graph.optimize(config.optimizer);
    }
  }
  if (classifier && !out.loops.empty()) out.graph.optimize(config.optimizer);
  out.mean_loop_closure_ms = loop_keyframes ? loop_ms / static_cast<double>(loop_keyframes) : 0.0;
  return out;
}

void rescore(std::vector<LoopCandidate>& candidates, const LoopClassifier& classifier) {
  for (auto& c : candidates) c.score = c.registered ? score(classifier, features_of(c)) : 0.0;
}

std::vector<LabeledCandidate> label_candidates(std::span<const LoopCandidate> candidates,
                                               std::span<const Pose> keyframe_gt, const LabelThresholds& thresholds) {
  std::vector<LabeledCandidate> out;
  out.reserve(candidates.size());
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& c : candidates) {
    LabeledCandidate l;
    l.candidate = c;
    if (c.registered) {
      l.error = relative_pose_error(c.relative, ground_truth_relative(keyframe_gt, c.query, c.candidate));
      l.positive = label(l.error, thresholds);
    } else {
      l.error = {nan, nan};
      l.positive = false;
    }
    out.push_back(l);
  }
  return out;
}

TrainingOutcome train_classifier(const SlamResult& run, const Trajectory& gt, const PipelineConfig& config) {
  const auto timestamps = run.keyframe_timestamps();
  const auto kf_gt = poses_at(gt, timestamps);
  TrainingOutcome out;
  out.corpus = label_candidates(run.candidates, kf_gt, config.labels);
  std::vector<TrainingSample> samples;
  samples.reserve(out.corpus.size());
  for (const auto& l : out.corpus) samples.push_back({features_of(l.candidate), l.positive});
  out.model = train(samples);

  std::vector<LoopCandidate> scored = run.candidates;
  rescore(scored, out.model);
  out.curve = pr_curve(scored, kf_gt, config.retrieval.exclusion_gap, config.criteria);
  out.model.threshold = f1_optimal_threshold(out.curve);
  out.chosen = out.curve.front();
  for (const auto& p : out.curve) {
    if (p.threshold < out.model.threshold) out.chosen = p;
  }
  out.chosen.threshold = out.model.threshold;
  for (std::size_t i = 0; i < scored.size(); ++i) out.corpus[i].candidate.score = scored[i].score;
  return out;
}

void write_corpus(const std::string& path, std::span<const LabeledCandidate> corpus) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << std::setprecision(10);
  for (const auto& l : corpus) {
    const auto& c = l.candidate;
    os << c.query << ' ' << c.candidate << ' ' << to_string(c.mode) << ' ' << c.d_odom << ' ' << c.d_cc << ' '
       << c.quality.C_f << ' ' << c.quality.C_a << ' ' << c.quality.C_o << ' ' << (l.positive ? 1 : 0) << ' '
       << l.error.translation << ' ' << l.error.rotation << '\n';
  }
}

// ---------------------------------------------------------------------------
// Artifacts on disk

namespace {

const char* kCandidateHeader =
    "qidx,cidx,mode,d_filtered,d_joint,d_cc,d_odom,C_f,C_a,C_o,registered,score,tx,ty,tz,qx,qy,qz,qw";

void write_candidates(const std::string& path, std::span<const LoopCandidate> cands) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << kCandidateHeader << '\n' << std::setprecision(12);
  for (const auto& c : cands) {
    const Quat q = to_quaternion(c.relative.rotation);
    const Vec3& t = c.relative.translation;
    os << c.query << ',' << c.candidate << ',' << to_string(c.mode) << ',' << c.d_filtered << ',' << c.d_joint << ','
       << c.d_cc << ',' << c.d_odom << ',' << c.quality.C_f << ',' << c.quality.C_a << ',' << c.quality.C_o << ','
       << (c.registered ? 1 : 0) << ',' << c.score << ',' << t.x() << ',' << t.y() << ',' << t.z() << ',' << q.x()
       << ',' << q.y() << ',' << q.z() << ',' << q.w() << '\n';
  }
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

std::vector<LoopCandidate> read_candidates(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<LoopCandidate> out;
  std::string line;
  std::getline(is, line);  // header
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 19) throw std::runtime_error("malformed candidate line in " + path);
    LoopCandidate c;
    c.query = std::stoi(f[0]);
    c.candidate = std::stoi(f[1]);
    c.mode = viewpoint_from_string(f[2]);
    c.d_filtered = std::stod(f[3]);
    c.d_joint = std::stod(f[4]);
    c.d_cc = std::stod(f[5]);
    c.d_odom = std::stod(f[6]);
    c.quality = {std::stod(f[7]), std::stod(f[8]), std::stod(f[9])};
    c.registered = f[10] == "1";
    c.score = std::stod(f[11]);
    c.relative = Pose(from_quaternion(Quat(std::stod(f[18]), std::stod(f[15]), std::stod(f[16]), std::stod(f[17]))),
                      Vec3(std::stod(f[12]), std::stod(f[13]), std::stod(f[14])));
    out.push_back(c);
  }
  return out;
}

void write_matrix_file(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_matrix_csv(os, m);
}

}  // namespace

Artifacts artifacts_of(const SlamResult& result) {
  Artifacts a;
  a.keyframe_timestamps = result.keyframe_timestamps();
  a.keyframe_odometry = result.keyframe_odometry();
  a.optimized = result.graph.nodes();
  a.candidates = result.candidates;
  a.loops = result.loops;
  return a;
}

void write_artifacts(const std::string& dir, const SlamResult& result, const PipelineConfig& config) {
  fs::create_directories(dir);
  const fs::path d(dir);
  save_config((d / "config.json").string(), config);
  write_tum_file((d / "odometry.tum").string(), result.odometry);
  write_tum_file((d / "optimized.tum").string(), result.optimized_trajectory());
  {
    std::ofstream os(d / "keyframes.csv");
    os << "index,scan,timestamp,traveled,tx,ty,tz,qx,qy,qz,qw\n" << std::setprecision(12);
    for (std::size_t i = 0; i < result.keyframes.size(); ++i) {
      const auto& k = result.keyframes[i];
      const Quat q = to_quaternion(k.pose.rotation);
      os << k.index << ',' << result.keyframe_scans[i] << ',' << k.timestamp << ',' << k.traveled << ','
         << k.pose.translation.x() << ',' << k.pose.translation.y() << ',' << k.pose.translation.z() << ',' << q.x()
         << ',' << q.y() << ',' << q.z() << ',' << q.w() << '\n';
    }
  }
  write_candidates((d / "candidates.csv").string(), result.candidates);
  write_candidates((d / "loops.csv").string(), result.loops);
  write_matrix_file((d / "D_sv.csv").string(), result.matrices.dense_joint(ViewpointMode::Similar));
  write_matrix_file((d / "D_ov.csv").string(), result.matrices.dense_joint(ViewpointMode::Opposing));
  write_matrix_file((d / "F_sv.csv").string(), result.matrices.dense_filtered(ViewpointMode::Similar));
  write_matrix_file((d / "F_ov.csv").string(), result.matrices.dense_filtered(ViewpointMode::Opposing));
  std::ofstream g2o(d / "graph.g2o");
  result.graph.write_g2o(g2o);
}

Artifacts read_artifacts(const std::string& dir) {
  const fs::path d(dir);
  Artifacts a;
  {
    std::ifstream is(d / "keyframes.csv");
    if (!is) throw std::runtime_error("missing keyframes.csv in " + dir);
    std::string line;
    std::getline(is, line);
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      const auto f = split(line, ',');
      if (f.size() != 11) throw std::runtime_error("malformed keyframes.csv");
      a.keyframe_timestamps.push_back(std::stod(f[2]));
      a.keyframe_odometry.emplace_back(
          from_quaternion(Quat(std::stod(f[10]), std::stod(f[7]), std::stod(f[8]), std::stod(f[9]))),
          Vec3(std::stod(f[4]), std::stod(f[5]), std::stod(f[6])));
    }
  }
  for (const auto& p : read_tum_file((d / "optimized.tum").string())) a.optimized.push_back(p.pose);
  if (a.optimized.size() != a.keyframe_odometry.size()) {
    throw std::runtime_error("optimized.tum and keyframes.csv disagree in length");
  }
  a.candidates = read_candidates((d / "candidates.csv").string());
  a.loops = read_candidates((d / "loops.csv").string());
  return a;
}

EvaluationReport evaluate(const Artifacts& artifacts, const Trajectory& gt, const PipelineConfig& config) {
  EvaluationReport r;
  const auto kf_gt = poses_at(gt, artifacts.keyframe_timestamps);
  const int gap = config.retrieval.exclusion_gap;
  r.keyframes = static_cast<int>(kf_gt.size());
  r.candidates = static_cast<int>(artifacts.candidates.size());
  r.detection = classify_loops(artifacts.loops, kf_gt, gap, config.criteria);
  r.curve = pr_curve(artifacts.candidates, kf_gt, gap, config.criteria);
  r.recall_at_precision_1 = recall_at_full_precision(r.curve);
  r.odometry_kitti = kitti_metric(artifacts.keyframe_odometry, kf_gt, config.kitti_segments);
  r.optimized_kitti = kitti_metric(artifacts.optimized, kf_gt, config.kitti_segments);
  if (kf_gt.size() >= 3) {
    r.odometry_ate = ate(artifacts.keyframe_odometry, kf_gt);
    r.optimized_ate = ate(artifacts.optimized, kf_gt);
  }
  return r;
}

void write_report(const std::string& dir, const EvaluationReport& r) {
  fs::create_directories(dir);
  const fs::path d(dir);
  {
    std::ofstream os(d / "metrics.csv");
    os << "metric,value\n" << std::setprecision(10);
    os << "keyframes," << r.keyframes << '\n';
    os << "candidates," << r.candidates << '\n';
    os << "tp," << r.detection.tp << '\n';
    os << "fp," << r.detection.fp << '\n';
    os << "gtp," << r.detection.gtp << '\n';
    os << "precision," << r.detection.precision << '\n';
    os << "recall," << r.detection.recall << '\n';
    os << "f1," << r.detection.f1 << '\n';
    os << "recall_at_precision_1," << r.recall_at_precision_1 << '\n';
    os << "odometry_t_rel," << r.odometry_kitti.t_rel << '\n';
    os << "odometry_r_rel," << r.odometry_kitti.r_rel << '\n';
    os << "optimized_t_rel," << r.optimized_kitti.t_rel << '\n';
    os << "optimized_r_rel," << r.optimized_kitti.r_rel << '\n';
    os << "odometry_ate," << r.odometry_ate << '\n';
    os << "optimized_ate," << r.optimized_ate << '\n';
  }
  std::ofstream os(d / "pr_curve.csv");
  os << "y_th,P,R,F1\n" << std::setprecision(10);
  for (const auto& p : r.curve) os << p.threshold << ',' << p.precision << ',' << p.recall << ',' << p.f1 << '\n';
}

}  // namespace radarloop
