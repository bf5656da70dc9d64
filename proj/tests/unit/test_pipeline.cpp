#include "radarloop/config.hpp"
#include "radarloop/pipeline.hpp"
#include "radarloop/radar_sim.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace radarloop;

namespace {

// 60 m of the campus street driven out and back: about 40 keyframes with a
// reverse revisit, enough for retrieval to produce candidates.
struct ShortRun {
  ScanSequence scans;
  Trajectory gt;
};

const ShortRun& short_run() {
  static const ShortRun run = [] {
    SimulationSetup setup = make_preset("campus_loop");
    const double h = setup.waypoints.front().z();
    const std::vector<Vec3> wp = {{0.0, 0.0, h}, {60.0, 0.0, h}, {0.0, 0.0, h}};
    const auto traj = generate_trajectory(wp, setup.speed, setup.scan_rate);
    const auto seq = simulate_sequence(setup.scene, traj, setup.radar, setup.imu, 11);
    return ShortRun{{header_from(setup.radar), seq.scans}, seq.ground_truth};
  }();
  return run;
}

const SlamResult& training_run() {
  static const SlamResult r = run_slam(short_run().scans, default_config_for("campus_loop"), nullptr);
  return r;
}

void expect_same_candidates(const std::vector<LoopCandidate>& a, const std::vector<LoopCandidate>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].query, b[i].query);
    EXPECT_EQ(a[i].candidate, b[i].candidate);
    EXPECT_EQ(a[i].mode, b[i].mode);
    EXPECT_EQ(a[i].quality.C_f, b[i].quality.C_f);
    EXPECT_EQ(a[i].quality.C_o, b[i].quality.C_o);
    EXPECT_EQ(a[i].relative.translation, b[i].relative.translation);
  }
}

}  // namespace

TEST(Config, DefaultsRoundTrip) {
  const PipelineConfig c;
  EXPECT_EQ(config_from_json(config_to_json(c)), c);
  EXPECT_EQ(config_from_json("{}"), c);
}

TEST(Config, ChangedValuesRoundTrip) {
  PipelineConfig c = default_config_for("corridor_with_side_tunnels");
  c.keyframe_spacing = 2.5;
  c.descriptor.n_lo = 32;
  c.retrieval.candidates = 5;
  c.y_th = 0.37;
  c.registration.inlier_threshold = 2.0;
  c.registration.max_rotation_change_deg = 25.0;
  c.registration.coarse_cell_size = 3.0;
  c.optimizer.robust_loops = true;
  c.seed = 99;
  c.kitti_segments = {10.0, 20.0};
  const PipelineConfig back = config_from_json(config_to_json(c));
  EXPECT_EQ(back, c);
  ASSERT_TRUE(back.y_th.has_value());
  EXPECT_EQ(*back.y_th, 0.37);
}

TEST(Config, PartialKeysKeepDefaults) {
  const PipelineConfig c = config_from_json(R"({"w": 9, "registration": {"cell_size": 2.5}})");
  EXPECT_EQ(c.retrieval.sequence_length, 9);
  EXPECT_EQ(c.registration.cell_size, 2.5);
  EXPECT_EQ(c.registration.huber_delta, PipelineConfig{}.registration.huber_delta);
  EXPECT_FALSE(c.y_th.has_value());
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(config_from_json(R"({"bogus": 1})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"registration": {"bogus": 1}})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"y_th": 1.5})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"s": 0})"), std::invalid_argument);
  EXPECT_THROW(config_from_json(R"({"w": 0})"), std::invalid_argument);
  EXPECT_THROW(load_config("/nonexistent/config.json"), std::runtime_error);
}

TEST(Config, PresetDefaults) {
  EXPECT_EQ(default_config_for("campus_loop").retrieval.sequence_length, 6);
  EXPECT_EQ(default_config_for("corridor_with_side_tunnels").retrieval.sequence_length, 15);
  EXPECT_EQ(default_config_for("corridor_with_side_tunnels").registration.coarse_cell_size, 0.0);
}

TEST(Config, FileRoundTrip) {
  PipelineConfig c;
  c.seed = 7;
  const auto path = std::filesystem::temp_directory_path() / "radarloop_config_test.json";
  save_config(path.string(), c);
  const PipelineConfig back = load_config(path.string());
  std::filesystem::remove(path);
  EXPECT_EQ(back, c);
}

TEST(Pipeline, TrainingRunShape) {
  const auto& run = training_run();
  const auto& scans = short_run().scans;
  EXPECT_EQ(run.odometry.size(), scans.scans.size());
  ASSERT_GT(run.keyframes.size(), 30u);
  EXPECT_EQ(run.keyframe_scans.size(), run.keyframes.size());
  EXPECT_EQ(static_cast<std::size_t>(run.graph.node_count()), run.keyframes.size());
  EXPECT_TRUE(run.loops.empty());
  EXPECT_FALSE(run.candidates.empty());
  const int gap = default_config_for("campus_loop").retrieval.exclusion_gap;
  for (const auto& c : run.candidates) EXPECT_GE(c.query - c.candidate, gap);
  for (std::size_t i = 1; i < run.keyframes.size(); ++i) {
    EXPECT_GT(run.keyframes[i].timestamp, run.keyframes[i - 1].timestamp);
    EXPECT_GE(run.keyframes[i].traveled - run.keyframes[i - 1].traveled, 3.0 - 1e-9);
  }
  // Without loop edges the graph holds the odometry, up to chained round-off.
  for (std::size_t i = 0; i < run.keyframes.size(); ++i) {
    EXPECT_LT((run.graph.node(static_cast<int>(i)).translation - run.keyframes[i].pose.translation).norm(), 1e-9);
  }
}

TEST(Pipeline, DeterministicAndThreadIndependent) {
  PipelineConfig config = default_config_for("campus_loop");
  config.single_thread = true;
  const SlamResult single = run_slam(short_run().scans, config, nullptr);
  expect_same_candidates(single.candidates, training_run().candidates);
  ASSERT_EQ(single.keyframes.size(), training_run().keyframes.size());
  for (std::size_t i = 0; i < single.keyframes.size(); ++i) {
    EXPECT_EQ(single.keyframes[i].pose.translation, training_run().keyframes[i].pose.translation);
  }
}

TEST(Pipeline, NoLoopsPassesOdometryThrough) {
  PipelineConfig config = default_config_for("campus_loop");
  config.loops_enabled = false;
  LoopClassifier accept_all;
  accept_all.theta(5) = 10.0;
  const SlamResult r = run_slam(short_run().scans, config, &accept_all);
  EXPECT_TRUE(r.candidates.empty());
  EXPECT_TRUE(r.loops.empty());
  EXPECT_EQ(r.graph.loop_edge_count(), 0u);
  ASSERT_EQ(r.keyframes.size(), training_run().keyframes.size());
  for (std::size_t i = 0; i < r.keyframes.size(); ++i) {
    EXPECT_EQ(r.keyframes[i].pose.translation, training_run().keyframes[i].pose.translation);
    EXPECT_LT((r.graph.node(static_cast<int>(i)).translation - r.keyframes[i].pose.translation).norm(), 1e-9);
  }
}

TEST(Pipeline, ClassifierInsertsAtMostOneLoopPerQuery) {
  LoopClassifier accept_all;
  accept_all.theta(5) = 10.0;
  const SlamResult r = run_slam(short_run().scans, default_config_for("campus_loop"), &accept_all);
  ASSERT_FALSE(r.loops.empty());
  EXPECT_EQ(r.graph.loop_edge_count(), r.loops.size());
  for (std::size_t i = 1; i < r.loops.size(); ++i) EXPECT_LT(r.loops[i - 1].query, r.loops[i].query);
  for (const auto& l : r.loops) EXPECT_TRUE(l.registered);

  LoopClassifier reject_all;
  reject_all.theta(5) = -10.0;
  const SlamResult none = run_slam(short_run().scans, default_config_for("campus_loop"), &reject_all);
  EXPECT_TRUE(none.loops.empty());
  expect_same_candidates(none.candidates, training_run().candidates);
}

TEST(Pipeline, RescoreMatchesOnlineScores) {
  LoopClassifier clf;
  clf.theta << 0.0, 0.0, -1.0, 0.0, 0.5, 0.2;
  clf.mean << 0.3, 0.3, 3.0, 300.0, 150.0;
  clf.scale << 0.1, 0.1, 2.0, 100.0, 80.0;
  clf.threshold = 0.99;
  const SlamResult online = run_slam(short_run().scans, default_config_for("campus_loop"), &clf);
  std::vector<LoopCandidate> offline = training_run().candidates;
  rescore(offline, clf);
  ASSERT_EQ(offline.size(), online.candidates.size());
  for (std::size_t i = 0; i < offline.size(); ++i) EXPECT_EQ(offline[i].score, online.candidates[i].score);
}

TEST(Pipeline, TrainingProducesUsableModel) {
  const auto outcome = train_classifier(training_run(), short_run().gt, default_config_for("campus_loop"));
  EXPECT_EQ(outcome.corpus.size(), training_run().candidates.size());
  EXPECT_GT(outcome.model.threshold, 0.0);
  EXPECT_LT(outcome.model.threshold, 1.0);
  EXPECT_FALSE(outcome.curve.empty());
  for (const auto& l : outcome.corpus) {
    if (l.positive) {
      EXPECT_LE(l.error.translation, 4.0);
      EXPECT_LE(l.error.rotation, 2.5);
    }
  }
}

TEST(Pipeline, ArtifactsRoundTrip) {
  const auto& run = training_run();
  const auto dir = std::filesystem::temp_directory_path() / "radarloop_artifacts_test";
  std::filesystem::remove_all(dir);
  const PipelineConfig config = default_config_for("campus_loop");
  write_artifacts(dir.string(), run, config);
  const Artifacts back = read_artifacts(dir.string());
  const Artifacts direct = artifacts_of(run);
  EXPECT_EQ(load_config((dir / "config.json").string()), config);
  ASSERT_EQ(back.keyframe_odometry.size(), direct.keyframe_odometry.size());
  for (std::size_t i = 0; i < back.keyframe_odometry.size(); ++i) {
    EXPECT_NEAR(back.keyframe_timestamps[i], direct.keyframe_timestamps[i], 1e-9);
    EXPECT_LT((back.keyframe_odometry[i].translation - direct.keyframe_odometry[i].translation).norm(), 1e-6);
    EXPECT_LT((back.optimized[i].rotation - direct.optimized[i].rotation).norm(), 1e-6);
  }
  ASSERT_EQ(back.candidates.size(), direct.candidates.size());
  for (std::size_t i = 0; i < back.candidates.size(); ++i) {
    EXPECT_EQ(back.candidates[i].query, direct.candidates[i].query);
    EXPECT_EQ(back.candidates[i].mode, direct.candidates[i].mode);
    EXPECT_NEAR(back.candidates[i].quality.C_f, direct.candidates[i].quality.C_f,
                1e-9 * std::max(1.0, direct.candidates[i].quality.C_f));
  }
  for (const char* name : {"odometry.tum", "graph.g2o", "D_sv.csv", "D_ov.csv", "F_sv.csv", "F_ov.csv", "loops.csv"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / name)) << name;
  }
  const EvaluationReport report = evaluate(back, short_run().gt, config);
  EXPECT_EQ(report.keyframes, static_cast<int>(run.keyframes.size()));
  EXPECT_EQ(report.detection.tp + report.detection.fp, 0);
  EXPECT_NEAR(report.odometry_ate, report.optimized_ate, 1e-6);
  write_report(dir.string(), report);
  EXPECT_TRUE(std::filesystem::exists(dir / "metrics.csv"));
  std::filesystem::remove_all(dir);
}
