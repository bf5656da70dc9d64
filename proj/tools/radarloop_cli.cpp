#include "radarloop/config.hpp"
#include "radarloop/pipeline.hpp"
#include "radarloop/plots.hpp"
#include "radarloop/radar_sim.hpp"
#include "radarloop/scan_io.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace radarloop;

namespace {

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 1;
  bool seed_given = false;
};

PipelineConfig resolve_config(const CommonOptions& opts, const std::string& fallback_preset = "") {
  PipelineConfig config = opts.config_path.empty() ? default_config_for(fallback_preset) : load_config(opts.config_path);
  if (opts.seed_given) config.seed = opts.seed;
  return config;
}

/// Scene preset recorded next to a simulated scan file, used to choose the
/// default sequence length when no config is given.
std::string sibling_preset(const std::string& scans_path) {
  const fs::path scene = fs::path(scans_path).parent_path() / "scene.json";
  std::ifstream is(scene);
  if (!is) return "";
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return scene_from_json(ss.str()).name;
  } catch (const std::exception&) {
    return "";
  }
}

std::vector<Vec2> xy(const std::vector<Pose>& poses) {
  std::vector<Vec2> out;
  for (const auto& p : poses) out.push_back(p.translation.head<2>());
  return out;
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(cell == "nan" ? std::nan("") : std::stod(cell));
    rows.push_back(row);
  }
  Eigen::MatrixXd m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  }
  return m;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Loop closure detection and verification for 4D radar SLAM"};
  app.require_subcommand(1);
  CommonOptions opts;
  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "Pipeline configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--seed", opts.seed, "Random seed")->each([&](const std::string&) { opts.seed_given = true; });
  };

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scan sequence from a scene preset");
  std::string preset = "campus_loop";
  std::string profile = "short";
  bool noiseless = false;
  sim->add_option("--preset", preset, "corridor_with_side_tunnels | campus_loop | forest_loop");
  sim->add_option("--profile", profile, "short | long radar range profile");
  sim->add_flag("--noiseless", noiseless, "Disable sensor and IMU noise");
  add_common(sim);

  // slam
  auto* slam = app.add_subcommand("slam", "Run odometry, loop closure and pose-graph optimization");
  std::string scans_path, model_path;
  bool no_loops = false, single_thread = false;
  slam->add_option("scans", scans_path, "Scan sequence file")->required()->check(CLI::ExistingFile);
  slam->add_option("--model", model_path, "Loop classifier model")->check(CLI::ExistingFile);
  slam->add_flag("--no-loops", no_loops, "Disable loop closure");
  slam->add_flag("--single-thread", single_thread, "Register candidates sequentially");
  add_common(slam);

  // train
  auto* trn = app.add_subcommand("train", "Train the loop classifier on a sequence with ground truth");
  std::string gt_path;
  trn->add_option("scans", scans_path, "Scan sequence file")->required()->check(CLI::ExistingFile);
  trn->add_option("gt", gt_path, "Ground-truth trajectory (TUM)")->required()->check(CLI::ExistingFile);
  trn->add_flag("--single-thread", single_thread, "Register candidates sequentially");
  add_common(trn);

  // eval
  auto* ev = app.add_subcommand("eval", "Evaluate a slam output directory against ground truth");
  std::string run_dir;
  ev->add_option("run", run_dir, "Directory written by slam")->required()->check(CLI::ExistingDirectory);
  ev->add_option("gt", gt_path, "Ground-truth trajectory (TUM)")->required()->check(CLI::ExistingFile);
  add_common(ev);

  // export-plots
  auto* plots = app.add_subcommand("export-plots", "Render trajectories, PR curve and distance matrices as SVG");
  plots->add_option("run", run_dir, "Directory written by slam")->required()->check(CLI::ExistingDirectory);
  plots->add_option("--gt", gt_path, "Ground-truth trajectory (TUM)")->check(CLI::ExistingFile);
  add_common(plots);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      SimulationSetup setup = make_preset(preset, radar_profile_from_string(profile));
      if (noiseless) {
        setup.radar = RadarConfig::noiseless(setup.radar);
        setup.imu = {0.0, 0.0};
      }
      const auto traj = generate_trajectory(setup.waypoints, setup.speed, setup.scan_rate);
      const auto seq = simulate_sequence(setup.scene, traj, setup.radar, setup.imu, opts.seed);
      fs::create_directories(opts.out_dir);
      const fs::path out(opts.out_dir);
      write_scans_file((out / "scans.txt").string(), {header_from(setup.radar), seq.scans});
      write_tum_file((out / "gt.tum").string(), seq.ground_truth);
      write_text_file((out / "scene.json").string(), scene_to_json(setup.scene) + "\n");
      std::cout << "wrote " << seq.scans.size() << " scans to " << (out / "scans.txt").string() << '\n';
    } else if (slam->parsed()) {
      PipelineConfig config = resolve_config(opts, sibling_preset(scans_path));
      if (no_loops) config.loops_enabled = false;
      if (single_thread) config.single_thread = true;
      std::optional<LoopClassifier> model;
      if (config.loops_enabled) {
        if (model_path.empty()) throw std::runtime_error("loop verification needs --model (or pass --no-loops)");
        model = load_classifier(model_path);
      }
      const ScanSequence scans = read_scans_file(scans_path);
      const SlamResult result = run_slam(scans, config, model ? &*model : nullptr);
      write_artifacts(opts.out_dir, result, config);
      std::cout << "keyframes " << result.keyframes.size() << ", candidates " << result.candidates.size()
                << ", loops " << result.loops.size() << ", loop closure " << result.mean_loop_closure_ms
                << " ms/keyframe\n";
    } else if (trn->parsed()) {
      PipelineConfig config = resolve_config(opts, sibling_preset(scans_path));
      if (single_thread) config.single_thread = true;
      const ScanSequence scans = read_scans_file(scans_path);
      const Trajectory gt = read_tum_file(gt_path);
      const SlamResult run = run_slam(scans, config, nullptr);
      const TrainingOutcome trained = train_classifier(run, gt, config);
      fs::create_directories(opts.out_dir);
      const fs::path out(opts.out_dir);
      save_classifier((out / "model.json").string(), trained.model);
      write_corpus((out / "corpus.txt").string(), trained.corpus);
      std::size_t positives = 0;
      for (const auto& l : trained.corpus) positives += l.positive ? 1 : 0;
      std::cout << "trained on " << trained.corpus.size() << " candidates (" << positives << " positive), y_th "
                << trained.model.threshold << ", training P " << trained.chosen.precision << " R "
                << trained.chosen.recall << " F1 " << trained.chosen.f1 << '\n';
    } else if (ev->parsed()) {
      PipelineConfig config = opts.config_path.empty() ? load_config((fs::path(run_dir) / "config.json").string())
                                                       : load_config(opts.config_path);
      const Artifacts artifacts = read_artifacts(run_dir);
      const EvaluationReport report = evaluate(artifacts, read_tum_file(gt_path), config);
      const std::string out = opts.out_dir == "out" ? run_dir : opts.out_dir;
      write_report(out, report);
      std::cout << "TP " << report.detection.tp << " FP " << report.detection.fp << " GTP " << report.detection.gtp
                << " P " << report.detection.precision << " R " << report.detection.recall << '\n'
                << "ATE odometry " << report.odometry_ate << " m, optimized " << report.optimized_ate << " m\n"
                << "t_rel odometry " << report.odometry_kitti.t_rel << " %, optimized " << report.optimized_kitti.t_rel
                << " %\n";
    } else if (plots->parsed()) {
      const Artifacts artifacts = read_artifacts(run_dir);
      const std::string out = opts.out_dir == "out" ? run_dir : opts.out_dir;
      fs::create_directories(out);
      const fs::path d(out);
      std::vector<PlotSeries> series;
      if (!gt_path.empty()) {
        series.push_back({"ground truth", "black", xy(poses_at(read_tum_file(gt_path), artifacts.keyframe_timestamps))});
      }
      series.push_back({"odometry", "firebrick", xy(artifacts.keyframe_odometry)});
      series.push_back({"optimized", "steelblue", xy(artifacts.optimized)});
      write_text_file((d / "trajectory.svg").string(), trajectory_svg(series, "Keyframe trajectories"));
      if (fs::exists(fs::path(run_dir) / "pr_curve.csv")) {
        std::vector<PrPoint> curve;
        std::ifstream is(fs::path(run_dir) / "pr_curve.csv");
        std::string line;
        std::getline(is, line);
        while (std::getline(is, line)) {
          PrPoint p;
          char c;
          std::stringstream ss(line);
          ss >> p.threshold >> c >> p.precision >> c >> p.recall >> c >> p.f1;
          curve.push_back(p);
        }
        write_text_file((d / "pr_curve.svg").string(), pr_curve_svg(curve, "Precision-recall"));
      }
      for (const std::string name : {"D_sv", "D_ov", "F_sv", "F_ov"}) {
        const fs::path src = fs::path(run_dir) / (name + ".csv");
        if (!fs::exists(src)) continue;
        write_text_file((d / (name + ".svg")).string(), heatmap_svg(read_matrix_csv(src.string()), name));
      }
      std::cout << "plots written to " << out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
