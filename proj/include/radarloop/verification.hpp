#pragma once

#include "radarloop/geometry.hpp"
#include "radarloop/loop_candidate.hpp"

#include <Eigen/Core>

#include <array>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace radarloop {

constexpr int kNumFeatures = 5;
using FeatureVector = Eigen::Matrix<double, kNumFeatures, 1>;  // without the bias entry
using ThetaVector = Eigen::Matrix<double, kNumFeatures + 1, 1>;

/// Feature order: d_odom, d_cc, C_f, C_a, C_o.
const std::array<std::string, kNumFeatures>& feature_names();
FeatureVector features_of(const LoopCandidate& c);

struct LoopClassifier {
  ThetaVector theta = ThetaVector::Zero();  // last entry multiplies the bias
  FeatureVector mean = FeatureVector::Zero();
  FeatureVector scale = FeatureVector::Ones();
  double threshold = 0.5;  // y_th

  FeatureVector standardize(const FeatureVector& x) const;
};

double sigmoid(double z);
double score(const LoopClassifier& clf, const FeatureVector& x);

struct LabelThresholds {
  double max_translation = 4.0;  // m
  double max_rotation = 2.5;     // deg

  bool operator==(const LabelThresholds&) const = default;
};

struct RegistrationError {
  double translation = 0.0;  // m
  double rotation = 0.0;     // deg
};

/// Error of an estimated relative pose (x_c^-1 * x_q) against ground truth.
RegistrationError relative_pose_error(const Pose& estimate, const Pose& ground_truth);
bool label(const RegistrationError& error, const LabelThresholds& thresholds = {});

struct TrainingSample {
  FeatureVector x = FeatureVector::Zero();
  bool positive = false;
};

struct TrainingParams {
  double l2 = 1e-4;
  double gradient_tolerance = 1e-8;
  int max_iterations = 100;

  bool operator==(const TrainingParams&) const = default;
};

/// Mean negative log-likelihood plus l2/2 * |w|^2 (bias unregularized) on
/// standardized features, and its gradient.
double training_objective(const ThetaVector& theta, const std::vector<FeatureVector>& z, const std::vector<bool>& y,
                          double l2, ThetaVector* gradient);

/// Fits the standardization and weights with Newton iterations. Throws
/// std::invalid_argument if the samples do not contain both classes.
LoopClassifier train(std::span<const TrainingSample> samples, const TrainingParams& params = {});

/// Highest-scoring candidate with score strictly above `threshold`.
std::optional<std::size_t> select_best(std::span<const double> scores, double threshold);

// Model file (JSON).
std::string classifier_to_json(const LoopClassifier& clf);
LoopClassifier classifier_from_json(const std::string& text);
void save_classifier(const std::string& path, const LoopClassifier& clf);
LoopClassifier load_classifier(const std::string& path);

}  // namespace radarloop
