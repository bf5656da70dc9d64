#include "radarloop/verification.hpp"

#include <nlohmann/json.hpp>

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace radarloop {

const std::array<std::string, kNumFeatures>& feature_names() {
  static const std::array<std::string, kNumFeatures> names = {"d_odom", "d_cc", "C_f", "C_a", "C_o"};
  return names;
}

FeatureVector features_of(const LoopCandidate& c) {
  FeatureVector x;
  x << c.d_odom, c.d_cc, c.quality.C_f, c.quality.C_a, c.quality.C_o;
  return x;
}

FeatureVector LoopClassifier::standardize(const FeatureVector& x) const {
  return ((x - mean).array() / scale.array()).matrix();
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double score(const LoopClassifier& clf, const FeatureVector& x) {
  const FeatureVector z = clf.standardize(x);
  return sigmoid(clf.theta.head<kNumFeatures>().dot(z) + clf.theta(kNumFeatures));
}

RegistrationError relative_pose_error(const Pose& estimate, const Pose& ground_truth) {
  const Pose e = ground_truth.inverse() * estimate;
  return {e.translation.norm(), rotation_angle_deg(e.rotation)};
}

bool label(const RegistrationError& error, const LabelThresholds& thresholds) {
  return error.translation <= thresholds.max_translation && error.rotation <= thresholds.max_rotation;
}

namespace {

// log(1 + exp(z)) without overflow.
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

double training_objective(const ThetaVector& theta, const std::vector<FeatureVector>& z, const std::vector<bool>& y,
                          double l2, ThetaVector* gradient) {
  const double n = static_cast<double>(z.size());
  double f = 0.0;
  ThetaVector g = ThetaVector::Zero();
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double a = theta.head<kNumFeatures>().dot(z[i]) + theta(kNumFeatures);
    // -log p(y | a) = softplus(a) - y * a
    f += softplus(a) - (y[i] ? a : 0.0);
    const double r = sigmoid(a) - (y[i] ? 1.0 : 0.0);
    g.head<kNumFeatures>() += r * z[i];
    g(kNumFeatures) += r;
  }
  f /= n;
  g /= n;
  f += 0.5 * l2 * theta.head<kNumFeatures>().squaredNorm();
  g.head<kNumFeatures>() += l2 * theta.head<kNumFeatures>();
  if (gradient) *gradient = g;
  return f;
}

LoopClassifier train(std::span<const TrainingSample> samples, const TrainingParams& params) {
  std::size_t positives = 0;
  for (const auto& s : samples) positives += s.positive ? 1 : 0;
  const std::size_t negatives = samples.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw std::invalid_argument("cannot train loop classifier: corpus has " + std::to_string(positives) +
                                " positive and " + std::to_string(negatives) +
                                " negative samples, both classes are required");
  }

  LoopClassifier clf;
  const double n = static_cast<double>(samples.size());
  for (const auto& s : samples) clf.mean += s.x;
  clf.mean /= n;
  FeatureVector var = FeatureVector::Zero();
  for (const auto& s : samples) var += (s.x - clf.mean).cwiseAbs2();
  var /= n;
  for (int i = 0; i < kNumFeatures; ++i) {
    const double sd = std::sqrt(var(i));
    clf.scale(i) = sd > 1e-12 ? sd : 1.0;
  }

  std::vector<FeatureVector> z;
  std::vector<bool> y;
  z.reserve(samples.size());
  y.reserve(samples.size());
  for (const auto& s : samples) {
    z.push_back(clf.standardize(s.x));
    y.push_back(s.positive);
  }

  using Mat7 = Eigen::Matrix<double, kNumFeatures + 1, kNumFeatures + 1>;
  ThetaVector theta = ThetaVector::Zero();
  ThetaVector grad;
  double f = training_objective(theta, z, y, params.l2, &grad);
  for (int it = 0; it < params.max_iterations && grad.norm() >= params.gradient_tolerance; ++it) {
    Mat7 H = Mat7::Zero();
    for (std::size_t i = 0; i < z.size(); ++i) {
      Eigen::Matrix<double, kNumFeatures + 1, 1> xi;
      xi << z[i], 1.0;
      const double p = sigmoid(theta.dot(xi));
      H.noalias() += p * (1.0 - p) * xi * xi.transpose();
    }
    H /= n;
    for (int i = 0; i < kNumFeatures; ++i) H(i, i) += params.l2;
    H(kNumFeatures, kNumFeatures) += 1e-12;
    const ThetaVector step = H.ldlt().solve(-grad);
    // Backtracking keeps the objective non-increasing when the quadratic
    // model overshoots (nearly separable data).
    double t = 1.0;
    ThetaVector next_grad;
    double next_f = training_objective(theta + t * step, z, y, params.l2, &next_grad);
    while (next_f > f && t > 1e-10) {
      t *= 0.5;
      next_f = training_objective(theta + t * step, z, y, params.l2, &next_grad);
    }
    if (next_f > f) break;
    theta += t * step;
    f = next_f;
    grad = next_grad;
  }
  clf.theta = theta;
  return clf;
}

std::optional<std::size_t> select_best(std::span<const double> scores, double threshold) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!(scores[i] > threshold)) continue;
    if (!best || scores[i] > scores[*best]) best = i;
  }
  return best;
}

std::string classifier_to_json(const LoopClassifier& clf) {
  nlohmann::json j;
  j["features"] = std::vector<std::string>(feature_names().begin(), feature_names().end());
  j["theta"] = std::vector<double>(clf.theta.data(), clf.theta.data() + clf.theta.size());
  j["mean"] = std::vector<double>(clf.mean.data(), clf.mean.data() + clf.mean.size());
  j["scale"] = std::vector<double>(clf.scale.data(), clf.scale.data() + clf.scale.size());
  j["y_th"] = clf.threshold;
  return j.dump(2);
}

LoopClassifier classifier_from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto names = j.at("features").get<std::vector<std::string>>();
  if (names != std::vector<std::string>(feature_names().begin(), feature_names().end())) {
    throw std::runtime_error("model feature order does not match");
  }
  const auto theta = j.at("theta").get<std::vector<double>>();
  const auto mean = j.at("mean").get<std::vector<double>>();
  const auto scale = j.at("scale").get<std::vector<double>>();
  if (theta.size() != kNumFeatures + 1 || mean.size() != kNumFeatures || scale.size() != kNumFeatures) {
    throw std::runtime_error("model vectors have wrong length");
  }
  LoopClassifier clf;
  clf.theta = ThetaVector::Map(theta.data());
  clf.mean = FeatureVector::Map(mean.data());
  clf.scale = FeatureVector::Map(scale.data());
  clf.threshold = j.at("y_th").get<double>();
  if ((clf.scale.array() <= 0.0).any()) throw std::runtime_error("model scales must be positive");
  return clf;
}

void save_classifier(const std::string& path, const LoopClassifier& clf) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  os << classifier_to_json(clf) << '\n';
}

LoopClassifier load_classifier(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open model file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return classifier_from_json(ss.str());
}

}  // namespace radarloop
