#include "radarloop/registration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>

namespace radarloop {

namespace {

using Key = std::array<long, 3>;

Key cell_key(const Vec3& p, double size) {
  return {static_cast<long>(std::floor(p.x() / size)), static_cast<long>(std::floor(p.y() / size)),
          static_cast<long>(std::floor(p.z() / size))};
}

struct KeyHash {
  std::size_t operator()(const Key& k) const {
    return static_cast<std::size_t>(k[0]) * 73856093u ^ static_cast<std::size_t>(k[1]) * 19349663u ^
           static_cast<std::size_t>(k[2]) * 83492791u;
  }
};

/// Hash over candidate means with bins as large as the search radius, so a
/// query only inspects the 27 surrounding bins.
class MeanIndex {
 public:
  MeanIndex(const DistributionMap& map, double radius) : map_(map), radius_(radius) {
    for (std::size_t i = 0; i < map.cells.size(); ++i) bins_[cell_key(map.cells[i].mean, radius)].push_back(i);
  }

  /// Index of the nearest mean within the radius, or -1.
  long nearest(const Vec3& p) const {
    const Key k = cell_key(p, radius_);
    long best = -1;
    double best_d2 = radius_ * radius_;
    for (long dx = -1; dx <= 1; ++dx) {
      for (long dy = -1; dy <= 1; ++dy) {
        for (long dz = -1; dz <= 1; ++dz) {
          const auto it = bins_.find({k[0] + dx, k[1] + dy, k[2] + dz});
          if (it == bins_.end()) continue;
          for (std::size_t idx : it->second) {
            const double d2 = (map_.cells[idx].mean - p).squaredNorm();
            if (d2 < best_d2 || (d2 == best_d2 && static_cast<long>(idx) < best)) {
              best_d2 = d2;
              best = static_cast<long>(idx);
            }
          }
        }
      }
    }
    return best;
  }

 private:
  const DistributionMap& map_;
  double radius_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> bins_;
};

struct Correspondence {
  std::size_t query;
  std::size_t candidate;
};

double huber(double e, double delta) { return e <= delta ? 0.5 * e * e : delta * (e - 0.5 * delta); }

Vec3 residual(const Distribution& q, const Distribution& c, const Pose& T) {
  return c.sqrt_information * (T * q.mean - c.mean);
}

std::vector<Correspondence> associate(const DistributionMap& query, const MeanIndex& index, const Pose& T) {
  std::vector<Correspondence> out;
  out.reserve(query.cells.size());
  for (std::size_t i = 0; i < query.cells.size(); ++i) {
    const long j = index.nearest(T * query.cells[i].mean);
    if (j >= 0) out.push_back({i, static_cast<std::size_t>(j)});
  }
  return out;
}

double total_cost(const DistributionMap& query, const DistributionMap& candidate,
                  const std::vector<Correspondence>& corr, const Pose& T, double delta) {
  double cost = 0.0;
  for (const auto& c : corr) cost += huber(residual(query.cells[c.query], candidate.cells[c.candidate], T).norm(), delta);
  return cost;
}

Pose retract(const Pose& T, const Vec6& delta) {
  return {orthonormalize(T.rotation * so3_exp(delta.tail<3>())), T.translation + T.rotation * delta.head<3>()};
}

}  // namespace

DistributionMap build_distributions(const PointCloud& cloud, double cell_size, int min_points, double lambda_floor) {
  if (!(cell_size > 0.0)) throw std::invalid_argument("build_distributions: cell size must be positive");
  std::map<Key, std::vector<const MapPoint*>> cells;
  for (const auto& p : cloud) cells[cell_key(p.position, cell_size)].push_back(&p);
  DistributionMap out;
  for (const auto& [key, pts] : cells) {
    if (static_cast<int>(pts.size()) < min_points || pts.empty()) continue;
    Vec3 mean = Vec3::Zero();
    for (const auto* p : pts) mean += p->position;
    mean /= static_cast<double>(pts.size());
    Mat3 cov = Mat3::Zero();
    for (const auto* p : pts) {
      const Vec3 d = p->position - mean;
      cov += d * d.transpose();
    }
    cov /= static_cast<double>(pts.size());
    cov.diagonal().array() += lambda_floor;
    Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
    Distribution d;
    d.mean = mean;
    d.covariance = cov;
    d.normal = eig.eigenvectors().col(0).normalized();
    const Mat3 info = eig.eigenvectors() * eig.eigenvalues().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
    d.sqrt_information = Eigen::LLT<Mat3>(info).matrixU();
    d.count = static_cast<int>(pts.size());
    out.cells.push_back(d);
  }
  return out;
}

std::optional<RegistrationResult> align(const DistributionMap& query, const DistributionMap& candidate,
                                        const Pose& initial, const RegistrationParams& params) {
  if (query.empty() || candidate.empty()) return std::nullopt;
  const MeanIndex index(candidate, params.correspondence_radius);
  const double delta = params.huber_delta;

  RegistrationResult result;
  Pose T = initial;
  auto corr = associate(query, index, T);
  if (static_cast<int>(corr.size()) < params.min_correspondences) return std::nullopt;

  double lambda = 1e-4;
  for (int it = 0; it < params.max_iterations; ++it) {
    result.iterations = it + 1;
    if (corr.empty()) break;
    Mat6 H = Mat6::Zero();
    Vec6 g = Vec6::Zero();
    for (const auto& c : corr) {
      const Distribution& qd = query.cells[c.query];
      const Distribution& cd = candidate.cells[c.candidate];
      const Vec3 r = residual(qd, cd, T);
      const double e = r.norm();
      const double w = e <= delta ? 1.0 : delta / e;
      Eigen::Matrix<double, 3, 6> J;
      J.leftCols<3>() = cd.sqrt_information * T.rotation;
      J.rightCols<3>() = -cd.sqrt_information * T.rotation * skew(qd.mean);
      H.noalias() += w * J.transpose() * J;
      g.noalias() += w * J.transpose() * r;
    }
    const double cost = total_cost(query, candidate, corr, T, delta);
    bool accepted = false;
    Vec6 step = Vec6::Zero();
    while (lambda < 1e10) {
      Mat6 A = H;
      A.diagonal() += lambda * (H.diagonal().array() + 1e-9).matrix();
      step = A.ldlt().solve(-g);
      const Pose candidate_T = retract(T, step);
      const double new_cost = total_cost(query, candidate, corr, candidate_T, delta);
      if (new_cost < cost) {
        result.accepted_steps.emplace_back(cost, new_cost);
        T = candidate_T;
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || step.norm() < params.step_tolerance) break;
    corr = associate(query, index, T);
  }

  if (geodesic_angle(initial.rotation, T.rotation, Mat3::Identity()) > params.max_rotation_change_deg) {
    return std::nullopt;
  }
  corr = associate(query, index, T);
  result.pose = T;
  result.quality.C_a = 0.5 * static_cast<double>(query.size() + candidate.size());
  int inliers = 0;
  for (const auto& c : corr) {
    if (residual(query.cells[c.query], candidate.cells[c.candidate], T).norm() <= params.inlier_threshold) ++inliers;
  }
  result.quality.C_o = static_cast<double>(inliers);
  result.quality.C_f =
      corr.empty() ? params.failure_cost
                   : std::min(params.failure_cost,
                              total_cost(query, candidate, corr, T, delta) / static_cast<double>(corr.size()));
  return result;
}

std::optional<RegistrationResult> align_coarse_to_fine(const DistributionMap& query, const DistributionMap& candidate,
                                                       const DistributionMap& coarse_query,
                                                       const DistributionMap& coarse_candidate, const Pose& initial,
                                                       const RegistrationParams& params) {
  Pose start = initial;
  if (params.coarse_cell_size > 0.0) {
    RegistrationParams coarse = params;
    coarse.correspondence_radius *= params.coarse_cell_size / params.cell_size;
    if (const auto pre = align(coarse_query, coarse_candidate, initial, coarse)) start = pre->pose;
  }
  return align(query, candidate, start, params);
}

std::optional<RegistrationResult> align(const PointCloud& query, const DistributionMap& candidate,
                                        const Pose& initial, const RegistrationParams& params) {
  return align(build_distributions(query, params.cell_size, params.min_points, params.lambda_floor), candidate,
               initial, params);
}

Pose initial_guess(const Pose& query, const Pose& candidate, ViewpointMode mode) {
  return {orthonormalize(candidate.rotation * expected_rotation(mode) * query.rotation.transpose()),
          query.translation - candidate.translation};
}

Pose initial_guess(const Keyframe& query, const Keyframe& candidate, ViewpointMode mode) {
  return initial_guess(query.pose, candidate.pose, mode);
}

Pose loop_constraint(const Pose& query_pose, const Pose& candidate_pose, const Pose& submap_alignment) {
  const Mat3 rc_t = candidate_pose.rotation.transpose();
  return {orthonormalize(rc_t * submap_alignment.rotation * query_pose.rotation), rc_t * submap_alignment.translation};
}

}  // namespace radarloop
