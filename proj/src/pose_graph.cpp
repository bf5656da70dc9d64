#include "radarloop/pose_graph.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <stdexcept>

namespace radarloop {

namespace {

Pose retract(const Pose& x, const Vec6& d) {
  return {orthonormalize(x.rotation * so3_exp(d.tail<3>())), x.translation + x.rotation * d.head<3>()};
}

bool positive_definite(const Mat6& m) {
  if (!m.isApprox(m.transpose(), 1e-9)) return false;
  Eigen::SelfAdjointEigenSolver<Mat6> eig(m);
  return eig.eigenvalues().minCoeff() > 0.0;
}

double robust_weight(double chi, double delta) { return chi <= delta ? 1.0 : delta / chi; }

double robust_cost(double chi2, double delta) {
  const double chi = std::sqrt(chi2);
  return chi <= delta ? chi2 : 2.0 * delta * chi - delta * delta;
}

}  // namespace

Mat6 diagonal_information(double sigma_trans, double sigma_rot_deg) {
  if (!(sigma_trans > 0.0) || !(sigma_rot_deg > 0.0)) throw std::invalid_argument("sigmas must be positive");
  Mat6 info = Mat6::Zero();
  const double st = 1.0 / (sigma_trans * sigma_trans);
  const double sr = 1.0 / std::pow(deg2rad(sigma_rot_deg), 2);
  info.diagonal() << st, st, st, sr, sr, sr;
  return info;
}

Vec6 edge_residual(const Pose& xi, const Pose& xj, const Pose& measurement) {
  const Pose e = measurement.inverse() * (xi.inverse() * xj);
  Vec6 r;
  r.head<3>() = e.translation;
  r.tail<3>() = so3_log(e.rotation);
  return r;
}

PoseGraph::PoseGraph(PoseGraphParams params) : params_(params) {}

void PoseGraph::add_first_node(const Pose& pose) {
  if (!nodes_.empty()) throw std::logic_error("pose graph already has a first node");
  nodes_.push_back(pose);
}

void PoseGraph::add_odometry_edge(int i, const Pose& relative) {
  const double sigma_t = std::max(params_.odom_trans_ratio * relative.translation.norm(), params_.odom_trans_min);
  add_odometry_edge(i, relative, diagonal_information(sigma_t, params_.odom_rot_deg));
}

void PoseGraph::add_odometry_edge(int i, const Pose& relative, const Mat6& information) {
  if (i < 0 || i >= node_count()) throw std::out_of_range("add_odometry_edge: node does not exist");
  if (i != node_count() - 1) throw std::invalid_argument("add_odometry_edge: duplicate odometry edge");
  if (!positive_definite(information)) throw std::invalid_argument("add_odometry_edge: information not PD");
  nodes_.push_back(nodes_[i] * relative);
  edges_.push_back({i, i + 1, relative, information, 0.0, false});
}

void PoseGraph::add_loop_edge(int q, int c, const Pose& relative, double score) {
  add_loop_edge(q, c, relative, score, diagonal_information(params_.loop_trans, params_.loop_rot_deg));
}

void PoseGraph::add_loop_edge(int q, int c, const Pose& relative, double score, const Mat6& information) {
  if (q < 0 || c < 0 || q >= node_count() || c >= node_count()) {
    throw std::out_of_range("add_loop_edge: node does not exist");
  }
  if (c >= q) throw std::invalid_argument("add_loop_edge: candidate must precede query");
  if (q - c < params_.min_loop_gap) throw std::invalid_argument("add_loop_edge: pair inside the exclusion gap");
  for (const auto& e : edges_) {
    if (e.loop && e.from == c && e.to == q) throw std::invalid_argument("add_loop_edge: duplicate loop edge");
  }
  if (!positive_definite(information)) throw std::invalid_argument("add_loop_edge: information not PD");
  // Stored as (c -> q): relative = x_c^-1 * x_q.
  edges_.push_back({c, q, relative, information, score, true});
}

std::size_t PoseGraph::loop_edge_count() const {
  return static_cast<std::size_t>(std::count_if(edges_.begin(), edges_.end(), [](const auto& e) { return e.loop; }));
}

void PoseGraph::set_nodes(std::vector<Pose> nodes) {
  if (nodes.size() != nodes_.size()) throw std::invalid_argument("set_nodes: node count mismatch");
  nodes_ = std::move(nodes);
}

double PoseGraph::chi2_of(const std::vector<Pose>& nodes, const OptimizerParams* robust) const {
  double total = 0.0;
  for (const auto& e : edges_) {
    const Vec6 r = edge_residual(nodes[e.from], nodes[e.to], e.relative);
    const double c = r.dot(e.information * r);
    total += (robust && robust->robust_loops && e.loop) ? robust_cost(c, robust->huber_delta) : c;
  }
  return total;
}

double PoseGraph::chi2() const { return chi2_of(nodes_, nullptr); }

OptimizationResult PoseGraph::optimize(const OptimizerParams& params) {
  OptimizationResult result;
  const int n = node_count();
  result.initial_chi2 = chi2_of(nodes_, &params);
  result.final_chi2 = result.initial_chi2;
  if (n < 2) return result;
  // Connectivity: the odometry chain must span all nodes.
  std::vector<bool> chained(static_cast<std::size_t>(n), false);
  chained[0] = true;
  for (const auto& e : edges_) {
    if (!e.loop && e.to == e.from + 1) chained[static_cast<std::size_t>(e.to)] = true;
  }
  if (std::find(chained.begin(), chained.end(), false) != chained.end()) {
    throw std::runtime_error("optimize: odometry chain does not connect all nodes");
  }

  const int dim = 6 * (n - 1);  // node 0 fixed
  double lambda = 1e-6;
  double chi2 = result.initial_chi2;
  constexpr double kStep = 1e-6;

  for (int it = 0; it < params.max_iterations; ++it) {
    if (chi2 < 1e-20) break;
    result.iterations = it + 1;
    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(edges_.size() * 144);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(dim);

    for (const auto& e : edges_) {
      const Pose& xi = nodes_[e.from];
      const Pose& xj = nodes_[e.to];
      const Vec6 r = edge_residual(xi, xj, e.relative);
      double w = 1.0;
      if (params.robust_loops && e.loop) w = robust_weight(std::sqrt(r.dot(e.information * r)), params.huber_delta);
      // Central differences in the right-multiplicative tangent space.
      Eigen::Matrix<double, 6, 6> Ji, Jj;
      for (int k = 0; k < 6; ++k) {
        Vec6 d = Vec6::Zero();
        d(k) = kStep;
        Ji.col(k) = (edge_residual(retract(xi, d), xj, e.relative) - edge_residual(retract(xi, -d), xj, e.relative)) /
                    (2.0 * kStep);
        Jj.col(k) = (edge_residual(xi, retract(xj, d), e.relative) - edge_residual(xi, retract(xj, -d), e.relative)) /
                    (2.0 * kStep);
      }
      const Mat6 W = w * e.information;
      const int bi = 6 * (e.from - 1);
      const int bj = 6 * (e.to - 1);
      auto add_block = [&](int row, int col, const Mat6& blk) {
        for (int a = 0; a < 6; ++a) {
          for (int c = 0; c < 6; ++c) triplets.emplace_back(row + a, col + c, blk(a, c));
        }
      };
      if (e.from > 0) {
        add_block(bi, bi, Ji.transpose() * W * Ji);
        b.segment<6>(bi) -= Ji.transpose() * W * r;
      }
      if (e.to > 0) {
        add_block(bj, bj, Jj.transpose() * W * Jj);
        b.segment<6>(bj) -= Jj.transpose() * W * r;
      }
      if (e.from > 0 && e.to > 0) {
        const Mat6 hij = Ji.transpose() * W * Jj;
        add_block(bi, bj, hij);
        add_block(bj, bi, hij.transpose());
      }
    }
    Eigen::SparseMatrix<double> H(dim, dim);
    H.setFromTriplets(triplets.begin(), triplets.end());
    const Eigen::VectorXd diag = H.diagonal();

    bool accepted = false;
    while (lambda < 1e12) {
      Eigen::SparseMatrix<double> A = H;
      for (int k = 0; k < dim; ++k) A.coeffRef(k, k) += lambda * (diag(k) + 1e-12);
      Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(A);
      if (solver.info() != Eigen::Success) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd dx = solver.solve(b);
      std::vector<Pose> trial = nodes_;
      for (int k = 1; k < n; ++k) trial[k] = retract(nodes_[k], dx.segment<6>(6 * (k - 1)));
      const double trial_chi2 = chi2_of(trial, &params);
      if (trial_chi2 < chi2) {
        const double decrease = (chi2 - trial_chi2) / std::max(chi2, 1e-300);
        nodes_ = std::move(trial);
        chi2 = trial_chi2;
        result.chi2_trace.push_back(chi2);
        lambda = std::max(lambda / 10.0, 1e-12);
        accepted = true;
        if (decrease < params.relative_decrease) lambda = 1e12;  // converged
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted || lambda >= 1e12) break;
  }
  result.final_chi2 = chi2;
  return result;
}

void PoseGraph::write_g2o(std::ostream& os) const {
  os << std::setprecision(12);
  for (int i = 0; i < node_count(); ++i) {
    const Pose& p = nodes_[i];
    const Quat q = to_quaternion(p.rotation);
    os << "VERTEX_SE3:QUAT " << i << ' ' << p.translation.x() << ' ' << p.translation.y() << ' ' << p.translation.z()
       << ' ' << q.x() << ' ' << q.y() << ' ' << q.z() << ' ' << q.w() << '\n';
  }
  for (const auto& e : edges_) {
    const Quat q = to_quaternion(e.relative.rotation);
    const Vec3& t = e.relative.translation;
    os << "EDGE_SE3:QUAT " << e.from << ' ' << e.to << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.x()
       << ' ' << q.y() << ' ' << q.z() << ' ' << q.w();
    for (int r = 0; r < 6; ++r) {
      for (int c = r; c < 6; ++c) os << ' ' << e.information(r, c);
    }
    os << '\n';
  }
}

}  // namespace radarloop
