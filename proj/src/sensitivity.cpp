#include "halfcar/sensitivity.hpp"

#include <cmath>

#include <Eigen/Dense>

namespace halfcar {

BoxProblem ParametricProblem::at(const Eigen::VectorXd& theta) const {
  BoxProblem prob;
  prob.lower = lower;
  prob.upper = upper;
  auto v = value;
  auto g = gradient;
  prob.value = [v, theta](const Eigen::VectorXd& z) { return v(z, theta); };
  prob.gradient = [g, theta](const Eigen::VectorXd& z) { return g(z, theta); };
  return prob;
}

ParametricProblem make_parametric_problem(const OcpConfig& cfg,
                                          const HalfCarParams& p,
                                          FdScheme scheme) {
  cfg.validate();
  ParametricProblem prob;
  prob.lower = Eigen::VectorXd::Constant(2 * cfg.horizon, cfg.u_min);
  prob.upper = Eigen::VectorXd::Constant(2 * cfg.horizon, cfg.u_max);
  prob.state_dim = 8;
  prob.road_grid_points = cfg.horizon + 1;
  auto split = [](const Eigen::VectorXd& theta) {
    const HalfCarState x0 = HalfCarState::from_vector(theta.head<8>());
    const HorizonRoad road = HorizonRoad::from_flat(theta.tail(theta.size() - 8));
    return std::pair{x0, road};
  };
  prob.value = [cfg, p, split](const Eigen::VectorXd& z, const Eigen::VectorXd& theta) {
    const auto [x0, road] = split(theta);
    return objective(cfg, p, x0, z, road);
  };
  prob.gradient = [cfg, p, split, scheme](const Eigen::VectorXd& z,
                                          const Eigen::VectorXd& theta) {
    const auto [x0, road] = split(theta);
    return objective_gradient(cfg, p, x0, z, road, scheme);
  };
  return prob;
}

namespace {

double parameter_step(const ParametricProblem& prob, const SensitivityPolicy& policy,
                      int index) {
  if (index < prob.state_dim) {
    return policy.state_step * std::max(1.0, std::abs(prob.theta0[index]));
  }
  const int m = prob.road_grid_points;
  const int r = index - prob.state_dim;
  // flat road layout: [front heights; front rates; rear heights; rear rates]
  const bool is_rate = (r >= m && r < 2 * m) || r >= 3 * m;
  return is_rate ? policy.rate_step : policy.height_step;
}

}  // namespace

SensitivityBundle compute_sensitivities(const ParametricProblem& problem,
                                        const KktPoint& point,
                                        const SensitivityPolicy& policy) {
  const int nz = int(point.z.size());
  const int ntheta = int(problem.theta0.size());
  if (problem.state_dim + 4 * problem.road_grid_points != ntheta) {
    throw InvalidInputError("parametric problem layout inconsistent with theta0");
  }

  SensitivityBundle bundle;
  bundle.base_u = point.z;
  bundle.base_x = problem.theta0.head(problem.state_dim);
  bundle.base_w = problem.theta0.tail(ntheta - problem.state_dim);
  bundle.active_set = point.active_set;
  bundle.lower = problem.lower;
  bundle.upper = problem.upper;
  bundle.du_dx = Eigen::MatrixXd::Zero(nz, problem.state_dim);
  bundle.du_dw = Eigen::MatrixXd::Zero(nz, ntheta - problem.state_dim);
  bundle.regular = point.regular;
  if (!point.regular) return bundle;  // diagnostics only

  const auto& free = point.free_indices;
  const int nf = int(free.size());
  if (nf == 0) return bundle;  // fully bound-active solution does not move

  Eigen::LLT<Eigen::MatrixXd> llt(point.reduced_hessian);
  if (llt.info() != Eigen::Success) {
    throw SensitivityUnavailableError("reduced Hessian is numerically singular");
  }

  Eigen::VectorXd theta = problem.theta0;
  for (int m = 0; m < ntheta; ++m) {
    const double eps = parameter_step(problem, policy, m);
    theta[m] = problem.theta0[m] + eps;
    const Eigen::VectorXd gp = problem.gradient(point.z, theta);
    theta[m] = problem.theta0[m] - eps;
    const Eigen::VectorXd gm = problem.gradient(point.z, theta);
    theta[m] = problem.theta0[m];

    Eigen::VectorXd cross(nf);
    for (int r = 0; r < nf; ++r) {
      cross[r] = (gp[free[r]] - gm[free[r]]) / (2.0 * eps);
    }
    const Eigen::VectorXd col = -llt.solve(cross);
    for (int r = 0; r < nf; ++r) {
      if (m < problem.state_dim) {
        bundle.du_dx(free[r], m) = col[r];
      } else {
        bundle.du_dw(free[r], m - problem.state_dim) = col[r];
      }
    }
  }
  return bundle;
}

UpdateReport apply_update(const SensitivityBundle& bundle,
                          const HalfCarState& measured_x,
                          const HorizonRoad& measured_w,
                          const TrustThresholds& trust) {
  if (!bundle.regular) {
    throw UpdateRefusedError("sensitivity update refused: bundle is not regular");
  }
  const Eigen::VectorXd dx = measured_x.to_vector() - bundle.base_x;
  const Eigen::VectorXd dw = measured_w.to_flat() - bundle.base_w;
  if (dw.size() != bundle.du_dw.cols()) {
    throw InvalidInputError("measured road parameter dimension mismatch");
  }

  UpdateReport report;
  // the trust thresholds are lengths in meters, so they are compared against
  // the metric part of each deviation: state positions and road heights
  // (velocity and rate deviations ride along without a threshold of their own)
  const int grid = int(dw.size()) / 4;
  report.state_deviation_norm = dx.head<4>().norm();
  report.road_deviation_norm = std::sqrt(dw.segment(0, grid).squaredNorm() +
                                         dw.segment(2 * grid, grid).squaredNorm());

  const Eigen::VectorXd raw = bundle.base_u + bundle.du_dx * dx + bundle.du_dw * dw;
  report.updated_u = raw.cwiseMax(bundle.lower).cwiseMin(bundle.upper);
  for (int j = 0; j < raw.size(); ++j) {
    if (raw[j] < bundle.lower[j] || raw[j] > bundle.upper[j]) {
      report.clamped_components.push_back(j);
      if (bundle.active_set[j] == BoundStatus::Free) report.structure_change = true;
    }
  }
  if (report.state_deviation_norm > trust.state_norm ||
      report.road_deviation_norm > trust.road_norm) {
    report.structure_change = true;
  }
  return report;
}

bool detect_structure_change(const SensitivityBundle& bundle,
                             const Eigen::VectorXd& candidate_raw_u,
                             int horizon_check_index) {
  if (candidate_raw_u.size() != bundle.base_u.size()) {
    throw InvalidInputError("candidate control dimension mismatch");
  }
  for (int j = 0; j < candidate_raw_u.size(); ++j) {
    if (j / 2 > horizon_check_index) continue;
    const double v = candidate_raw_u[j];
    if (v < bundle.lower[j] || v > bundle.upper[j]) return true;
    BoundStatus status = BoundStatus::Free;
    if (v <= bundle.lower[j]) {
      status = BoundStatus::AtLower;
    } else if (v >= bundle.upper[j]) {
      status = BoundStatus::AtUpper;
    }
    if (status != bundle.active_set[j]) return true;
  }
  return false;
}

}  // namespace halfcar
