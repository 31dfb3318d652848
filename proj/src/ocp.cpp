#include "halfcar/ocp.hpp"

#include <cmath>
#include <limits>

namespace halfcar {

void OcpConfig::validate() const {
  if (horizon < 1) throw InvalidConfigError("horizon must be >= 1");
  if (mu_handling < 0.0 || mu_comfort < 0.0) {
    throw InvalidConfigError("cost weights must be nonnegative");
  }
  if (!(u_min < u_max)) throw InvalidConfigError("control bounds must satisfy lower < upper");
  if (integrator.substeps_per_sample < 1 || !(integrator.sampling_period > 0.0)) {
    throw InvalidConfigError("integrator configuration invalid");
  }
}

Eigen::VectorXd HorizonRoad::to_flat() const {
  const int m = grid_points();
  Eigen::VectorXd flat(4 * m);
  flat.segment(0, m) = front_height;
  flat.segment(m, m) = front_rate;
  flat.segment(2 * m, m) = rear_height;
  flat.segment(3 * m, m) = rear_rate;
  return flat;
}

HorizonRoad HorizonRoad::from_flat(const Eigen::VectorXd& flat) {
  if (flat.size() % 4 != 0) {
    throw InvalidInputError("flat horizon road must have length 4*(N+1)");
  }
  const int m = int(flat.size()) / 4;
  HorizonRoad r;
  r.front_height = flat.segment(0, m);
  r.front_rate = flat.segment(m, m);
  r.rear_height = flat.segment(2 * m, m);
  r.rear_rate = flat.segment(3 * m, m);
  return r;
}

HorizonRoad sample_horizon_road(const RoadSignal& front, const RoadSignal& rear,
                                double t0, int horizon, double T) {
  const int m = horizon + 1;
  HorizonRoad r;
  r.front_height.resize(m);
  r.front_rate.resize(m);
  r.rear_height.resize(m);
  r.rear_rate.resize(m);
  for (int k = 0; k < m; ++k) {
    const double t = t0 + k * T;
    const auto [hf, rf] = front.eval(t);
    const auto [hr, rr] = rear.eval(t);
    r.front_height[k] = hf;
    r.front_rate[k] = rf;
    r.rear_height[k] = hr;
    r.rear_rate[k] = rr;
  }
  return r;
}

RoadSignal hermite_road_signal(const Eigen::VectorXd& heights,
                               const Eigen::VectorXd& rates, double T) {
  if (heights.size() != rates.size() || heights.size() < 2) {
    throw InvalidInputError("hermite road needs matching heights/rates, length >= 2");
  }
  const int m = int(heights.size());
  const double end = T * (m - 1);
  // copy the grids into the closure
  const Eigen::VectorXd h = heights;
  const Eigen::VectorXd r = rates;
  auto eval = [h, r, T, end, m](double t) -> std::pair<double, double> {
    if (t < -1e-12 || t > end + 1e-12) {
      throw OutOfWindowError("horizon road evaluated at t=" + std::to_string(t) +
                             " outside [0, " + std::to_string(end) + "]");
    }
    const double tau = std::clamp(t, 0.0, end);
    int j = std::clamp(int(tau / T), 0, m - 2);
    const double xi = (tau - j * T) / T;
    const double xi2 = xi * xi, xi3 = xi2 * xi;
    const double h00 = 2 * xi3 - 3 * xi2 + 1;
    const double h10 = xi3 - 2 * xi2 + xi;
    const double h01 = -2 * xi3 + 3 * xi2;
    const double h11 = xi3 - xi2;
    const double height =
        h00 * h[j] + h10 * T * r[j] + h01 * h[j + 1] + h11 * T * r[j + 1];
    const double d00 = (6 * xi2 - 6 * xi) / T;
    const double d10 = 3 * xi2 - 4 * xi + 1;
    const double d01 = (-6 * xi2 + 6 * xi) / T;
    const double d11 = 3 * xi2 - 2 * xi;
    const double rate =
        d00 * h[j] + d10 * r[j] + d01 * h[j + 1] + d11 * r[j + 1];
    return {height, rate};
  };
  return RoadSignal(eval, 0.0, end);
}

std::vector<DamperControl> controls_from_decision(const DecisionVector& z) {
  if (z.size() % 2 != 0) throw InvalidInputError("decision vector length must be even");
  std::vector<DamperControl> u(z.size() / 2);
  for (std::size_t k = 0; k < u.size(); ++k) {
    u[k] = DamperControl{z[2 * k], z[2 * k + 1]};
  }
  return u;
}

DecisionVector decision_from_controls(std::span<const DamperControl> controls) {
  DecisionVector z(2 * controls.size());
  for (std::size_t k = 0; k < controls.size(); ++k) {
    z[2 * k] = controls[k].u1;
    z[2 * k + 1] = controls[k].u2;
  }
  return z;
}

double objective(const OcpConfig& cfg, const HalfCarParams& p,
                 const HalfCarState& x0, const DecisionVector& z,
                 const HorizonRoad& road) {
  cfg.validate();
  if (z.size() != 2 * cfg.horizon) {
    throw InvalidInputError("decision vector length must be 2*horizon");
  }
  if (road.grid_points() != cfg.horizon + 1) {
    throw InvalidInputError("horizon road must have N+1 grid points");
  }
  const double T = cfg.integrator.sampling_period;
  const RoadSignal front = hermite_road_signal(road.front_height, road.front_rate, T);
  const RoadSignal rear = hermite_road_signal(road.rear_height, road.rear_rate, T);
  const auto controls = controls_from_decision(z);
  AugmentedState s{x0, 0.0, 0.0};
  for (int k = 0; k < cfg.horizon; ++k) {
    s = step_sample(cfg.integrator, p, s, controls[k], front, rear, k * T);
  }
  return cfg.mu_handling * s.handling_cost + cfg.mu_comfort * s.comfort_cost;
}

Eigen::VectorXd objective_gradient(const OcpConfig& cfg, const HalfCarParams& p,
                                   const HalfCarState& x0, const DecisionVector& z,
                                   const HorizonRoad& road, FdScheme scheme) {
  const double eps = std::numeric_limits<double>::epsilon();
  Eigen::VectorXd g(z.size());
  DecisionVector zz = z;
  if (scheme == FdScheme::Forward) {
    const double f0 = objective(cfg, p, x0, z, road);
    const double scale = std::sqrt(eps);
    for (int j = 0; j < z.size(); ++j) {
      const double h = scale * std::max(1.0, std::abs(z[j]));
      zz[j] = z[j] + h;
      g[j] = (objective(cfg, p, x0, zz, road) - f0) / h;
      zz[j] = z[j];
    }
  } else {
    const double scale = std::cbrt(eps);
    for (int j = 0; j < z.size(); ++j) {
      const double h = scale * std::max(1.0, std::abs(z[j]));
      zz[j] = z[j] + h;
      const double fp = objective(cfg, p, x0, zz, road);
      zz[j] = z[j] - h;
      const double fm = objective(cfg, p, x0, zz, road);
      zz[j] = z[j];
      g[j] = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

BoxProblem make_box_problem(const OcpConfig& cfg, const HalfCarParams& p,
                            const HalfCarState& x0, const HorizonRoad& road,
                            FdScheme scheme) {
  cfg.validate();
  BoxProblem prob;
  prob.lower = Eigen::VectorXd::Constant(2 * cfg.horizon, cfg.u_min);
  prob.upper = Eigen::VectorXd::Constant(2 * cfg.horizon, cfg.u_max);
  prob.value = [cfg, p, x0, road](const Eigen::VectorXd& z) {
    return objective(cfg, p, x0, z, road);
  };
  prob.gradient = [cfg, p, x0, road, scheme](const Eigen::VectorXd& z) {
    return objective_gradient(cfg, p, x0, z, road, scheme);
  };
  return prob;
}

}  // namespace halfcar
