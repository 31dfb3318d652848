#ifndef HALFCAR_OCP_HPP
#define HALFCAR_OCP_HPP

#include <Eigen/Core>

#include "halfcar/nlp_solver.hpp"
#include "halfcar/road_profile.hpp"
#include "halfcar/simulation.hpp"
#include "halfcar/vehicle_model.hpp"

namespace halfcar {

struct OcpConfig {
  int horizon = 5;              ///< N sampling intervals
  double mu_handling = 1.0;     ///< weight of the wheel-force term
  double mu_comfort = 1.0;      ///< weight of the jerk term
  double u_min = kDamperMin;
  double u_max = kDamperMax;
  IntegratorConfig integrator;  ///< integrator.sampling_period is T

  void validate() const;
};

/// Flat decision vector of length 2N, ordered (u1(0), u2(0), u1(1), u2(1), ...).
using DecisionVector = Eigen::VectorXd;

/// Road heights and rates at the N+1 horizon grid points for both wheels:
/// the finite-dimensional parameter the control solution is differentiated
/// against. Flat layout: [front heights; front rates; rear heights; rear rates].
struct HorizonRoad {
  Eigen::VectorXd front_height;
  Eigen::VectorXd front_rate;
  Eigen::VectorXd rear_height;
  Eigen::VectorXd rear_rate;

  int grid_points() const { return int(front_height.size()); }
  Eigen::VectorXd to_flat() const;
  static HorizonRoad from_flat(const Eigen::VectorXd& flat);
};

/// Samples both signals at the N+1 grid points starting at t0.
HorizonRoad sample_horizon_road(const RoadSignal& front, const RoadSignal& rear,
                                double t0, int horizon, double T);

/// C1 cubic Hermite interpolant of grid heights/rates over [0, N*T]; this is
/// the road the shooting objective integrates against.
RoadSignal hermite_road_signal(const Eigen::VectorXd& heights,
                               const Eigen::VectorXd& rates, double T);

std::vector<DamperControl> controls_from_decision(const DecisionVector& z);
DecisionVector decision_from_controls(std::span<const DamperControl> controls);

/// Horizon cost: sum over sampling intervals of the weighted handling and
/// comfort integrals, evaluated by the augmented quadrature of the
/// simulation module. The horizon uses local time (t=0 at x0).
double objective(const OcpConfig& cfg, const HalfCarParams& p,
                 const HalfCarState& x0, const DecisionVector& z,
                 const HorizonRoad& road);

enum class FdScheme { Forward, Central };

/// Finite-difference gradient with per-component steps
/// sqrt(eps)*max(1,|z_j|) (forward) or cbrt(eps)*max(1,|z_j|) (central).
Eigen::VectorXd objective_gradient(const OcpConfig& cfg, const HalfCarParams& p,
                                   const HalfCarState& x0, const DecisionVector& z,
                                   const HorizonRoad& road,
                                   FdScheme scheme = FdScheme::Forward);

/// Bundles the horizon NLP for the box solver. The solver-facing gradient
/// defaults to central differences: the comfort integrand pushes objective
/// values to ~1e7..1e9 where the forward-difference error floor
/// sqrt(eps*|f|*H) sits above any useful KKT tolerance.
BoxProblem make_box_problem(const OcpConfig& cfg, const HalfCarParams& p,
                            const HalfCarState& x0, const HorizonRoad& road,
                            FdScheme scheme = FdScheme::Central);

}  // namespace halfcar

#endif  // HALFCAR_OCP_HPP
