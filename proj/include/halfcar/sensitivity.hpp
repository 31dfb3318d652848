#ifndef HALFCAR_SENSITIVITY_HPP
#define HALFCAR_SENSITIVITY_HPP

#include <vector>

#include <Eigen/Core>

#include "halfcar/nlp_solver.hpp"
#include "halfcar/ocp.hpp"

namespace halfcar {

/// The horizon NLP as a family over the parameter vector
/// theta = [initial state (state_dim); horizon road, flat layout].
struct ParametricProblem {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  Eigen::VectorXd theta0;
  int state_dim = 8;
  int road_grid_points = 0;  ///< N+1; 0 when the parameter has no road block
  std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)> gradient;

  /// The fixed-parameter problem at theta.
  BoxProblem at(const Eigen::VectorXd& theta) const;
};

ParametricProblem make_parametric_problem(const OcpConfig& cfg,
                                          const HalfCarParams& p,
                                          FdScheme scheme = FdScheme::Central);

/// Finite-difference steps for the mixed second derivatives.
struct SensitivityPolicy {
  double state_step = 1e-6;   ///< times max(1, |x_j|)
  double height_step = 1e-6;  ///< [m]
  double rate_step = 1e-5;    ///< [m/s]
};

/// First-order solution derivatives at a KKT point. Rows of bound-active
/// components are identically zero; a bundle with regular == false carries
/// zero matrices and is usable for diagnostics only.
struct SensitivityBundle {
  Eigen::MatrixXd du_dx;      ///< 2N x state_dim
  Eigen::MatrixXd du_dw;      ///< 2N x 4*(N+1)
  Eigen::VectorXd base_x;
  Eigen::VectorXd base_w;
  Eigen::VectorXd base_u;
  std::vector<BoundStatus> active_set;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  bool regular = false;
};

SensitivityBundle compute_sensitivities(const ParametricProblem& problem,
                                        const KktPoint& point,
                                        const SensitivityPolicy& policy = {});

/// Deviation norms beyond which the first-order update is not trusted.
struct TrustThresholds {
  double state_norm = 0.05;  ///< [m]
  double road_norm = 0.05;   ///< [m]
};

struct UpdateReport {
  Eigen::VectorXd updated_u;
  std::vector<int> clamped_components;
  bool structure_change = false;
  double state_deviation_norm = 0.0;
  double road_deviation_norm = 0.0;
};

/// The first-order control update, clamped to the admissible box.
/// structure_change is set when a previously free component hits a bound or
/// a deviation norm exceeds its trust threshold. Throws UpdateRefusedError
/// on a non-regular bundle.
UpdateReport apply_update(const SensitivityBundle& bundle,
                          const HalfCarState& measured_x,
                          const HorizonRoad& measured_w,
                          const TrustThresholds& trust = {});

/// True iff a component of the raw (pre-clamp) candidate at open-loop index
/// <= horizon_check_index leaves the box or changes bound status relative to
/// the bundle's active-set snapshot. Later-horizon changes are tolerated.
bool detect_structure_change(const SensitivityBundle& bundle,
                             const Eigen::VectorXd& candidate_raw_u,
                             int horizon_check_index = 1);

}  // namespace halfcar

#endif  // HALFCAR_SENSITIVITY_HPP
