#ifndef HALFCAR_NLP_SOLVER_HPP
#define HALFCAR_NLP_SOLVER_HPP

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "halfcar/errors.hpp"

namespace halfcar {

struct SolverConfig {
  double kkt_tolerance = 1e-6;   ///< on the projected gradient norm (scale-aware, see solve)
  int max_iterations = 200;
  int bfgs_reset_period = 0;     ///< 0 = never reset
  double strict_mult_threshold = 1e-8;
  double hessian_floor = 1e-10;  ///< reduced-Hessian eigenvalue floor
};

enum class BoundStatus { Free, AtLower, AtUpper };

/// A box-constrained smooth problem given by value/gradient callbacks.
struct BoxProblem {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  std::function<double(const Eigen::VectorXd&)> value;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
};

struct KktPoint {
  Eigen::VectorXd z;
  double objective = 0.0;
  Eigen::VectorXd mult_lower;          ///< multipliers of z >= lower
  Eigen::VectorXd mult_upper;          ///< multipliers of z <= upper
  std::vector<BoundStatus> active_set;
  std::vector<int> free_indices;
  Eigen::MatrixXd reduced_hessian;     ///< over free components, symmetrized
  double kkt_residual = 0.0;
  bool strict_complementarity = false;
  bool regular = false;  ///< strict complementarity and positive definite reduced Hessian
  int iterations = 0;
};

/// Solver gave up; `best` carries the best iterate found.
class NonconvergenceError : public Error {
 public:
  NonconvergenceError(const std::string& what, KktPoint best_point)
      : Error(what), best(std::move(best_point)) {}
  KktPoint best;
};

/// Iteration observer for tests and diagnostics: (iteration, f, projected
/// gradient norm).
using SolveObserver = std::function<void(int, double, double)>;

/// Projected BFGS with Armijo backtracking. Terminates when the projected
/// gradient infinity-norm drops below kkt_tolerance times a fixed problem
/// scale max(1, |f(z0)|/spread, ||g(z0)||_inf), so the tolerance reads as
/// absolute on well-scaled problems and relative on badly scaled ones.
/// Multipliers are recovered from the gradient at active bounds and the
/// reduced Hessian is assembled by central differences of the gradient.
KktPoint solve(const SolverConfig& cfg, const BoxProblem& problem,
               Eigen::VectorXd z_init, const SolveObserver& observer = {});

/// Max over stationarity, bound violation, multiplier sign and
/// complementarity violations.
double kkt_residual(const BoxProblem& problem, const KktPoint& point);

}  // namespace halfcar

#endif  // HALFCAR_NLP_SOLVER_HPP
