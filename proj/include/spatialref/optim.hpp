#pragma once

#include <cstddef>
#include <functional>

#include <Eigen/Dense>

namespace spatialref::optim
{

/// Smooth objective returning f(x) and writing its gradient.
using Objective = std::function<double(const Eigen::VectorXd & x, Eigen::VectorXd & grad)>;

/// Inequality constraints c(x) <= 0 with their dense Jacobian (rows = constraints).
using Constraints = std::function<void(const Eigen::VectorXd & x, Eigen::VectorXd & c, Eigen::MatrixXd & jac)>;

struct LbfgsSettings
{
  int max_iterations = 500;
  int memory = 12;
  double gradient_tolerance = 1e-9; ///< on the infinity norm of the gradient
  double relative_tolerance = 1e-13; ///< on the relative decrease of f per iteration
  double armijo = 1e-4;
};

struct LbfgsResult
{
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Limited-memory BFGS with backtracking Armijo line search.
LbfgsResult minimize_lbfgs(const Objective & f, Eigen::VectorXd x0, const LbfgsSettings & settings = {});

struct AugLagSettings
{
  int max_outer_iterations = 40;
  double constraint_tolerance = 1e-5;
  double initial_penalty = 1e2;
  double penalty_growth = 10.0;
  double max_penalty = 1e12;
  /// Stop once feasible and the objective changes less than this between outer iterations.
  double objective_tolerance = 1e-10;
  LbfgsSettings inner{};
};

struct AugLagResult
{
  Eigen::VectorXd x;
  Eigen::VectorXd multipliers;
  double objective = 0.0;
  double max_violation = 0.0;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
};

/// Powell-Hestenes-Rockafellar augmented Lagrangian for min f s.t. c(x) <= 0.
///
/// `constraint_scale` (optional, one entry per constraint) divides each c_j inside
/// the penalty; feasibility is always judged on the unscaled residuals.
AugLagResult minimize_augmented_lagrangian(const Objective & f,
                                           const Constraints & c,
                                           std::size_t num_constraints,
                                           Eigen::VectorXd x0,
                                           const AugLagSettings & settings = {},
                                           const Eigen::VectorXd & constraint_scale = {});

/// Central-difference gradient, used by tests and for gradient checks.
Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd &)> & f,
                                           const Eigen::VectorXd & x,
                                           double step = 1e-6);

} // namespace spatialref::optim
