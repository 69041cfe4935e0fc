#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialref/manifold.hpp"
#include "spatialref/robot_model.hpp"
#include "spatialref/stability.hpp"

namespace spatialref
{

enum class PlannerMode
{
  robust,
  standard
};

/// Static ZMP used by the planner's costs and constraints.
enum class ZmpModel
{
  simplified, ///< horizontal hand force only
  full        ///< includes a constant planning vertical force
};

std::string to_string(PlannerMode mode);
PlannerMode planner_mode_from_string(const std::string & name);

struct SolverSettings
{
  int max_iterations = 40;        ///< augmented-Lagrangian outer iterations
  int inner_iterations = 400;     ///< L-BFGS iterations per subproblem
  double constraint_tolerance = 1e-4; ///< m for ZMP and hand, rad for joints
  double initial_penalty = 10.0;
  double penalty_growth = 10.0;
  double fd_step = 1e-6;          ///< step of the finite-difference gradient check
  int random_restarts = 0;
  std::uint64_t seed = 0;
  double restart_spread = 0.1;    ///< rad, std-dev of restart / baseline perturbations
  double regularization = 1e-6;   ///< weight of |w - w_anchor|^2
};

struct PlannerProblem
{
  RobotModel model;
  int degree = 10;
  CoordinationMatrix C;
  double f_max = 200.0;
  Interval delta_margin{-0.05, 0.05};
  int samples = 20;                 ///< s-grid points including both ends (D + 1)
  int force_penalty_samples = 21;   ///< discretization of the robust cost over [0, f_max]
  int constraint_oversample = 2;    ///< hard constraints on a grid k times denser than the cost grid
  double hand_displacement_cap = 0.10;
  JointVector anchor_config;        ///< full configuration the robot starts from
  bool pin_anchor = false;          ///< force q(0) = anchor_config
  ZmpModel zmp_model = ZmpModel::simplified;
  double planning_f_h2 = 0.0;       ///< N, used only by ZmpModel::full
  SolverSettings solver;

  /// Defaults for `model`: identity coordination, anchor = default_config.
  explicit PlannerProblem(RobotModel m);

  void validate() const;
  /// s_i = i / D, i = 0..D.
  std::vector<double> s_grid() const;
  /// Grid carrying the hard constraints: s_grid refined by constraint_oversample.
  std::vector<double> constraint_grid() const;
};

/// Per-sample record of a planned or re-checked manifold.
struct SampleTrace
{
  double s = 0.0;
  double force = 0.0;       ///< s f_max, N
  double zmp = 0.0;         ///< m, at `force`
  double hand_displacement = 0.0; ///< m, from the anchor hand position
  JointVector q;
};

struct SolveReport
{
  std::string mode;
  double final_cost = 0.0;        ///< mode objective summed over the grid (no regularizer)
  double robust_cost = 0.0;       ///< robust cost summed over the grid
  double standard_cost = 0.0;     ///< standard cost summed over the grid
  double max_constraint_violation = 0.0;
  double max_zmp_violation = 0.0;
  double max_joint_violation = 0.0;
  double max_hand_violation = 0.0;
  int iterations = 0;
  bool converged = false;
  double tolerance = 0.0;
  int samples = 0;

  /// Certified bound: no pose within the hand cap keeps the whole force range inside the margin.
  bool zero_robust_cost_attainable = true;
  /// Lower bound on robust_cost implied by the hand-height bound.
  double robust_cost_floor = 0.0;
  std::string message;

  std::vector<SampleTrace> trace;
};

nlohmann::json to_json(const SolveReport & report);

/// |ZMP(q, f_h1)|^2 with the simplified static ZMP.
double cost_standard(const RobotModel & model, const JointVector & q, double f_h1);

/// Sum over `force_penalty_samples` forces p in [0, f_max] of squared margin violations.
double cost_robust(const RobotModel & model,
                   const JointVector & q,
                   double f_max,
                   const Interval & margin,
                   int force_penalty_samples);

/// Minimize the grid-summed cost of `mode` over the Bernstein weights.
std::pair<ManifoldSpec, SolveReport> solve_manifold(const PlannerProblem & problem, PlannerMode mode);

struct BaselineSolution
{
  double force = 0.0;
  JointVector q;
  double cost = 0.0;
  double max_violation = 0.0;
  bool converged = false;
};

/// Independent single-configuration solves, one per force, each started from the anchor
/// (plus seeded restarts) with the manifold's anchor regularizer.
std::vector<BaselineSolution> solve_per_force_baseline(const PlannerProblem & problem,
                                                       const std::vector<double> & force_grid,
                                                       PlannerMode mode = PlannerMode::robust);

/// Re-evaluate every constraint of a manifold on a grid `fine_factor` times denser.
SolveReport check_manifold(const ManifoldSpec & manifold,
                           const PlannerProblem & problem,
                           bool override_fingerprint = false,
                           int fine_factor = 10);

/// Total planner objective (including the regularizer) and its gradient in w.
/// Exposed for gradient checks.
double planner_objective(const PlannerProblem & problem,
                         PlannerMode mode,
                         const Eigen::VectorXd & w,
                         Eigen::VectorXd * gradient);

/// Problem settings from JSON (model supplied separately). Unknown keys are rejected.
PlannerProblem planner_problem_from_json(const nlohmann::json & j, RobotModel model);

} // namespace spatialref
