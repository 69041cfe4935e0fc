#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spatialref/controller.hpp"
#include "spatialref/planner.hpp"
#include "spatialref/simulator.hpp"

namespace spatialref
{

ControllerSettings controller_settings_from_json(const nlohmann::json & j);
nlohmann::json to_json(const ControllerSettings & c);
SimSettings sim_settings_from_json(const nlohmann::json & j);
nlohmann::json to_json(const SimSettings & s);

struct SweepConfig
{
  std::vector<double> M_values{100.0, 125.0, 150.0, 175.0, 200.0}; ///< N
  std::vector<double> h_values{1.0, 2.0, 3.0, 4.0};                ///< s
  std::vector<PlannerMode> modes{PlannerMode::robust, PlannerMode::standard};
  int repeats = 1;
  std::uint64_t seed = 0;
  /// N, std-dev of per-tick force noise added to the profile. Zero keeps every repeat identical.
  double force_noise = 0.0;
  int threads = 0; ///< 0 picks the hardware concurrency
  ControllerSettings controller;
  SimSettings sim;

  void validate() const;
};

SweepConfig sweep_config_from_json(const nlohmann::json & j);

struct SweepCell
{
  PlannerMode mode = PlannerMode::robust;
  double M = 0.0;
  double h = 0.0;
  int repeat = 0;
  bool success = false;
  FailureReason failure_reason = FailureReason::none;
  double failure_time = 0.0;
  double max_abs_zmp = 0.0;
};

struct SweepResult
{
  std::vector<double> M_values;
  std::vector<double> h_values;
  int repeats = 1;
  /// Ordered by mode, then h, then M, then repeat.
  std::vector<SweepCell> cells;

  int success_count(PlannerMode mode) const;
  /// success[h index][M index]; a cell counts when every repeat succeeded.
  std::vector<std::vector<bool>> success_matrix(PlannerMode mode) const;
};

/// Runs every (mode, h, M, repeat) episode on a worker pool. `manifolds` must hold every mode of the config.
SweepResult run_sweep(const RobotModel & model,
                      const std::map<PlannerMode, ManifoldSpec> & manifolds,
                      const SweepConfig & config);

std::string sweep_csv_header();
/// Columns: mode, M, h, success, failure_reason, max_abs_zmp (plus repeat when repeats > 1).
void write_sweep_csv(const SweepResult & result, std::ostream & out);
/// One panel per mode; rows are h, columns are M.
std::string render_sweep_svg(const SweepResult & result);

/// Largest absolute change of any joint between consecutive configurations.
double max_adjacent_jump(const std::vector<JointVector> & configs);

struct SmoothnessComparison
{
  std::vector<double> forces;
  std::vector<JointVector> manifold;
  std::vector<JointVector> baseline;
  double manifold_max_jump = 0.0;
  double baseline_max_jump = 0.0;
  bool manifold_converged = false;
  int baseline_converged = 0;
};

/// Plans the manifold and the per-force baseline on the problem's s grid.
SmoothnessComparison compare_smoothness(const PlannerProblem & problem, PlannerMode mode = PlannerMode::robust);

/// Same with an already planned manifold.
SmoothnessComparison compare_smoothness(const PlannerProblem & problem, const ManifoldSpec & manifold, PlannerMode mode);

/// Columns: method, index, force, q0..q{d-1}.
void write_smoothness_csv(const SmoothnessComparison & c, std::ostream & out);

/// Input {q, f_h1, f_h2?, delta_margin?}; output holds both static ZMP values and their support flags.
nlohmann::json eval_zmp(const RobotModel & model, const nlohmann::json & input);

} // namespace spatialref
