#pragma once

#include <cstddef>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spatialref/robot_model.hpp"

namespace spatialref
{

/// Clamp the latent coordinate into [0, 1]; the curve is never extrapolated.
double clamp_unit(double s);

/// Bernstein polynomials of a fixed degree on [0, 1].
class BernsteinBasis
{
public:
  explicit BernsteinBasis(int degree = 10);

  int degree() const { return degree_; }
  std::size_t size() const { return static_cast<std::size_t>(degree_ + 1); }

  /// phi(s), n entries, s clamped.
  Eigen::VectorXd values(double s) const;
  /// d phi / ds, n entries, s clamped.
  Eigen::VectorXd derivatives(double s) const;

private:
  int degree_;
};

Eigen::VectorXd basis_row(const BernsteinBasis & basis, double s);

/// Summary stored alongside a planned manifold.
struct SolverSummary
{
  int iterations = 0;
  double final_cost = 0.0;
  double max_violation = 0.0;
};

/// Serialized planner output: q(s) = (C kron phi(s)) w with reduced-joint-major weights.
///
/// w[k * n + i] is control point i of reduced joint k, so the weights reshape
/// to an r x n matrix Q and q(s) = C Q phi(s).
struct ManifoldSpec
{
  BernsteinBasis basis{10};
  CoordinationMatrix C = CoordinationMatrix::identity(1);
  Eigen::VectorXd w;
  double f_max = 200.0;
  Interval delta_margin{-0.05, 0.05};
  double hand_displacement_cap = 0.10;
  std::string model_fingerprint;
  std::string created_by = "spatialref";
  SolverSummary solver_report;

  /// Throws ConfigError / DimensionError on inconsistent fields.
  void validate() const;

  /// r x n matrix of control points.
  Eigen::MatrixXd control_points() const;

  std::size_t full_dim() const { return C.full_dim(); }
  std::size_t reduced_dim() const { return C.reduced_dim(); }
};

/// Weights that hold the reduced configuration constant along s.
Eigen::VectorXd constant_weights(const JointVector & q_reduced, std::size_t n_basis);

JointVector eval_config(const ManifoldSpec & m, double s);
JointVector eval_config_derivative(const ManifoldSpec & m, double s);

/// d q(s) / d w, a d x (r n) matrix (constant in w).
Eigen::MatrixXd config_weight_jacobian(const ManifoldSpec & m, double s);

ManifoldSpec manifold_from_json(const nlohmann::json & j);
nlohmann::json to_json(const ManifoldSpec & m);
ManifoldSpec load_manifold(const std::string & path);
void save_manifold(const ManifoldSpec & m, const std::string & path);

} // namespace spatialref
