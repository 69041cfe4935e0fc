#include "spatialref/planner.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "spatialref/errors.hpp"
#include "spatialref/optim.hpp"

namespace spatialref
{

std::string to_string(PlannerMode mode)
{
  return mode == PlannerMode::robust ? "robust" : "standard";
}

PlannerMode planner_mode_from_string(const std::string & name)
{
  if(name == "robust") return PlannerMode::robust;
  if(name == "standard") return PlannerMode::standard;
  throw ConfigError("unknown planner mode '" + name + "' (expected robust|standard)");
}

PlannerProblem::PlannerProblem(RobotModel m)
: model(std::move(m)), C(CoordinationMatrix::identity(model.dof())), anchor_config(model.default_config())
{
}

void PlannerProblem::validate() const
{
  if(degree < 1) throw ConfigError("planner: degree must be at least 1");
  if(C.full_dim() != model.dof())
  {
    throw DimensionError("planner: coordination matrix has " + std::to_string(C.full_dim()) + " rows, model has "
                         + std::to_string(model.dof()) + " joints");
  }
  model.check_dimension(anchor_config);
  if(samples < 2) throw ConfigError("planner: samples must be at least 2");
  if(force_penalty_samples < 2) throw ConfigError("planner: force_penalty_samples must be at least 2");
  if(constraint_oversample < 1) throw ConfigError("planner: constraint_oversample must be at least 1");
  if(!(f_max >= 0.0)) throw ConfigError("planner: f_max must be nonnegative");
  if(!(delta_margin.lower < delta_margin.upper)) throw ConfigError("planner: delta_margin must satisfy dminus < dplus");
  if(!model.foot_extent().contains(delta_margin)) throw ConfigError("planner: margin must lie inside foot_extent");
  if(!(hand_displacement_cap > 0.0)) throw ConfigError("planner: hand_displacement_cap must be positive");
  if(!(solver.constraint_tolerance > 0.0)) throw ConfigError("planner: constraint_tolerance must be positive");
  if(solver.max_iterations < 1 || solver.inner_iterations < 1) throw ConfigError("planner: iteration limits must be positive");
  if(solver.random_restarts < 0) throw ConfigError("planner: random_restarts must be nonnegative");
  if(!(solver.fd_step > 0.0)) throw ConfigError("planner: fd_step must be positive");
  if(!(solver.regularization >= 0.0)) throw ConfigError("planner: regularization must be nonnegative");
  C.reduce(anchor_config, 1e-9);
}

std::vector<double> PlannerProblem::constraint_grid() const
{
  const int count = (samples - 1) * constraint_oversample + 1;
  std::vector<double> s(static_cast<std::size_t>(count));
  for(int i = 0; i < count; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / (count - 1);
  return s;
}

std::vector<double> PlannerProblem::s_grid() const
{
  std::vector<double> s(static_cast<std::size_t>(samples));
  for(int i = 0; i < samples; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / (samples - 1);
  return s;
}

namespace
{

/// Static ZMP at one configuration as an affine function of the horizontal force.
struct StaticZmp
{
  double numerator0 = 0.0; // -f2 x_h - m g x_com
  double lever = 0.0;      // z_h
  double den = 1.0;        // -m g - f2
  Eigen::RowVectorXd grad_numerator0;
  Eigen::RowVectorXd grad_lever;

  StaticZmp(const RobotModel & model, const JointVector & q, double f2, bool with_gradient)
  {
    const double m = model.total_mass();
    const auto com = com_position(model, q);
    const auto hand = hand_position(model, q);
    numerator0 = -f2 * hand.x() - m * kGravity * com.x();
    lever = hand.y();
    den = -m * kGravity - f2;
    if(std::abs(den) < 1.0) throw UnsupportedLift("planner: planning vertical force cancels the robot weight");
    if(with_gradient)
    {
      const auto Jc = com_jacobian(model, q);
      const auto Jh = hand_jacobian(model, q);
      grad_numerator0 = -f2 * Jh.row(0) - m * kGravity * Jc.row(0);
      grad_lever = Jh.row(1);
    }
  }

  double value(double p) const { return (p * lever + numerator0) / den; }
  Eigen::RowVectorXd gradient(double p) const { return (p * grad_lever + grad_numerator0) / den; }
  /// d zmp / d p
  double slope() const { return lever / den; }
};

double planning_f2(const PlannerProblem & pb)
{
  return pb.zmp_model == ZmpModel::full ? pb.planning_f_h2 : 0.0;
}

std::vector<double> force_samples(double f_max, int count)
{
  if(f_max == 0.0) return {0.0};
  std::vector<double> p(static_cast<std::size_t>(count));
  for(int k = 0; k < count; ++k) p[static_cast<std::size_t>(k)] = f_max * k / (count - 1);
  return p;
}

double hinge_sum(const StaticZmp & z, const std::vector<double> & forces, const Interval & margin, Eigen::RowVectorXd * grad)
{
  double total = 0.0;
  for(double p : forces)
  {
    const double v = z.value(p);
    const double above = std::max(0.0, v - margin.upper);
    const double below = std::max(0.0, margin.lower - v);
    total += above * above + below * below;
    if(grad && (above > 0.0 || below > 0.0)) *grad += 2.0 * (above - below) * z.gradient(p);
  }
  return total;
}

/// Per-configuration cost of `mode` at force `force`, gradient in full joint space.
double configuration_cost(const PlannerProblem & pb,
                          PlannerMode mode,
                          const JointVector & q,
                          double force,
                          const std::vector<double> & forces,
                          Eigen::RowVectorXd * grad)
{
  const StaticZmp z(pb.model, q, planning_f2(pb), grad != nullptr);
  if(grad) grad->setZero(q.size());
  if(mode == PlannerMode::robust) return hinge_sum(z, forces, pb.delta_margin, grad);
  const double v = z.value(force);
  if(grad) *grad = 2.0 * v * z.gradient(force);
  return v * v;
}

constexpr int kConstraintsPerSample(std::size_t dof)
{
  return static_cast<int>(3 + 2 * dof);
}

/// Constraints of a single configuration at one force: ZMP (2), joints (2 d), hand (1).
void configuration_constraints(const PlannerProblem & pb,
                               const JointVector & q,
                               double force,
                               const Point2 & anchor_hand,
                               Eigen::Ref<Eigen::VectorXd> c,
                               Eigen::MatrixXd * jac_q)
{
  const auto d = static_cast<Eigen::Index>(pb.model.dof());
  const StaticZmp z(pb.model, q, planning_f2(pb), jac_q != nullptr);
  const double v = z.value(force);
  c[0] = pb.delta_margin.lower - v;
  c[1] = v - pb.delta_margin.upper;
  const auto & lim = pb.model.joint_limits();
  for(Eigen::Index j = 0; j < d; ++j)
  {
    c[2 + 2 * j] = lim[static_cast<std::size_t>(j)].lower - q[j];
    c[3 + 2 * j] = q[j] - lim[static_cast<std::size_t>(j)].upper;
  }
  const Point2 dh = hand_position(pb.model, q) - anchor_hand;
  const double cap = pb.hand_displacement_cap;
  c[2 + 2 * d] = (dh.squaredNorm() - cap * cap) / (2.0 * cap);
  if(jac_q)
  {
    jac_q->setZero(3 + 2 * d, d);
    const auto g = z.gradient(force);
    jac_q->row(0) = -g;
    jac_q->row(1) = g;
    for(Eigen::Index j = 0; j < d; ++j)
    {
      (*jac_q)(2 + 2 * j, j) = -1.0;
      (*jac_q)(3 + 2 * j, j) = 1.0;
    }
    const auto Jh = hand_jacobian(pb.model, q);
    jac_q->row(2 + 2 * d) = (dh.transpose() * Jh) / cap;
  }
}

Eigen::VectorXd constraint_scales(std::size_t dof, int samples)
{
  const auto per = kConstraintsPerSample(dof);
  Eigen::VectorXd scale(per * samples);
  for(int i = 0; i < samples; ++i)
  {
    auto seg = scale.segment(i * per, per);
    seg.setConstant(0.1);
    seg[0] = 0.01;
    seg[1] = 0.01;
    seg[per - 1] = 0.01;
  }
  return scale;
}

/// Residuals in natural units for the report.
struct Violations
{
  double zmp = 0.0;
  double joint = 0.0;
  double hand = 0.0;
  double max() const { return std::max({zmp, joint, hand}); }
};

/// Grid evaluation of a weight vector, shared by the solver and the checker.
class GridEvaluator
{
public:
  GridEvaluator(const PlannerProblem & pb, const ManifoldSpec & shape, std::vector<double> s_values)
  : pb_(pb), shape_(shape), s_(std::move(s_values)), forces_(force_samples(pb.f_max, pb.force_penalty_samples)),
    anchor_hand_(hand_position(pb.model, pb.anchor_config))
  {
    for(double s : s_) psi_.push_back(config_weight_jacobian(shape_, s));
  }

  std::size_t samples() const { return s_.size(); }
  double s(std::size_t i) const { return s_[i]; }
  double force(std::size_t i) const { return s_[i] * manifold_f_max(); }
  const Eigen::MatrixXd & psi(std::size_t i) const { return psi_[i]; }
  const Point2 & anchor_hand() const { return anchor_hand_; }
  const std::vector<double> & penalty_forces() const { return forces_; }

  double manifold_f_max() const { return pb_.f_max; }

  double cost(PlannerMode mode, const Eigen::VectorXd & w, Eigen::VectorXd * grad) const
  {
    double total = 0.0;
    if(grad) grad->setZero(w.size());
    Eigen::RowVectorXd gq;
    for(std::size_t i = 0; i < s_.size(); ++i)
    {
      const JointVector q = psi_[i] * w;
      total += configuration_cost(pb_, mode, q, force(i), forces_, grad ? &gq : nullptr);
      if(grad) *grad += psi_[i].transpose() * gq.transpose();
    }
    return total;
  }

  int constraint_count() const { return kConstraintsPerSample(pb_.model.dof()) * static_cast<int>(s_.size()); }

  void constraints(const Eigen::VectorXd & w, Eigen::VectorXd & c, Eigen::MatrixXd * jac) const
  {
    const auto per = kConstraintsPerSample(pb_.model.dof());
    c.resize(constraint_count());
    if(jac) jac->resize(constraint_count(), w.size());
    Eigen::MatrixXd jq;
    for(std::size_t i = 0; i < s_.size(); ++i)
    {
      const JointVector q = psi_[i] * w;
      const auto row = static_cast<Eigen::Index>(i) * per;
      configuration_constraints(pb_, q, force(i), anchor_hand_, c.segment(row, per), jac ? &jq : nullptr);
      if(jac) jac->block(row, 0, per, w.size()) = jq * psi_[i];
    }
  }

  Violations violations(const Eigen::VectorXd & w) const
  {
    Violations v;
    const auto & lim = pb_.model.joint_limits();
    for(std::size_t i = 0; i < s_.size(); ++i)
    {
      const JointVector q = psi_[i] * w;
      const StaticZmp z(pb_.model, q, planning_f2(pb_), false);
      const double x = z.value(force(i));
      v.zmp = std::max({v.zmp, pb_.delta_margin.lower - x, x - pb_.delta_margin.upper});
      for(Eigen::Index j = 0; j < q.size(); ++j)
      {
        const auto & l = lim[static_cast<std::size_t>(j)];
        v.joint = std::max({v.joint, l.lower - q[j], q[j] - l.upper});
      }
      const double dh = (hand_position(pb_.model, q) - anchor_hand_).norm();
      v.hand = std::max(v.hand, dh - pb_.hand_displacement_cap);
    }
    return v;
  }

  void fill_report(PlannerMode mode, const Eigen::VectorXd & w, SolveReport & report) const
  {
    report.mode = to_string(mode);
    report.robust_cost = cost(PlannerMode::robust, w, nullptr);
    report.standard_cost = cost(PlannerMode::standard, w, nullptr);
    report.final_cost = mode == PlannerMode::robust ? report.robust_cost : report.standard_cost;
    const auto v = violations(w);
    report.max_zmp_violation = v.zmp;
    report.max_joint_violation = v.joint;
    report.max_hand_violation = v.hand;
    report.max_constraint_violation = v.max();
    report.samples = static_cast<int>(s_.size());
    report.tolerance = pb_.solver.constraint_tolerance;
    report.trace.clear();
    for(std::size_t i = 0; i < s_.size(); ++i)
    {
      SampleTrace t;
      t.s = s_[i];
      t.force = force(i);
      t.q = psi_[i] * w;
      t.zmp = StaticZmp(pb_.model, t.q, planning_f2(pb_), false).value(t.force);
      t.hand_displacement = (hand_position(pb_.model, t.q) - anchor_hand_).norm();
      report.trace.push_back(std::move(t));
    }
  }

private:
  const PlannerProblem & pb_;
  const ManifoldSpec & shape_;
  std::vector<double> s_;
  std::vector<double> forces_;
  Point2 anchor_hand_;
  std::vector<Eigen::MatrixXd> psi_;
};

ManifoldSpec manifold_shape(const PlannerProblem & pb)
{
  ManifoldSpec m;
  m.basis = BernsteinBasis(pb.degree);
  m.C = pb.C;
  m.f_max = pb.f_max;
  m.delta_margin = pb.delta_margin;
  m.hand_displacement_cap = pb.hand_displacement_cap;
  m.model_fingerprint = pb.model.fingerprint();
  m.w = constant_weights(pb.C.reduce(pb.anchor_config), m.basis.size());
  return m;
}

/// Indices of w the solver may move.
std::vector<Eigen::Index> free_indices(const PlannerProblem & pb, std::size_t n_basis)
{
  std::vector<Eigen::Index> idx;
  const auto n = static_cast<Eigen::Index>(n_basis);
  for(Eigen::Index k = 0; k < static_cast<Eigen::Index>(pb.C.reduced_dim()); ++k)
  {
    for(Eigen::Index i = pb.pin_anchor ? 1 : 0; i < n; ++i) idx.push_back(k * n + i);
  }
  return idx;
}

/// Closed-form bound on the robust cost given the lowest reachable hand height.
void robust_cost_diagnostics(const PlannerProblem & pb, SolveReport & report)
{
  const double f2 = planning_f2(pb);
  const double den = -pb.model.total_mass() * kGravity - f2;
  const double hand_z = hand_position(pb.model, pb.anchor_config).y();
  const double lowest_hand = std::max(0.0, hand_z - pb.hand_displacement_cap);
  const double min_slope = lowest_hand / den;
  const auto forces = force_samples(pb.f_max, pb.force_penalty_samples);
  const double span = min_slope * (forces.back() - forces.front());
  const double width = pb.delta_margin.width();
  report.zero_robust_cost_attainable = span <= width;
  if(report.zero_robust_cost_attainable)
  {
    report.robust_cost_floor = 0.0;
    return;
  }
  // Forces are evenly spaced, so the hinge sum is minimised with the ZMP range centred
  // on the margin and grows with the slope.
  const double centre = 0.5 * (pb.delta_margin.lower + pb.delta_margin.upper);
  const double mid_force = 0.5 * (forces.front() + forces.back());
  double per_sample = 0.0;
  for(double p : forces)
  {
    const double v = centre + min_slope * (p - mid_force);
    const double above = std::max(0.0, v - pb.delta_margin.upper);
    const double below = std::max(0.0, pb.delta_margin.lower - v);
    per_sample += above * above + below * below;
  }
  report.robust_cost_floor = per_sample * pb.samples;
}

Eigen::VectorXd perturbation(std::mt19937_64 & rng, Eigen::Index size, double spread)
{
  std::normal_distribution<double> normal(0.0, spread);
  Eigen::VectorXd v(size);
  for(Eigen::Index i = 0; i < size; ++i) v[i] = normal(rng);
  return v;
}

optim::AugLagSettings auglag_settings(const SolverSettings & s)
{
  optim::AugLagSettings a;
  a.max_outer_iterations = s.max_iterations;
  a.constraint_tolerance = s.constraint_tolerance;
  a.initial_penalty = s.initial_penalty;
  a.penalty_growth = s.penalty_growth;
  a.inner.max_iterations = s.inner_iterations;
  return a;
}

bool better(const optim::AugLagResult & cand, const optim::AugLagResult & best)
{
  if(cand.converged != best.converged) return cand.converged;
  if(!cand.converged) return cand.max_violation < best.max_violation;
  return cand.objective < best.objective;
}

} // namespace

double cost_standard(const RobotModel & model, const JointVector & q, double f_h1)
{
  const double z = zmp_static_simplified(model, q, f_h1);
  return z * z;
}

double cost_robust(const RobotModel & model,
                   const JointVector & q,
                   double f_max,
                   const Interval & margin,
                   int force_penalty_samples)
{
  if(!(f_max >= 0.0)) throw ConfigError("cost_robust: f_max must be nonnegative");
  if(force_penalty_samples < 2) throw ConfigError("cost_robust: force_penalty_samples must be at least 2");
  const StaticZmp z(model, q, 0.0, false);
  return hinge_sum(z, force_samples(f_max, force_penalty_samples), margin, nullptr);
}

double planner_objective(const PlannerProblem & problem,
                         PlannerMode mode,
                         const Eigen::VectorXd & w,
                         Eigen::VectorXd * gradient)
{
  problem.validate();
  const auto shape = manifold_shape(problem);
  if(w.size() != shape.w.size()) throw DimensionError("planner_objective: weight vector size mismatch");
  const GridEvaluator grid(problem, shape, problem.s_grid());
  double value = grid.cost(mode, w, gradient);
  const Eigen::VectorXd dw = w - shape.w;
  value += problem.solver.regularization * dw.squaredNorm();
  if(gradient) *gradient += 2.0 * problem.solver.regularization * dw;
  return value;
}

std::pair<ManifoldSpec, SolveReport> solve_manifold(const PlannerProblem & problem, PlannerMode mode)
{
  problem.validate();
  ManifoldSpec manifold = manifold_shape(problem);
  const Eigen::VectorXd w_anchor = manifold.w;
  const GridEvaluator grid(problem, manifold, problem.s_grid());
  const GridEvaluator constraint_grid(problem, manifold, problem.constraint_grid());
  const auto idx = free_indices(problem, manifold.basis.size());
  const auto nfree = static_cast<Eigen::Index>(idx.size());
  const double reg = problem.solver.regularization;

  auto expand = [&](const Eigen::VectorXd & x) {
    Eigen::VectorXd w = w_anchor;
    for(Eigen::Index i = 0; i < nfree; ++i) w[idx[static_cast<std::size_t>(i)]] = x[i];
    return w;
  };
  auto restrict = [&](const Eigen::VectorXd & w) {
    Eigen::VectorXd x(nfree);
    for(Eigen::Index i = 0; i < nfree; ++i) x[i] = w[idx[static_cast<std::size_t>(i)]];
    return x;
  };

  optim::Objective objective = [&](const Eigen::VectorXd & x, Eigen::VectorXd & grad) {
    const Eigen::VectorXd w = expand(x);
    Eigen::VectorXd gw;
    double value = grid.cost(mode, w, &gw);
    const Eigen::VectorXd dw = w - w_anchor;
    value += reg * dw.squaredNorm();
    gw += 2.0 * reg * dw;
    grad = restrict(gw);
    return value;
  };
  optim::Constraints constraints = [&](const Eigen::VectorXd & x, Eigen::VectorXd & c, Eigen::MatrixXd & jac) {
    Eigen::MatrixXd jw;
    constraint_grid.constraints(expand(x), c, &jw);
    jac.resize(jw.rows(), nfree);
    for(Eigen::Index i = 0; i < nfree; ++i) jac.col(i) = jw.col(idx[static_cast<std::size_t>(i)]);
  };

  const auto settings = auglag_settings(problem.solver);
  const auto scales = constraint_scales(problem.model.dof(), static_cast<int>(constraint_grid.samples()));
  const Eigen::VectorXd x_anchor = restrict(w_anchor);

  optim::AugLagResult best;
  int total_iterations = 0;
  std::mt19937_64 rng(problem.solver.seed);
  for(int attempt = 0; attempt <= problem.solver.random_restarts; ++attempt)
  {
    Eigen::VectorXd x0 = x_anchor;
    if(attempt > 0) x0 += perturbation(rng, nfree, problem.solver.restart_spread);
    auto res = optim::minimize_augmented_lagrangian(objective, constraints, static_cast<std::size_t>(constraint_grid.constraint_count()),
                                                    x0, settings, scales);
    total_iterations += res.inner_iterations;
    if(attempt == 0 || better(res, best)) best = std::move(res);
  }

  manifold.w = expand(best.x);
  SolveReport report;
  grid.fill_report(mode, manifold.w, report);
  if(problem.constraint_oversample > 1)
  {
    // The constraint grid contains the cost grid.
    const auto v = constraint_grid.violations(manifold.w);
    report.max_zmp_violation = v.zmp;
    report.max_joint_violation = v.joint;
    report.max_hand_violation = v.hand;
    report.max_constraint_violation = v.max();
  }
  report.iterations = total_iterations;
  report.converged = report.max_constraint_violation <= problem.solver.constraint_tolerance;
  robust_cost_diagnostics(problem, report);
  std::ostringstream msg;
  if(report.converged)
  {
    msg << "converged";
  }
  else
  {
    msg << "infeasible: max constraint violation " << report.max_constraint_violation << " exceeds tolerance "
        << problem.solver.constraint_tolerance << " after " << problem.solver.random_restarts + 1 << " attempt(s)";
  }
  if(!report.zero_robust_cost_attainable)
  {
    msg << "; zero robust cost unattainable: hand height bound implies a ZMP force span wider than the margin"
        << " (robust cost floor " << report.robust_cost_floor << ")";
  }
  report.message = msg.str();
  manifold.solver_report = {report.iterations, report.final_cost, report.max_constraint_violation};
  return {std::move(manifold), std::move(report)};
}

std::vector<BaselineSolution> solve_per_force_baseline(const PlannerProblem & problem,
                                                       const std::vector<double> & force_grid,
                                                       PlannerMode mode)
{
  problem.validate();
  const auto forces = force_samples(problem.f_max, problem.force_penalty_samples);
  const Point2 anchor_hand = hand_position(problem.model, problem.anchor_config);
  const Eigen::MatrixXd & C = problem.C.entries();
  const JointVector r_anchor = problem.C.reduce(problem.anchor_config);
  const auto per = kConstraintsPerSample(problem.model.dof());
  const auto settings = auglag_settings(problem.solver);
  const auto scales = constraint_scales(problem.model.dof(), 1);

  std::vector<BaselineSolution> out;
  out.reserve(force_grid.size());
  for(std::size_t k = 0; k < force_grid.size(); ++k)
  {
    const double f = force_grid[k];
    optim::Objective objective = [&](const Eigen::VectorXd & r, Eigen::VectorXd & grad) {
      Eigen::RowVectorXd gq;
      const double v = configuration_cost(problem, mode, C * r, f, forces, &gq);
      const Eigen::VectorXd dr = r - r_anchor;
      grad = C.transpose() * gq.transpose() + 2.0 * problem.solver.regularization * dr;
      return v + problem.solver.regularization * dr.squaredNorm();
    };
    optim::Constraints constraints = [&](const Eigen::VectorXd & r, Eigen::VectorXd & c, Eigen::MatrixXd & jac) {
      Eigen::MatrixXd jq;
      c.resize(per);
      configuration_constraints(problem, C * r, f, anchor_hand, c, &jq);
      jac = jq * C;
    };
    // Each force gets its own stream so solves do not depend on grid order.
    std::mt19937_64 rng(problem.solver.seed ^ (0x9e3779b97f4a7c15ULL * (k + 1)));
    optim::AugLagResult res;
    for(int attempt = 0; attempt <= problem.solver.random_restarts; ++attempt)
    {
      Eigen::VectorXd x0 = r_anchor;
      if(attempt > 0) x0 += perturbation(rng, r_anchor.size(), problem.solver.restart_spread);
      auto r = optim::minimize_augmented_lagrangian(objective, constraints, static_cast<std::size_t>(per), x0, settings,
                                                    scales);
      if(attempt == 0 || better(r, res)) res = std::move(r);
    }
    BaselineSolution sol;
    sol.force = f;
    sol.q = C * res.x;
    sol.cost = configuration_cost(problem, mode, sol.q, f, forces, nullptr);
    sol.max_violation = res.max_violation;
    sol.converged = res.converged;
    out.push_back(std::move(sol));
  }
  return out;
}

SolveReport check_manifold(const ManifoldSpec & manifold, const PlannerProblem & problem, bool override_fingerprint, int fine_factor)
{
  manifold.validate();
  if(!override_fingerprint && manifold.model_fingerprint != problem.model.fingerprint())
  {
    throw FingerprintMismatch("check_manifold: manifold fingerprint " + manifold.model_fingerprint
                              + " does not match model " + problem.model.fingerprint());
  }
  if(manifold.full_dim() != problem.model.dof())
  {
    throw DimensionError("check_manifold: manifold dimension does not match the model");
  }
  if(fine_factor < 1) throw ConfigError("check_manifold: fine_factor must be at least 1");
  PlannerProblem pb = problem;
  pb.C = manifold.C;
  pb.degree = manifold.basis.degree();
  pb.f_max = manifold.f_max;
  pb.delta_margin = manifold.delta_margin;
  pb.hand_displacement_cap = manifold.hand_displacement_cap;
  pb.validate();

  const int count = fine_factor * pb.samples;
  std::vector<double> s(static_cast<std::size_t>(count));
  for(int i = 0; i < count; ++i) s[static_cast<std::size_t>(i)] = static_cast<double>(i) / (count - 1);
  const GridEvaluator grid(pb, manifold, std::move(s));
  SolveReport report;
  grid.fill_report(PlannerMode::robust, manifold.w, report);
  report.iterations = 0;
  report.converged = report.max_constraint_violation <= pb.solver.constraint_tolerance;
  robust_cost_diagnostics(pb, report);
  report.message = report.converged ? "feasible on fine grid" : "constraint violation on fine grid";
  return report;
}

nlohmann::json to_json(const SolveReport & r)
{
  nlohmann::json j;
  j["mode"] = r.mode;
  j["converged"] = r.converged;
  j["message"] = r.message;
  j["final_cost"] = r.final_cost;
  j["robust_cost"] = r.robust_cost;
  j["standard_cost"] = r.standard_cost;
  j["max_constraint_violation"] = r.max_constraint_violation;
  j["max_zmp_violation"] = r.max_zmp_violation;
  j["max_joint_violation"] = r.max_joint_violation;
  j["max_hand_violation"] = r.max_hand_violation;
  j["iterations"] = r.iterations;
  j["tolerance"] = r.tolerance;
  j["samples"] = r.samples;
  j["D"] = r.samples - 1;
  j["zero_robust_cost_attainable"] = r.zero_robust_cost_attainable;
  j["robust_cost_floor"] = r.robust_cost_floor;
  auto trace = nlohmann::json::array();
  for(const auto & t : r.trace)
  {
    trace.push_back({{"s", t.s}, {"force", t.force}, {"zmp", t.zmp}, {"hand_displacement", t.hand_displacement},
                     {"q", detail::vector_to_json(t.q)}});
  }
  j["trace"] = trace;
  return j;
}

PlannerProblem planner_problem_from_json(const nlohmann::json & j, RobotModel model)
{
  using detail::expect_keys;
  using detail::get_number;
  try
  {
    expect_keys(j, {},
                {"degree", "C", "f_max", "delta_margin", "samples", "force_penalty_samples", "hand_displacement_cap",
                 "constraint_oversample", "anchor_config", "pin_anchor", "zmp_model", "planning_f_h2", "solver"},
                "planner config");
    PlannerProblem pb(std::move(model));
    if(j.contains("degree")) pb.degree = j.at("degree").get<int>();
    if(j.contains("C")) pb.C = coordination_from_json(j.at("C"));
    if(j.contains("f_max")) pb.f_max = get_number(j, "f_max", "planner config");
    if(j.contains("delta_margin"))
    {
      const auto v = detail::vector_from_json(j.at("delta_margin"), "delta_margin");
      if(v.size() != 2) throw ConfigError("planner config: delta_margin must be [dminus, dplus]");
      pb.delta_margin = {v[0], v[1]};
    }
    if(j.contains("samples")) pb.samples = j.at("samples").get<int>();
    if(j.contains("force_penalty_samples")) pb.force_penalty_samples = j.at("force_penalty_samples").get<int>();
    if(j.contains("constraint_oversample")) pb.constraint_oversample = j.at("constraint_oversample").get<int>();
    if(j.contains("hand_displacement_cap")) pb.hand_displacement_cap = get_number(j, "hand_displacement_cap", "planner config");
    if(j.contains("anchor_config")) pb.anchor_config = detail::vector_from_json(j.at("anchor_config"), "anchor_config");
    if(j.contains("pin_anchor")) pb.pin_anchor = j.at("pin_anchor").get<bool>();
    if(j.contains("zmp_model"))
    {
      const auto name = j.at("zmp_model").get<std::string>();
      if(name == "simplified") pb.zmp_model = ZmpModel::simplified;
      else if(name == "full") pb.zmp_model = ZmpModel::full;
      else throw ConfigError("planner config: zmp_model must be simplified|full");
    }
    if(j.contains("planning_f_h2")) pb.planning_f_h2 = get_number(j, "planning_f_h2", "planner config");
    if(j.contains("solver"))
    {
      const auto & s = j.at("solver");
      expect_keys(s, {},
                  {"max_iterations", "inner_iterations", "constraint_tolerance", "initial_penalty", "penalty_growth",
                   "fd_step", "random_restarts", "seed", "restart_spread", "regularization"},
                  "planner config solver");
      auto & o = pb.solver;
      if(s.contains("max_iterations")) o.max_iterations = s.at("max_iterations").get<int>();
      if(s.contains("inner_iterations")) o.inner_iterations = s.at("inner_iterations").get<int>();
      if(s.contains("constraint_tolerance")) o.constraint_tolerance = get_number(s, "constraint_tolerance", "solver");
      if(s.contains("initial_penalty")) o.initial_penalty = get_number(s, "initial_penalty", "solver");
      if(s.contains("penalty_growth")) o.penalty_growth = get_number(s, "penalty_growth", "solver");
      if(s.contains("fd_step")) o.fd_step = get_number(s, "fd_step", "solver");
      if(s.contains("random_restarts")) o.random_restarts = s.at("random_restarts").get<int>();
      if(s.contains("seed")) o.seed = s.at("seed").get<std::uint64_t>();
      if(s.contains("restart_spread")) o.restart_spread = get_number(s, "restart_spread", "solver");
      if(s.contains("regularization")) o.regularization = get_number(s, "regularization", "solver");
    }
    pb.validate();
    return pb;
  }
  catch(const nlohmann::json::exception & e)
  {
    throw ConfigError(std::string("planner config: ") + e.what());
  }
}

} // namespace spatialref
