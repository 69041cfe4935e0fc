#include "spatialref/optim.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace spatialref::optim
{

LbfgsResult minimize_lbfgs(const Objective & f, Eigen::VectorXd x0, const LbfgsSettings & settings)
{
  LbfgsResult res;
  res.x = std::move(x0);
  const auto n = res.x.size();
  Eigen::VectorXd g(n);
  double fx = f(res.x, g);

  std::deque<Eigen::VectorXd> s_hist;
  std::deque<Eigen::VectorXd> y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g_new(n);
  Eigen::VectorXd x_new(n);
  std::vector<double> alpha(static_cast<std::size_t>(settings.memory));

  for(int it = 0; it < settings.max_iterations; ++it)
  {
    if(!std::isfinite(fx)) break;
    if(g.lpNorm<Eigen::Infinity>() <= settings.gradient_tolerance)
    {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    const auto m = s_hist.size();
    for(std::size_t i = m; i-- > 0;)
    {
      alpha[i] = rho_hist[i] * s_hist[i].dot(d);
      d -= alpha[i] * y_hist[i];
    }
    if(m > 0)
    {
      d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    }
    else
    {
      d /= std::max(1.0, g.norm());
    }
    for(std::size_t i = 0; i < m; ++i)
    {
      const double beta = rho_hist[i] * y_hist[i].dot(d);
      d += (alpha[i] - beta) * s_hist[i];
    }

    double slope = g.dot(d);
    if(!(slope < 0.0))
    {
      // Lost descent; restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = -g / std::max(1.0, g.norm());
      slope = g.dot(d);
    }

    double step = 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for(int ls = 0; ls < 60; ++ls)
    {
      x_new = res.x + step * d;
      f_new = f(x_new, g_new);
      if(std::isfinite(f_new) && f_new <= fx + settings.armijo * step * slope)
      {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    res.iterations = it + 1;
    if(!accepted) break;

    Eigen::VectorXd s = x_new - res.x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if(sy > 1e-12 * s.norm() * y.norm() && sy > 0.0)
    {
      if(static_cast<int>(s_hist.size()) == settings.memory)
      {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }

    const double decrease = fx - f_new;
    res.x.swap(x_new);
    g.swap(g_new);
    fx = f_new;
    if(decrease <= settings.relative_tolerance * std::max(1.0, std::abs(fx)))
    {
      res.converged = true;
      break;
    }
  }
  res.value = fx;
  return res;
}

AugLagResult minimize_augmented_lagrangian(const Objective & f,
                                           const Constraints & c,
                                           std::size_t num_constraints,
                                           Eigen::VectorXd x0,
                                           const AugLagSettings & settings,
                                           const Eigen::VectorXd & constraint_scale)
{
  const auto m = static_cast<Eigen::Index>(num_constraints);
  const auto n = x0.size();
  Eigen::VectorXd scale = constraint_scale.size() == m ? constraint_scale : Eigen::VectorXd::Ones(m);

  AugLagResult res;
  res.x = std::move(x0);
  res.multipliers = Eigen::VectorXd::Zero(m);
  double rho = settings.initial_penalty;

  Eigen::VectorXd cval(m);
  Eigen::MatrixXd jac(m, n);
  Eigen::VectorXd fgrad(n);

  auto violation = [&](const Eigen::VectorXd & x) {
    c(x, cval, jac);
    return m > 0 ? std::max(0.0, cval.maxCoeff()) : 0.0;
  };

  double prev_objective = std::numeric_limits<double>::infinity();
  double prev_violation = violation(res.x);

  for(int outer = 0; outer < settings.max_outer_iterations; ++outer)
  {
    const Eigen::VectorXd lambda = res.multipliers;
    Objective merit = [&](const Eigen::VectorXd & x, Eigen::VectorXd & grad) {
      double value = f(x, fgrad);
      grad = fgrad;
      c(x, cval, jac);
      for(Eigen::Index j = 0; j < m; ++j)
      {
        const double cj = cval[j] / scale[j];
        const double shifted = std::max(0.0, lambda[j] / rho + cj);
        value += 0.5 * rho * (shifted * shifted - (lambda[j] / rho) * (lambda[j] / rho));
        if(shifted > 0.0) grad += (rho * shifted / scale[j]) * jac.row(j).transpose();
      }
      return value;
    };
    auto inner = minimize_lbfgs(merit, res.x, settings.inner);
    res.x = inner.x;
    res.inner_iterations += inner.iterations;
    res.outer_iterations = outer + 1;

    res.objective = f(res.x, fgrad);
    const double viol = violation(res.x);
    for(Eigen::Index j = 0; j < m; ++j)
    {
      res.multipliers[j] = std::max(0.0, lambda[j] + rho * cval[j] / scale[j]);
    }
    res.max_violation = viol;

    const bool feasible = viol <= settings.constraint_tolerance;
    if(feasible
       && std::abs(res.objective - prev_objective)
              <= settings.objective_tolerance * std::max(1.0, std::abs(res.objective)))
    {
      break;
    }
    if(!feasible && viol > 0.25 * prev_violation)
    {
      rho = std::min(rho * settings.penalty_growth, settings.max_penalty);
    }
    prev_violation = viol;
    prev_objective = res.objective;
  }
  res.converged = res.max_violation <= settings.constraint_tolerance;
  return res;
}

Eigen::VectorXd finite_difference_gradient(const std::function<double(const Eigen::VectorXd &)> & f,
                                           const Eigen::VectorXd & x,
                                           double step)
{
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for(Eigen::Index i = 0; i < x.size(); ++i)
  {
    const double h = step * std::max(1.0, std::abs(x[i]));
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

} // namespace spatialref::optim
