#include "spatialref/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "spatialref/errors.hpp"

namespace spatialref
{

std::optional<double> force_to_s(double f_h1, double f_max)
{
  if(!(f_max > 0.0)) throw ConfigError("force_to_s: f_max must be positive");
  if(!std::isfinite(f_h1)) return std::nullopt;
  return std::clamp(f_h1 / f_max, 0.0, 1.0);
}

ManifoldController::ManifoldController(ManifoldSpec manifold, ControllerSettings settings)
: manifold_(std::move(manifold)), settings_(settings)
{
  manifold_.validate();
  if(!(manifold_.f_max > 0.0)) throw ConfigError("controller: manifold f_max must be positive");
  if(!(settings_.rate_hz > 0.0)) throw ConfigError("controller: rate must be positive");
  reset();
}

void ManifoldController::reset()
{
  std::lock_guard lock(*mutex_);
  filtered_force_ = 0.0;
  s_ = 0.0;
  rejected_ = false;
  target_ = eval_config(manifold_, 0.0);
}

JointVector ManifoldController::step(double measured_force, double dt)
{
  if(!(dt > 0.0)) throw ConfigError("controller: dt must be positive");
  double filtered = filtered_force_;
  const bool rejected = !std::isfinite(measured_force);
  if(!rejected)
  {
    if(settings_.force_filter_cutoff_hz > 0.0)
    {
      const double tau = 1.0 / (2.0 * std::numbers::pi * settings_.force_filter_cutoff_hz);
      filtered += dt / (tau + dt) * (measured_force - filtered);
    }
    else
    {
      filtered = measured_force;
    }
  }
  const double wanted = *force_to_s(filtered, manifold_.f_max);
  double s = wanted;
  if(settings_.s_slew_limit > 0.0)
  {
    const double max_step = settings_.s_slew_limit * dt;
    s = s_ + std::clamp(wanted - s_, -max_step, max_step);
  }
  JointVector target = eval_config(manifold_, s);

  std::lock_guard lock(*mutex_);
  filtered_force_ = filtered;
  s_ = s;
  rejected_ = rejected;
  target_ = target;
  return target;
}

ManifoldController::Snapshot ManifoldController::snapshot() const
{
  std::lock_guard lock(*mutex_);
  return {s_, filtered_force_, target_, rejected_};
}

} // namespace spatialref
