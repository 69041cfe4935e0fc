#pragma once

#include <memory>
#include <mutex>
#include <optional>

#include "spatialref/manifold.hpp"

namespace spatialref
{

/// s = clamp(f_h1 / f_max, 0, 1); empty for non-finite forces. Requires f_max > 0.
std::optional<double> force_to_s(double f_h1, double f_max);

struct ControllerSettings
{
  double rate_hz = 20.0;
  double force_filter_cutoff_hz = 5.0; ///< <= 0 disables the low-pass
  double s_slew_limit = 1.0;           ///< 1/s, <= 0 disables the rate limit
};

/// Maps the measured horizontal hand force to a target configuration on the manifold.
///
/// One thread steps the controller; `snapshot` may be called concurrently.
class ManifoldController
{
public:
  struct Snapshot
  {
    double s = 0.0;
    double filtered_force = 0.0;
    JointVector target;
    bool measurement_rejected = false;
  };

  ManifoldController(ManifoldSpec manifold, ControllerSettings settings = {});

  /// Advance by dt seconds and return eval_config(manifold, s).
  JointVector step(double measured_force, double dt);

  void reset();

  double s() const { return s_; }
  double filtered_force() const { return filtered_force_; }
  const JointVector & target() const { return target_; }
  /// True when the last measurement was non-finite and the previous value was held.
  bool measurement_rejected() const { return rejected_; }

  Snapshot snapshot() const;

  const ManifoldSpec & manifold() const { return manifold_; }
  const ControllerSettings & settings() const { return settings_; }

private:
  ManifoldSpec manifold_;
  ControllerSettings settings_;
  double filtered_force_ = 0.0;
  double s_ = 0.0;
  bool rejected_ = false;
  JointVector target_;
  std::unique_ptr<std::mutex> mutex_ = std::make_unique<std::mutex>();
};

} // namespace spatialref
