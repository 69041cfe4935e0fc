#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "spatialref/controller.hpp"
#include "spatialref/manifold.hpp"
#include "spatialref/robot_model.hpp"
#include "spatialref/stability.hpp"

namespace spatialref
{

/// Horizontal hand force as a function of time.
struct ForceProfile
{
  enum class Kind
  {
    sinusoid,  ///< M sin(pi t / (2 h)) on [0, 2h], zero afterwards
    piecewise, ///< linear interpolation of (t, f) breakpoints
    recorded   ///< sampled trace, linear or zero-order-hold interpolation
  };

  Kind kind = Kind::sinusoid;
  double M = 0.0; ///< N, peak
  double h = 1.0; ///< s, rise time
  std::vector<std::pair<double, double>> samples; ///< (t, f) for piecewise / recorded
  bool hold = false; ///< recorded only: zero-order hold instead of linear
  double duration = 0.0; ///< s, overrides end_time when positive

  static ForceProfile sinusoid(double M, double h);
  static ForceProfile recorded(std::vector<std::pair<double, double>> samples, bool hold = false);

  void validate() const;
  double eval(double t) const;
  /// Time after which the force stays at its final value, or `duration` when set.
  double end_time() const;
};

double force_profile_eval(const ForceProfile & p, double t);

ForceProfile force_profile_from_json(const nlohmann::json & j);
nlohmann::json to_json(const ForceProfile & p);

/// Per-kilogram PD gains; joint i uses kp * m_i and kd * m_i, m_i = mass carried by joint i.
struct PdGains
{
  double kp = 800.0; ///< N m / rad per kg of downstream mass
  double kd = 60.0;  ///< N m s / rad per kg of downstream mass
};

struct SimSettings
{
  double dt = 1e-3;             ///< s, integration step
  double gravity = kGravity;    ///< m/s^2 along z
  bool pd_enabled = true;
  PdGains gains;
  double settle_time = 1.0;     ///< s simulated after the profile ends
  double f_h2 = 0.0;            ///< N, constant vertical hand force
  double joint_limit_tolerance = 0.05; ///< rad beyond the limits before declaring failure
  bool allow_fingerprint_mismatch = false;

  void validate() const;
};

struct SimState
{
  double t = 0.0;
  JointVector q;
  JointVector qdot;
  JointVector qddot;
  HandWrench applied_wrench;
  double zmp = 0.0;
  bool contact_ok = true;
};

/// Mass matrix and the velocity/gravity bias of  M qddot + bias = tau + J_h^T f.
struct ChainDynamics
{
  Eigen::MatrixXd mass;
  Eigen::VectorXd bias;
};

ChainDynamics chain_dynamics(const RobotModel & model, const JointVector & q, const JointVector & qdot, double gravity);

/// Kinetic plus gravitational potential energy (potential datum z = 0).
double mechanical_energy(const RobotModel & model, const JointVector & q, const JointVector & qdot, double gravity);

/// Per-joint PD gains scaled by downstream mass.
std::pair<Eigen::VectorXd, Eigen::VectorXd> pd_gains(const RobotModel & model, const PdGains & gains);

/// One semi-implicit Euler step with PD tracking of `joint_targets` (zero target velocity).
///
/// The PD torque is evaluated at the end-of-step state (stable PD), which keeps stiff
/// gains stable at dt = 1 ms. The dynamic ZMP of the step is stored in the result;
/// contact_ok turns false if the vertical contact force vanishes.
SimState dynamics_step(const RobotModel & model,
                       const SimState & state,
                       const JointVector & joint_targets,
                       const HandWrench & wrench,
                       double dt,
                       const SimSettings & settings = {});

/// As above with a velocity reference for the D term.
SimState dynamics_step(const RobotModel & model,
                       const SimState & state,
                       const JointVector & joint_targets,
                       const JointVector & target_velocities,
                       const HandWrench & wrench,
                       double dt,
                       const SimSettings & settings);

enum class FailureReason
{
  none,
  zmp_exceeded_support,
  contact_loss,
  joint_limit,
  numerical
};

std::string to_string(FailureReason reason);

struct EpisodeSample
{
  double t = 0.0;
  double f_h1 = 0.0;
  double s = 0.0;
  JointVector q;
  JointVector target;
  double zmp = 0.0;
  bool inside_margin = true;
  bool inside_support = true;
};

struct EpisodeResult
{
  bool success = true;
  FailureReason failure_reason = FailureReason::none;
  double failure_time = 0.0;
  double max_abs_zmp = 0.0;
  bool margin_exceeded = false; ///< reported only; the support interval decides failure
  std::vector<EpisodeSample> series;
};

/// Controller + dynamics loop, one control tick at a time. Used by episodes and live sessions.
class EpisodeSession
{
public:
  EpisodeSession(RobotModel model, ManifoldSpec manifold, ControllerSettings controller, SimSettings sim);

  /// Back to t = 0 at rest on q(0).
  void reset();

  /// One control period: the controller reads force_at(t) and the dynamics run the
  /// substeps with force_at evaluated at each substep start. The PD reference follows a
  /// cubic Hermite segment from the previous controller target to the new one, leaving
  /// with the previous segment's end rate and arriving with the secant rate, so the
  /// reference velocity stays continuous across ticks. No-op once failed.
  EpisodeSample tick(const std::function<double(double)> & force_at);

  /// Vertical hand force from the next tick on (reset keeps it).
  void set_vertical_force(double f_h2) { sim_.f_h2 = f_h2; }

  const SimState & state() const { return state_; }
  const SimSettings & sim_settings() const { return sim_; }
  const ManifoldController & controller() const { return controller_; }
  const RobotModel & model() const { return model_; }
  int substeps_per_tick() const { return substeps_; }
  double tick_period() const { return 1.0 / controller_.settings().rate_hz; }
  long ticks() const { return ticks_; }

  bool failed() const { return failure_ != FailureReason::none; }
  FailureReason failure() const { return failure_; }
  double failure_time() const { return failure_time_; }
  double max_abs_zmp() const { return max_abs_zmp_; }
  bool margin_exceeded() const { return margin_exceeded_; }
  const EpisodeSample & last_sample() const { return last_; }

private:
  RobotModel model_;
  ManifoldController controller_;
  SimSettings sim_;
  int substeps_;
  SimState state_;
  long ticks_ = 0;
  FailureReason failure_ = FailureReason::none;
  double failure_time_ = 0.0;
  double max_abs_zmp_ = 0.0;
  bool margin_exceeded_ = false;
  double last_force_ = 0.0;
  JointVector previous_target_;
  JointVector previous_rate_;
  EpisodeSample last_;
};

EpisodeResult run_episode(const RobotModel & model,
                          const ManifoldSpec & manifold,
                          const ControllerSettings & controller,
                          const ForceProfile & profile,
                          const SimSettings & sim = {});

nlohmann::json to_json(const EpisodeResult & r, bool with_series = false);
/// Columns: t, f_h1, s, q[0..d-1], x_zmp, inside_margin, inside_support.
void write_episode_csv(const EpisodeResult & r, std::ostream & out);
std::string episode_csv_header(std::size_t dof);

} // namespace spatialref
