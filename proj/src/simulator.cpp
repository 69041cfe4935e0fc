#include "spatialref/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <sstream>

#include "json_util.hpp"
#include "spatialref/errors.hpp"

namespace spatialref
{

ForceProfile ForceProfile::sinusoid(double M, double h)
{
  ForceProfile p;
  p.kind = Kind::sinusoid;
  p.M = M;
  p.h = h;
  p.validate();
  return p;
}

ForceProfile ForceProfile::recorded(std::vector<std::pair<double, double>> samples, bool hold)
{
  ForceProfile p;
  p.kind = Kind::recorded;
  p.samples = std::move(samples);
  p.hold = hold;
  p.validate();
  return p;
}

void ForceProfile::validate() const
{
  if(kind == Kind::sinusoid)
  {
    if(!(M >= 0.0)) throw ConfigError("force profile: M must be nonnegative");
    if(!(h > 0.0)) throw ConfigError("force profile: h must be positive");
  }
  if(!(duration >= 0.0)) throw ConfigError("force profile: duration must be nonnegative");
  if(kind == Kind::sinusoid) return;
  if(samples.empty()) throw ConfigError("force profile: at least one sample is required");
  for(std::size_t i = 0; i < samples.size(); ++i)
  {
    if(!std::isfinite(samples[i].first) || !std::isfinite(samples[i].second))
    {
      throw ConfigError("force profile: samples must be finite");
    }
    if(i > 0 && !(samples[i].first > samples[i - 1].first))
    {
      throw ConfigError("force profile: sample times must be strictly increasing");
    }
  }
}

double ForceProfile::eval(double t) const
{
  if(kind == Kind::sinusoid)
  {
    if(t < 0.0 || t > 2.0 * h) return 0.0;
    return M * std::sin(std::numbers::pi * t / (2.0 * h));
  }
  if(t <= samples.front().first) return samples.front().second;
  if(t >= samples.back().first) return samples.back().second;
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double v, const std::pair<double, double> & s) { return v < s.first; });
  const auto & hi = *it;
  const auto & lo = *(it - 1);
  if(kind == Kind::recorded && hold) return lo.second;
  const double a = (t - lo.first) / (hi.first - lo.first);
  return lo.second + a * (hi.second - lo.second);
}

double ForceProfile::end_time() const
{
  if(duration > 0.0) return duration;
  return kind == Kind::sinusoid ? 2.0 * h : samples.back().first;
}

double force_profile_eval(const ForceProfile & p, double t)
{
  return p.eval(t);
}

ForceProfile force_profile_from_json(const nlohmann::json & j)
{
  using detail::expect_keys;
  try
  {
    if(!j.is_object() || !j.contains("kind")) throw ConfigError("force profile: missing field 'kind'");
    const auto kind = j.at("kind").get<std::string>();
    ForceProfile p;
    if(kind == "sinusoid")
    {
      expect_keys(j, {"kind", "M", "h"}, {"duration"}, "force profile");
      p = ForceProfile::sinusoid(detail::get_number(j, "M", "force profile"), detail::get_number(j, "h", "force profile"));
      if(j.contains("duration")) p.duration = detail::get_number(j, "duration", "force profile");
      p.validate();
      return p;
    }
    if(kind != "piecewise" && kind != "recorded") throw ConfigError("force profile: unknown kind '" + kind + "'");
    expect_keys(j, {"kind", "samples"}, {"interp", "duration"}, "force profile");
    if(j.contains("duration")) p.duration = detail::get_number(j, "duration", "force profile");
    p.kind = kind == "piecewise" ? ForceProfile::Kind::piecewise : ForceProfile::Kind::recorded;
    for(const auto & s : j.at("samples"))
    {
      const auto v = detail::vector_from_json(s, "force profile sample");
      if(v.size() != 2) throw ConfigError("force profile: samples must be [t, f] pairs");
      p.samples.emplace_back(v[0], v[1]);
    }
    if(j.contains("interp"))
    {
      const auto interp = j.at("interp").get<std::string>();
      if(interp == "hold") p.hold = true;
      else if(interp != "linear") throw ConfigError("force profile: interp must be linear|hold");
    }
    p.validate();
    return p;
  }
  catch(const nlohmann::json::exception & e)
  {
    throw ConfigError(std::string("force profile: ") + e.what());
  }
}

nlohmann::json to_json(const ForceProfile & p)
{
  nlohmann::json j;
  if(p.duration > 0.0) j["duration"] = p.duration;
  if(p.kind == ForceProfile::Kind::sinusoid)
  {
    j["kind"] = "sinusoid";
    j["M"] = p.M;
    j["h"] = p.h;
    return j;
  }
  j["kind"] = p.kind == ForceProfile::Kind::piecewise ? "piecewise" : "recorded";
  auto s = nlohmann::json::array();
  for(const auto & [t, f] : p.samples) s.push_back({t, f});
  j["samples"] = s;
  if(p.kind == ForceProfile::Kind::recorded) j["interp"] = p.hold ? "hold" : "linear";
  return j;
}

void SimSettings::validate() const
{
  if(!(dt > 0.0 && dt <= 0.01)) throw ConfigError("simulator: dt must lie in (0, 0.01] s");
  if(!(settle_time >= 0.0)) throw ConfigError("simulator: settle_time must be nonnegative");
  if(!(gains.kp >= 0.0 && gains.kd >= 0.0)) throw ConfigError("simulator: PD gains must be nonnegative");
}

ChainDynamics chain_dynamics(const RobotModel & model, const JointVector & q, const JointVector & qdot, double gravity)
{
  const auto n = static_cast<Eigen::Index>(model.dof());
  const JointVector zero = JointVector::Zero(n);
  const auto bias_acc = link_com_accelerations(model, q, qdot, zero);
  ChainDynamics dyn{Eigen::MatrixXd::Zero(n, n), Eigen::VectorXd::Zero(n)};
  const Point2 g_vec{0.0, gravity};
  for(std::size_t i = 0; i < model.dof(); ++i)
  {
    const auto & l = model.links()[i];
    const auto J = point_jacobian(model, q, i, l.com_offset);
    const auto k = static_cast<Eigen::Index>(i) + 1;
    dyn.mass.noalias() += l.mass * J.transpose() * J;
    // Link i turns with the sum of joints 0..i.
    dyn.mass.topLeftCorner(k, k).array() += l.inertia_zz;
    dyn.bias.noalias() += l.mass * J.transpose() * (bias_acc[i] - g_vec);
  }
  return dyn;
}

double mechanical_energy(const RobotModel & model, const JointVector & q, const JointVector & qdot, double gravity)
{
  const auto dyn = chain_dynamics(model, q, JointVector::Zero(q.size()), gravity);
  const auto coms = link_com_points(model, q);
  double potential = 0.0;
  for(std::size_t i = 0; i < model.dof(); ++i) potential -= model.links()[i].mass * gravity * coms[i].y();
  return 0.5 * qdot.dot(dyn.mass * qdot) + potential;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> pd_gains(const RobotModel & model, const PdGains & gains)
{
  const auto n = static_cast<Eigen::Index>(model.dof());
  Eigen::VectorXd kp(n);
  Eigen::VectorXd kd(n);
  double downstream = 0.0;
  for(Eigen::Index i = n; i-- > 0;)
  {
    downstream += model.links()[static_cast<std::size_t>(i)].mass;
    kp[i] = gains.kp * downstream;
    kd[i] = gains.kd * downstream;
  }
  return {kp, kd};
}

SimState dynamics_step(const RobotModel & model,
                       const SimState & state,
                       const JointVector & joint_targets,
                       const HandWrench & wrench,
                       double dt,
                       const SimSettings & settings)
{
  return dynamics_step(model, state, joint_targets, JointVector::Zero(state.q.size()), wrench, dt, settings);
}

SimState dynamics_step(const RobotModel & model,
                       const SimState & state,
                       const JointVector & joint_targets,
                       const JointVector & target_velocities,
                       const HandWrench & wrench,
                       double dt,
                       const SimSettings & settings)
{
  if(!(dt > 0.0 && dt <= 0.01)) throw ConfigError("dynamics_step: dt must lie in (0, 0.01] s");
  model.check_dimension(state.q);
  model.check_dimension(state.qdot);
  model.check_dimension(joint_targets);
  model.check_dimension(target_velocities);

  const auto dyn = chain_dynamics(model, state.q, state.qdot, settings.gravity);
  const Eigen::Vector2d f{wrench.f_h1, wrench.f_h2};
  Eigen::VectorXd rhs = hand_jacobian(model, state.q).transpose() * f - dyn.bias;
  Eigen::MatrixXd lhs = dyn.mass;
  if(settings.pd_enabled)
  {
    const auto [kp, kd] = pd_gains(model, settings.gains);
    lhs.diagonal() += dt * kd + dt * dt * kp;
    rhs += kp.cwiseProduct(joint_targets - state.q - dt * state.qdot) + kd.cwiseProduct(target_velocities - state.qdot);
  }

  SimState next = state;
  next.qddot = lhs.ldlt().solve(rhs);
  next.applied_wrench = wrench;
  try
  {
    if(settings.gravity == kGravity)
    {
      next.zmp = zmp_dynamic(model, state.q, state.qdot, next.qddot, wrench);
    }
    else
    {
      // zmp_dynamic assumes standard gravity; only physics tests change it.
      next.zmp = 0.0;
    }
    next.contact_ok = true;
  }
  catch(const ContactLoss &)
  {
    next.zmp = 0.0;
    next.contact_ok = false;
  }
  next.qdot = state.qdot + dt * next.qddot;
  next.q = state.q + dt * next.qdot;
  next.t = state.t + dt;
  return next;
}

std::string to_string(FailureReason reason)
{
  switch(reason)
  {
    case FailureReason::none:
      return "";
    case FailureReason::zmp_exceeded_support:
      return "zmp_exceeded_support";
    case FailureReason::contact_loss:
      return "contact_loss";
    case FailureReason::joint_limit:
      return "joint_limit";
    case FailureReason::numerical:
      return "numerical";
  }
  return "";
}

namespace
{

int substeps_for(const ControllerSettings & c, const SimSettings & s)
{
  const double ratio = 1.0 / (c.rate_hz * s.dt);
  const auto n = static_cast<int>(std::lround(ratio));
  if(n < 1 || std::abs(ratio - n) > 1e-6)
  {
    throw ConfigError("simulator: control period must be an integer multiple of dt");
  }
  return n;
}

/// PD equilibrium under gravity and a constant wrench: Kp (q* - q) = G(q) - J^T f.
JointVector settle_configuration(const RobotModel & model,
                                 const JointVector & target,
                                 const HandWrench & wrench,
                                 const SimSettings & s)
{
  if(!s.pd_enabled) return target;
  const auto [kp, kd] = pd_gains(model, s.gains);
  if((kp.array() <= 0.0).any()) return target;
  JointVector q = target;
  const Eigen::Vector2d f{wrench.f_h1, wrench.f_h2};
  for(int it = 0; it < 50; ++it)
  {
    const auto dyn = chain_dynamics(model, q, JointVector::Zero(q.size()), s.gravity);
    const JointVector load = dyn.bias - hand_jacobian(model, q).transpose() * f;
    const JointVector next = target - load.cwiseQuotient(kp);
    const double change = (next - q).cwiseAbs().maxCoeff();
    q = next;
    if(change < 1e-14) break;
  }
  return q;
}

} // namespace

EpisodeSession::EpisodeSession(RobotModel model, ManifoldSpec manifold, ControllerSettings controller, SimSettings sim)
: model_(std::move(model)), controller_(std::move(manifold), controller), sim_(sim), substeps_(0)
{
  sim_.validate();
  substeps_ = substeps_for(controller_.settings(), sim_);
  if(controller_.manifold().full_dim() != model_.dof())
  {
    throw DimensionError("episode: manifold dimension does not match the model");
  }
  if(!sim_.allow_fingerprint_mismatch && controller_.manifold().model_fingerprint != model_.fingerprint())
  {
    throw FingerprintMismatch("episode: manifold was planned for model " + controller_.manifold().model_fingerprint
                              + ", simulating " + model_.fingerprint());
  }
  reset();
}

void EpisodeSession::reset()
{
  controller_.reset();
  const auto n = static_cast<Eigen::Index>(model_.dof());
  state_ = SimState{};
  state_.q = settle_configuration(model_, controller_.target(), {0.0, sim_.f_h2}, sim_);
  state_.qdot = JointVector::Zero(n);
  state_.qddot = JointVector::Zero(n);
  state_.applied_wrench = {0.0, sim_.f_h2};
  state_.zmp = zmp_static_full(model_, state_.q, state_.applied_wrench);
  ticks_ = 0;
  failure_ = FailureReason::none;
  failure_time_ = 0.0;
  max_abs_zmp_ = std::abs(state_.zmp);
  margin_exceeded_ = !controller_.manifold().delta_margin.contains(state_.zmp);
  last_force_ = 0.0;
  previous_target_ = controller_.target();
  previous_rate_ = JointVector::Zero(n);
  last_ = EpisodeSample{0.0, 0.0, 0.0, state_.q, controller_.target(), state_.zmp,
                        !margin_exceeded_, model_.foot_extent().contains(state_.zmp)};
}

EpisodeSample EpisodeSession::tick(const std::function<double(double)> & force_at)
{
  if(failed()) return last_;
  const double period = tick_period();
  const double t0 = static_cast<double>(ticks_) * period;
  const JointVector target = controller_.step(force_at(t0), period);
  const auto & margin = controller_.manifold().delta_margin;
  const auto & support = model_.foot_extent();

  const JointVector & p0 = previous_target_;
  const JointVector end_rate = (target - p0) / period;
  const JointVector m0 = previous_rate_ * period;
  const JointVector m1 = end_rate * period;
  for(int k = 0; k < substeps_; ++k)
  {
    const double t = t0 + k * sim_.dt;
    const double a = static_cast<double>(k + 1) / substeps_;
    const double a2 = a * a;
    const double a3 = a2 * a;
    const JointVector reference = (2 * a3 - 3 * a2 + 1) * p0 + (a3 - 2 * a2 + a) * m0 + (-2 * a3 + 3 * a2) * target
                                  + (a3 - a2) * m1;
    const JointVector reference_rate =
        ((6 * a2 - 6 * a) * p0 + (3 * a2 - 4 * a + 1) * m0 + (-6 * a2 + 6 * a) * target + (3 * a2 - 2 * a) * m1)
        / period;
    last_force_ = force_at(t);
    state_ = dynamics_step(model_, state_, reference, reference_rate, {last_force_, sim_.f_h2}, sim_.dt, sim_);
    state_.t = t0 + (k + 1) * sim_.dt;
    if(!state_.q.allFinite() || !state_.qdot.allFinite() || !std::isfinite(state_.zmp))
    {
      failure_ = FailureReason::numerical;
    }
    else if(!state_.contact_ok)
    {
      failure_ = FailureReason::contact_loss;
    }
    else
    {
      max_abs_zmp_ = std::max(max_abs_zmp_, std::abs(state_.zmp));
      margin_exceeded_ = margin_exceeded_ || !margin.contains(state_.zmp);
      if(!support.contains(state_.zmp))
      {
        failure_ = FailureReason::zmp_exceeded_support;
      }
      else if(!model_.within_limits(state_.q, sim_.joint_limit_tolerance))
      {
        failure_ = FailureReason::joint_limit;
      }
    }
    if(failed())
    {
      failure_time_ = state_.t;
      break;
    }
  }
  previous_target_ = target;
  previous_rate_ = end_rate;
  ++ticks_;
  if(!failed()) state_.t = static_cast<double>(ticks_) * period;
  last_ = EpisodeSample{state_.t, last_force_, controller_.s(), state_.q, target, state_.zmp,
                        margin.contains(state_.zmp), support.contains(state_.zmp)};
  return last_;
}

EpisodeResult run_episode(const RobotModel & model,
                          const ManifoldSpec & manifold,
                          const ControllerSettings & controller,
                          const ForceProfile & profile,
                          const SimSettings & sim)
{
  profile.validate();
  EpisodeSession session(model, manifold, controller, sim);
  const double duration = profile.end_time() + sim.settle_time;
  const auto ticks = static_cast<long>(std::ceil(duration / session.tick_period() - 1e-9));
  EpisodeResult result;
  result.series.push_back(session.last_sample());
  const std::function<double(double)> force = [&profile](double t) { return profile.eval(t); };
  for(long i = 0; i < ticks && !session.failed(); ++i)
  {
    result.series.push_back(session.tick(force));
  }
  result.success = !session.failed();
  result.failure_reason = session.failure();
  result.failure_time = session.failure_time();
  result.max_abs_zmp = session.max_abs_zmp();
  result.margin_exceeded = session.margin_exceeded();
  return result;
}

nlohmann::json to_json(const EpisodeResult & r, bool with_series)
{
  nlohmann::json j;
  j["success"] = r.success;
  j["failure_reason"] = r.success ? nlohmann::json(nullptr) : nlohmann::json(to_string(r.failure_reason));
  j["failure_time"] = r.failure_time;
  j["max_abs_zmp"] = r.max_abs_zmp;
  j["margin_exceeded"] = r.margin_exceeded;
  j["samples"] = r.series.size();
  if(with_series)
  {
    auto s = nlohmann::json::array();
    for(const auto & e : r.series)
    {
      s.push_back({{"t", e.t}, {"f_h1", e.f_h1}, {"s", e.s}, {"q", detail::vector_to_json(e.q)}, {"x_zmp", e.zmp},
                   {"inside_margin", e.inside_margin}, {"inside_support", e.inside_support}});
    }
    j["series"] = s;
  }
  return j;
}

std::string episode_csv_header(std::size_t dof)
{
  std::string h = "t,f_h1,s";
  for(std::size_t i = 0; i < dof; ++i) h += ",q" + std::to_string(i);
  h += ",x_zmp,inside_margin,inside_support";
  return h;
}

void write_episode_csv(const EpisodeResult & r, std::ostream & out)
{
  const std::size_t dof = r.series.empty() ? 0 : static_cast<std::size_t>(r.series.front().q.size());
  out << episode_csv_header(dof) << '\n';
  std::ostringstream row;
  row << std::setprecision(10);
  for(const auto & e : r.series)
  {
    row.str("");
    row << e.t << ',' << e.f_h1 << ',' << e.s;
    for(Eigen::Index i = 0; i < e.q.size(); ++i) row << ',' << e.q[i];
    row << ',' << e.zmp << ',' << (e.inside_margin ? 1 : 0) << ',' << (e.inside_support ? 1 : 0);
    out << row.str() << '\n';
  }
}

} // namespace spatialref
