#include "spatialref/stability.hpp"

#include <cmath>

#include "spatialref/errors.hpp"

namespace spatialref
{

namespace
{

constexpr double kMinVerticalForce = 1.0; // N

} // namespace

void HandWrench::validate(double f_max) const
{
  if(!std::isfinite(f_h1) || !std::isfinite(f_h2)) throw ConfigError("hand wrench must be finite");
  if(std::abs(f_h1) > 10.0 * f_max) throw ConfigError("hand wrench: |f_h1| exceeds 10 f_max");
}

double zmp_static_full(const RobotModel & model, const JointVector & q, const HandWrench & wrench)
{
  const double m = model.total_mass();
  const double g = kGravity;
  const auto com = com_position(model, q);
  const auto hand = hand_position(model, q);
  const double den = -m * g - wrench.f_h2;
  if(std::abs(den) < kMinVerticalForce)
  {
    throw UnsupportedLift("unsupported lift: vertical hand force cancels the robot weight");
  }
  // Written as an offset from x_com, which is then returned unchanged at zero wrench.
  return com.x() + (wrench.f_h1 * hand.y() - wrench.f_h2 * hand.x() + wrench.f_h2 * com.x()) / den;
}

double zmp_static_simplified(const RobotModel & model, const JointVector & q, double f_h1)
{
  const double m = model.total_mass();
  const double g = kGravity;
  const auto com = com_position(model, q);
  const auto hand = hand_position(model, q);
  return com.x() + f_h1 * hand.y() / (-m * g);
}

double zmp_static_simplified(const RobotModel & model, const JointVector & q, double f_h1, JointVector & gradient)
{
  const double m = model.total_mass();
  const double g = kGravity;
  const auto Jc = com_jacobian(model, q);
  const auto Jh = hand_jacobian(model, q);
  gradient = (f_h1 * Jh.row(1) - m * g * Jc.row(0)).transpose() / (-m * g);
  return zmp_static_simplified(model, q, f_h1);
}

std::vector<Point2> link_com_accelerations(const RobotModel & model,
                                           const JointVector & q,
                                           const JointVector & qdot,
                                           const JointVector & qddot)
{
  model.check_dimension(qdot);
  model.check_dimension(qddot);
  const auto theta = link_angles(model, q);
  JointVector omega(q.size());
  double acc = 0.0;
  for(Eigen::Index i = 0; i < q.size(); ++i)
  {
    acc += qdot[i];
    omega[i] = acc;
  }
  std::vector<Point2> out;
  out.reserve(model.dof());
  Point2 bias = Point2::Zero(); // accumulated centripetal part of the proximal joint
  for(std::size_t i = 0; i < model.dof(); ++i)
  {
    const auto & l = model.links()[i];
    const auto idx = static_cast<Eigen::Index>(i);
    const Point2 u{-std::sin(theta[idx]), std::cos(theta[idx])};
    const Point2 com_bias = bias - l.com_offset * omega[idx] * omega[idx] * u;
    const auto J = point_jacobian(model, q, i, l.com_offset);
    out.push_back(J * qddot + com_bias);
    bias -= l.length * omega[idx] * omega[idx] * u;
  }
  return out;
}

double zmp_dynamic(const RobotModel & model,
                   const JointVector & q,
                   const JointVector & qdot,
                   const JointVector & qddot,
                   const HandWrench & wrench)
{
  const double g = kGravity;
  const auto coms = link_com_points(model, q);
  const auto accs = link_com_accelerations(model, q, qdot, qddot);
  // Link angular accelerations are partial sums of joint accelerations.
  double alpha = 0.0;
  double num = 0.0;
  double den = 0.0;
  for(std::size_t i = 0; i < model.dof(); ++i)
  {
    const auto & l = model.links()[i];
    alpha += qddot[static_cast<Eigen::Index>(i)];
    const auto & p = coms[i];
    const auto & a = accs[i];
    num += l.mass * ((a.y() - g) * p.x() - a.x() * p.y()) + l.inertia_zz * alpha;
    den += l.mass * (a.y() - g);
  }
  const auto hand = hand_position(model, q);
  num += wrench.f_h1 * hand.y() - wrench.f_h2 * hand.x();
  den -= wrench.f_h2;
  if(std::abs(den) < kMinVerticalForce)
  {
    throw ContactLoss("contact loss: vertical contact force vanished");
  }
  return num / den;
}

ZmpResult support_check(double x_zmp, const Interval & margin, const Interval & foot_extent)
{
  if(!foot_extent.contains(margin))
  {
    throw ConfigError("support_check: margin is wider than the support interval");
  }
  return {x_zmp, margin.contains(x_zmp), foot_extent.contains(x_zmp)};
}

} // namespace spatialref
