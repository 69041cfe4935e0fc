#pragma once

#include <vector>

#include "spatialref/robot_model.hpp"

namespace spatialref
{

/// Gravity acceleration along z, m/s^2. Kept negative so the ZMP formulas read literally.
inline constexpr double kGravity = -9.81;

/// Force applied by the human on the robot hands, N.
struct HandWrench
{
  double f_h1 = 0.0; ///< horizontal, anterior positive
  double f_h2 = 0.0; ///< vertical, upward positive

  /// Throws ConfigError on non-finite values or |f_h1| > 10 f_max.
  void validate(double f_max) const;
};

struct ZmpResult
{
  double x_zmp = 0.0;
  bool inside_margin = false;
  bool inside_support = false;
};

/// Static ZMP with both wrench components:
/// (f_h1 x_h2 - f_h2 x_h1 - m g x_CoM1) / (-m g - f_h2).
/// Throws UnsupportedLift when |-m g - f_h2| < 1 N.
double zmp_static_full(const RobotModel & model, const JointVector & q, const HandWrench & wrench);

/// Static ZMP neglecting the vertical hand force: (f_h1 x_h2 - m g x_CoM1) / (-m g).
double zmp_static_simplified(const RobotModel & model, const JointVector & q, double f_h1);

/// Same as above, also writing d zmp / d q into `gradient`.
double zmp_static_simplified(const RobotModel & model, const JointVector & q, double f_h1, JointVector & gradient);

/// Per-link CoM accelerations for the given joint state.
std::vector<Point2> link_com_accelerations(const RobotModel & model,
                                           const JointVector & q,
                                           const JointVector & qdot,
                                           const JointVector & qddot);

/// ZMP from the full moment balance of the chain, including link rotational inertia.
/// Throws ContactLoss when the vertical contact force drops below 1 N.
double zmp_dynamic(const RobotModel & model,
                   const JointVector & q,
                   const JointVector & qdot,
                   const JointVector & qddot,
                   const HandWrench & wrench);

/// Throws ConfigError if the margin is not contained in the support interval.
ZmpResult support_check(double x_zmp, const Interval & margin, const Interval & foot_extent);

} // namespace spatialref
