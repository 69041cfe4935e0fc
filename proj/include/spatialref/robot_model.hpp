#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace spatialref
{

/// Joint angles in radians, one per joint of the planar chain.
using JointVector = Eigen::VectorXd;

/// A point of the sagittal plane: (x forward, z up), metres.
using Point2 = Eigen::Vector2d;

/// 2 x dof Jacobian of a planar point with respect to the joint angles.
using PointJacobian = Eigen::Matrix<double, 2, Eigen::Dynamic>;

struct LinkSpec
{
  double length = 0.0;     ///< m
  double mass = 0.0;       ///< kg
  double com_offset = 0.0; ///< m, along the link from its proximal joint
  double inertia_zz = 0.0; ///< kg m^2 about the link CoM
};

/// Closed interval on the anterior axis, metres.
struct Interval
{
  double lower = 0.0;
  double upper = 0.0;

  bool contains(double x) const { return x >= lower && x <= upper; }
  bool contains(const Interval & other) const { return other.lower >= lower && other.upper <= upper; }
  double width() const { return upper - lower; }
};

/// Planar serial chain rooted at the ankle, which sits at the origin.
///
/// Joint i rotates link i relative to link i-1 (link 0 relative to the
/// vertical). Zero angles stand the chain straight up; positive rotation is
/// counter-clockwise in the x-z plane, i.e. it turns +z towards -x.
class RobotModel
{
public:
  RobotModel(std::vector<LinkSpec> links,
             Interval foot_extent,
             JointVector default_config,
             std::vector<Interval> joint_limits,
             std::size_t hand_link_index);

  std::size_t dof() const { return links_.size(); }
  const std::vector<LinkSpec> & links() const { return links_; }
  const Interval & foot_extent() const { return foot_extent_; }
  const JointVector & default_config() const { return default_config_; }
  const std::vector<Interval> & joint_limits() const { return joint_limits_; }
  std::size_t hand_link_index() const { return hand_link_index_; }
  double total_mass() const { return total_mass_; }

  bool within_limits(const JointVector & q, double tolerance = 0.0) const;

  /// Throws DimensionError unless q has one entry per joint.
  void check_dimension(const JointVector & q) const;

  /// Stable hash of the canonical JSON form; tags manifolds planned on this model.
  std::string fingerprint() const;

private:
  std::vector<LinkSpec> links_;
  Interval foot_extent_;
  JointVector default_config_;
  std::vector<Interval> joint_limits_;
  std::size_t hand_link_index_;
  double total_mass_;
};

/// Absolute orientation of every link measured from the vertical.
JointVector link_angles(const RobotModel & model, const JointVector & q);

/// Distal end of every link.
std::vector<Point2> forward_kinematics(const RobotModel & model, const JointVector & q);

/// CoM of every link.
std::vector<Point2> link_com_points(const RobotModel & model, const JointVector & q);

/// Whole-body centre of mass (x_CoM1, z_CoM).
Point2 com_position(const RobotModel & model, const JointVector & q);

/// Tip of the hand link (x_h1, x_h2).
Point2 hand_position(const RobotModel & model, const JointVector & q);

/// Jacobian of the point located `offset` metres along link `link`.
PointJacobian point_jacobian(const RobotModel & model, const JointVector & q, std::size_t link, double offset);

PointJacobian com_jacobian(const RobotModel & model, const JointVector & q);
PointJacobian hand_jacobian(const RobotModel & model, const JointVector & q);

/// d x r map from reduced to full joint coordinates.
class CoordinationMatrix
{
public:
  explicit CoordinationMatrix(Eigen::MatrixXd entries);

  static CoordinationMatrix identity(std::size_t d);

  /// Each reduced joint drives a consecutive (left, right) pair: 2r x r.
  static CoordinationMatrix symmetric_pairs(std::size_t r);

  std::size_t full_dim() const { return static_cast<std::size_t>(entries_.rows()); }
  std::size_t reduced_dim() const { return static_cast<std::size_t>(entries_.cols()); }
  const Eigen::MatrixXd & entries() const { return entries_; }

  JointVector expand(const JointVector & q_reduced) const;

  /// Least-squares preimage; throws ConfigError if q_full is not in range(C).
  JointVector reduce(const JointVector & q_full, double tolerance = 1e-9) const;

private:
  Eigen::MatrixXd entries_;
};

JointVector expand_config(const CoordinationMatrix & C, const JointVector & q_reduced);

RobotModel robot_model_from_json(const nlohmann::json & j);
nlohmann::json to_json(const RobotModel & model);
RobotModel load_robot_model(const std::string & path);

CoordinationMatrix coordination_from_json(const nlohmann::json & j);
nlohmann::json to_json(const CoordinationMatrix & C);

} // namespace spatialref
