#include "spatialref/robot_model.hpp"

#include <cmath>

#include "json_util.hpp"
#include "spatialref/errors.hpp"

namespace spatialref
{

namespace
{

Point2 direction(double angle)
{
  return {-std::sin(angle), std::cos(angle)};
}

// d direction / d angle
Point2 direction_rate(double angle)
{
  return {-std::cos(angle), -std::sin(angle)};
}

} // namespace

RobotModel::RobotModel(std::vector<LinkSpec> links,
                       Interval foot_extent,
                       JointVector default_config,
                       std::vector<Interval> joint_limits,
                       std::size_t hand_link_index)
: links_(std::move(links)), foot_extent_(foot_extent), default_config_(std::move(default_config)),
  joint_limits_(std::move(joint_limits)), hand_link_index_(hand_link_index), total_mass_(0.0)
{
  if(links_.empty())
  {
    throw ConfigError("robot model: at least one link is required");
  }
  for(std::size_t i = 0; i < links_.size(); ++i)
  {
    const auto & l = links_[i];
    const auto tag = "robot model: link " + std::to_string(i);
    if(!(l.length > 0.0)) throw ConfigError(tag + " length must be positive");
    if(!(l.mass >= 0.0)) throw ConfigError(tag + " mass must be nonnegative");
    if(!(l.com_offset >= 0.0 && l.com_offset <= l.length)) throw ConfigError(tag + " com_offset outside [0, length]");
    if(!(l.inertia_zz >= 0.0)) throw ConfigError(tag + " inertia_zz must be nonnegative");
    total_mass_ += l.mass;
  }
  if(!(total_mass_ > 0.0))
  {
    throw ConfigError("robot model: total mass must be positive");
  }
  if(!(foot_extent_.lower < foot_extent_.upper))
  {
    throw ConfigError("robot model: foot_extent must satisfy min < max");
  }
  if(static_cast<std::size_t>(default_config_.size()) != links_.size())
  {
    throw DimensionError("robot model: default_config has " + std::to_string(default_config_.size())
                         + " entries for " + std::to_string(links_.size()) + " joints");
  }
  if(joint_limits_.size() != links_.size())
  {
    throw DimensionError("robot model: joint_limits has " + std::to_string(joint_limits_.size()) + " entries for "
                         + std::to_string(links_.size()) + " joints");
  }
  for(const auto & lim : joint_limits_)
  {
    if(!(lim.lower <= lim.upper)) throw ConfigError("robot model: joint limit with lower > upper");
  }
  if(hand_link_index_ >= links_.size())
  {
    throw ConfigError("robot model: hand_link_index out of range");
  }
  if(!within_limits(default_config_))
  {
    throw ConfigError("robot model: default_config violates joint_limits");
  }
}

void RobotModel::check_dimension(const JointVector & q) const
{
  if(static_cast<std::size_t>(q.size()) != dof())
  {
    throw DimensionError("joint vector has " + std::to_string(q.size()) + " entries, model has "
                         + std::to_string(dof()) + " joints");
  }
}

bool RobotModel::within_limits(const JointVector & q, double tolerance) const
{
  check_dimension(q);
  for(std::size_t i = 0; i < dof(); ++i)
  {
    const auto v = q[static_cast<Eigen::Index>(i)];
    if(v < joint_limits_[i].lower - tolerance || v > joint_limits_[i].upper + tolerance) return false;
  }
  return true;
}

std::string RobotModel::fingerprint() const
{
  return "fnv1a64:" + detail::fnv1a_hex(to_json(*this).dump());
}

JointVector link_angles(const RobotModel & model, const JointVector & q)
{
  model.check_dimension(q);
  JointVector theta(q.size());
  double acc = 0.0;
  for(Eigen::Index i = 0; i < q.size(); ++i)
  {
    acc += q[i];
    theta[i] = acc;
  }
  return theta;
}

std::vector<Point2> forward_kinematics(const RobotModel & model, const JointVector & q)
{
  const auto theta = link_angles(model, q);
  std::vector<Point2> tips;
  tips.reserve(model.dof());
  Point2 p = Point2::Zero();
  for(std::size_t i = 0; i < model.dof(); ++i)
  {
    p += model.links()[i].length * direction(theta[static_cast<Eigen::Index>(i)]);
    tips.push_back(p);
  }
  return tips;
}

std::vector<Point2> link_com_points(const RobotModel & model, const JointVector & q)
{
  const auto theta = link_angles(model, q);
  std::vector<Point2> coms;
  coms.reserve(model.dof());
  Point2 base = Point2::Zero();
  for(std::size_t i = 0; i < model.dof(); ++i)
  {
    const auto & l = model.links()[i];
    const auto u = direction(theta[static_cast<Eigen::Index>(i)]);
    coms.push_back(base + l.com_offset * u);
    base += l.length * u;
  }
  return coms;
}

Point2 com_position(const RobotModel & model, const JointVector & q)
{
  const auto coms = link_com_points(model, q);
  Point2 acc = Point2::Zero();
  for(std::size_t i = 0; i < model.dof(); ++i) acc += model.links()[i].mass * coms[i];
  return acc / model.total_mass();
}

Point2 hand_position(const RobotModel & model, const JointVector & q)
{
  return forward_kinematics(model, q)[model.hand_link_index()];
}

PointJacobian point_jacobian(const RobotModel & model, const JointVector & q, std::size_t link, double offset)
{
  const auto theta = link_angles(model, q);
  if(link >= model.dof()) throw DimensionError("point_jacobian: link index out of range");
  const auto n = static_cast<Eigen::Index>(model.dof());
  // Column j collects the rate contributions of links j..link.
  std::vector<Point2> contrib(link + 1);
  for(std::size_t k = 0; k <= link; ++k)
  {
    const double lever = k < link ? model.links()[k].length : offset;
    contrib[k] = lever * direction_rate(theta[static_cast<Eigen::Index>(k)]);
  }
  PointJacobian J = PointJacobian::Zero(2, n);
  Point2 suffix = Point2::Zero();
  for(std::size_t k = link + 1; k-- > 0;)
  {
    suffix += contrib[k];
    J.col(static_cast<Eigen::Index>(k)) = suffix;
  }
  return J;
}

PointJacobian com_jacobian(const RobotModel & model, const JointVector & q)
{
  PointJacobian J = PointJacobian::Zero(2, static_cast<Eigen::Index>(model.dof()));
  for(std::size_t i = 0; i < model.dof(); ++i)
  {
    const auto & l = model.links()[i];
    if(l.mass == 0.0) continue;
    J += l.mass * point_jacobian(model, q, i, l.com_offset);
  }
  return J / model.total_mass();
}

PointJacobian hand_jacobian(const RobotModel & model, const JointVector & q)
{
  const auto h = model.hand_link_index();
  return point_jacobian(model, q, h, model.links()[h].length);
}

CoordinationMatrix::CoordinationMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries))
{
  if(entries_.rows() == 0 || entries_.cols() == 0)
  {
    throw ConfigError("coordination matrix must be non-empty");
  }
  for(Eigen::Index c = 0; c < entries_.cols(); ++c)
  {
    if((entries_.col(c).array() == 0.0).all())
    {
      throw ConfigError("coordination matrix column " + std::to_string(c) + " is all zero");
    }
  }
}

CoordinationMatrix CoordinationMatrix::identity(std::size_t d)
{
  const auto n = static_cast<Eigen::Index>(d);
  return CoordinationMatrix(Eigen::MatrixXd::Identity(n, n));
}

CoordinationMatrix CoordinationMatrix::symmetric_pairs(std::size_t r)
{
  const auto n = static_cast<Eigen::Index>(r);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(2 * n, n);
  for(Eigen::Index k = 0; k < n; ++k)
  {
    C(2 * k, k) = 1.0;
    C(2 * k + 1, k) = 1.0;
  }
  return CoordinationMatrix(std::move(C));
}

JointVector CoordinationMatrix::expand(const JointVector & q_reduced) const
{
  if(q_reduced.size() != entries_.cols())
  {
    throw DimensionError("expand_config: reduced vector has " + std::to_string(q_reduced.size())
                         + " entries, coordination matrix expects " + std::to_string(entries_.cols()));
  }
  return entries_ * q_reduced;
}

JointVector CoordinationMatrix::reduce(const JointVector & q_full, double tolerance) const
{
  if(q_full.size() != entries_.rows())
  {
    throw DimensionError("coordination matrix: full vector has " + std::to_string(q_full.size())
                         + " entries, expected " + std::to_string(entries_.rows()));
  }
  JointVector r = entries_.colPivHouseholderQr().solve(q_full);
  if((entries_ * r - q_full).cwiseAbs().maxCoeff() > tolerance)
  {
    throw ConfigError("configuration is not representable by the coordination matrix");
  }
  return r;
}

JointVector expand_config(const CoordinationMatrix & C, const JointVector & q_reduced)
{
  return C.expand(q_reduced);
}

RobotModel robot_model_from_json(const nlohmann::json & j)
{
  using detail::expect_keys;
  using detail::get_number;
  expect_keys(j, {"links", "foot_extent", "default_config", "joint_limits", "hand_link_index"}, {}, "robot model");
  std::vector<LinkSpec> links;
  if(!j.at("links").is_array()) throw ConfigError("robot model: links must be an array");
  for(const auto & lj : j.at("links"))
  {
    expect_keys(lj, {"length", "mass", "com_offset", "inertia_zz"}, {}, "robot model link");
    links.push_back({get_number(lj, "length", "link"), get_number(lj, "mass", "link"),
                     get_number(lj, "com_offset", "link"), get_number(lj, "inertia_zz", "link")});
  }
  const auto foot = detail::vector_from_json(j.at("foot_extent"), "foot_extent");
  if(foot.size() != 2) throw ConfigError("robot model: foot_extent must be [min, max]");
  std::vector<Interval> limits;
  if(!j.at("joint_limits").is_array()) throw ConfigError("robot model: joint_limits must be an array");
  for(const auto & lj : j.at("joint_limits"))
  {
    const auto v = detail::vector_from_json(lj, "joint_limits");
    if(v.size() != 2) throw ConfigError("robot model: each joint limit must be [lo, hi]");
    limits.push_back({v[0], v[1]});
  }
  const auto & hand = j.at("hand_link_index");
  if(!hand.is_number_integer() || hand.get<long long>() < 0)
  {
    throw ConfigError("robot model: hand_link_index must be a nonnegative integer");
  }
  return RobotModel(std::move(links), {foot[0], foot[1]}, detail::vector_from_json(j.at("default_config"), "default_config"),
                    std::move(limits), hand.get<std::size_t>());
}

nlohmann::json to_json(const RobotModel & model)
{
  nlohmann::json j;
  auto links = nlohmann::json::array();
  for(const auto & l : model.links())
  {
    links.push_back({{"length", l.length}, {"mass", l.mass}, {"com_offset", l.com_offset}, {"inertia_zz", l.inertia_zz}});
  }
  j["links"] = links;
  j["foot_extent"] = {model.foot_extent().lower, model.foot_extent().upper};
  j["default_config"] = detail::vector_to_json(model.default_config());
  auto limits = nlohmann::json::array();
  for(const auto & l : model.joint_limits()) limits.push_back({l.lower, l.upper});
  j["joint_limits"] = limits;
  j["hand_link_index"] = model.hand_link_index();
  return j;
}

RobotModel load_robot_model(const std::string & path)
{
  try
  {
    return robot_model_from_json(detail::read_json_file(path));
  }
  catch(const nlohmann::json::exception & e)
  {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

CoordinationMatrix coordination_from_json(const nlohmann::json & j)
{
  if(!j.is_array() || j.empty()) throw ConfigError("coordination matrix must be a non-empty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto first = detail::vector_from_json(j[0], "coordination matrix row");
  Eigen::MatrixXd C(rows, first.size());
  for(Eigen::Index r = 0; r < rows; ++r)
  {
    const auto row = detail::vector_from_json(j[static_cast<std::size_t>(r)], "coordination matrix row");
    if(row.size() != first.size()) throw DimensionError("coordination matrix rows differ in length");
    C.row(r) = row.transpose();
  }
  return CoordinationMatrix(std::move(C));
}

nlohmann::json to_json(const CoordinationMatrix & C)
{
  auto j = nlohmann::json::array();
  for(Eigen::Index r = 0; r < C.entries().rows(); ++r)
  {
    j.push_back(detail::vector_to_json(C.entries().row(r).transpose()));
  }
  return j;
}

} // namespace spatialref
