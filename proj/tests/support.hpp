#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spatialref/planner.hpp"
#include "spatialref/robot_model.hpp"

namespace testing
{

inline std::string data_path(const std::string & name)
{
  return std::string(SPATIALREF_DATA_DIR) + "/" + name;
}

inline const spatialref::RobotModel & default_model()
{
  static const auto model = spatialref::load_robot_model(data_path("talos_planar.json"));
  return model;
}

struct Planned
{
  spatialref::ManifoldSpec manifold;
  spatialref::SolveReport report;
};

/// Default-problem solves, computed once per test binary.
inline const Planned & planned(spatialref::PlannerMode mode)
{
  static const Planned robust = [] {
    auto [m, r] = spatialref::solve_manifold(spatialref::PlannerProblem(default_model()), spatialref::PlannerMode::robust);
    return Planned{std::move(m), std::move(r)};
  }();
  static const Planned standard = [] {
    auto [m, r] = spatialref::solve_manifold(spatialref::PlannerProblem(default_model()), spatialref::PlannerMode::standard);
    return Planned{std::move(m), std::move(r)};
  }();
  return mode == spatialref::PlannerMode::robust ? robust : standard;
}

/// Chain with wide joint limits, zero default pose; hand on the last link unless given.
inline spatialref::RobotModel chain(const std::vector<spatialref::LinkSpec> & links,
                                    std::size_t hand = static_cast<std::size_t>(-1),
                                    spatialref::Interval foot = {-0.1, 0.1})
{
  std::vector<spatialref::Interval> limits(links.size(), {-10.0, 10.0});
  return spatialref::RobotModel(links, foot, Eigen::VectorXd::Zero(static_cast<Eigen::Index>(links.size())), limits,
                                std::min(hand, links.size() - 1));
}

inline Eigen::VectorXd random_vector(std::mt19937_64 & rng, Eigen::Index n, double lo, double hi)
{
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd v(n);
  for(Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

} // namespace testing
