#include <doctest.h>

#include <cmath>
#include <numbers>

#include "spatialref/errors.hpp"
#include "spatialref/harness.hpp"
#include "support.hpp"

using namespace spatialref;

namespace
{

// Massless vertical rod of length L, then a 0.05 m link pointing -x carrying 10 kg at its tip (the hand).
// ZMP(p) = -0.05 + p L / (10 * 9.81); with L = 0.15 * 98.1 / 200 the slope is 0.15 / 200.
RobotModel affine_model()
{
  const double L = 0.15 * 98.1 / 200.0;
  return testing::chain({{L, 0.0, 0.0, 0.0}, {0.05, 10.0, 0.05, 0.0}}, 1, {-0.5, 0.5});
}

JointVector affine_pose()
{
  return (JointVector(2) << 0.0, std::numbers::pi / 2).finished();
}

} // namespace

TEST_CASE("standard cost is the squared simplified ZMP")
{
  const auto & m = testing::default_model();
  std::mt19937_64 rng(2);
  const JointVector q = testing::random_vector(rng, 5, -0.5, 0.5);
  const double z = zmp_static_simplified(m, q, 73.0);
  CHECK(cost_standard(m, q, 73.0) == doctest::Approx(z * z).epsilon(1e-14));
}

TEST_CASE("standard cost of 0.1 m ZMP is 0.01")
{
  // Point mass on a vertical rod: ZMP = f h / (m g). Choose f so the ZMP is 0.1 m.
  const auto m = testing::chain({{1.0, 10.0, 1.0, 0.0}});
  const JointVector q = JointVector::Zero(1);
  CHECK(cost_standard(m, q, 0.0) == 0.0);
  CHECK(cost_standard(m, q, 9.81) == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("robust cost of an affine ZMP equals the explicit hinge sum")
{
  const auto m = affine_model();
  const auto q = affine_pose();
  REQUIRE(zmp_static_simplified(m, q, 0.0) == doctest::Approx(-0.05));
  REQUIRE(zmp_static_simplified(m, q, 200.0) == doctest::Approx(0.10));
  double expected = 0.0;
  for(int k = 0; k <= 20; ++k)
  {
    const double p = 10.0 * k;
    const double z = -0.05 + p * (0.15 / 200.0);
    if(p > 133.3) expected += (z - 0.05) * (z - 0.05);
    else CHECK(z <= 0.05 + 1e-12);
  }
  CHECK(cost_robust(m, q, 200.0, {-0.05, 0.05}, 21) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("robust cost degenerates to a single hinge at f_max = 0")
{
  const auto m = affine_model();
  const auto q = affine_pose();
  CHECK(cost_robust(m, q, 0.0, {-0.05, 0.05}, 21) < 1e-30);
  const double hinge = 0.01 - (-0.05);
  CHECK(cost_robust(m, q, 0.0, {0.01, 0.05}, 21) == doctest::Approx(hinge * hinge).epsilon(1e-12));
}

TEST_CASE("robust cost is nonnegative and shrinks when the margin widens")
{
  const auto & m = testing::default_model();
  std::mt19937_64 rng(3);
  for(int trial = 0; trial < 20; ++trial)
  {
    const JointVector q = testing::random_vector(rng, 5, -0.6, 0.6);
    const double narrow = cost_robust(m, q, 200.0, {-0.03, 0.03}, 21);
    const double wide = cost_robust(m, q, 200.0, {-0.06, 0.08}, 21);
    CHECK(wide >= 0.0);
    CHECK(wide <= narrow);
  }
}

TEST_CASE("objective gradient matches central differences")
{
  PlannerProblem pb(testing::default_model());
  std::mt19937_64 rng(77);
  const auto n = static_cast<Eigen::Index>(5 * 11);
  for(auto mode : {PlannerMode::robust, PlannerMode::standard})
  {
    for(int trial = 0; trial < 10; ++trial)
    {
      Eigen::VectorXd w(n);
      for(Eigen::Index k = 0; k < 5; ++k)
      {
        w.segment(k * 11, 11) = testing::random_vector(rng, 11, -0.4, 0.4).array() + pb.anchor_config[k];
      }
      Eigen::VectorXd g;
      planner_objective(pb, mode, w, &g);
      Eigen::VectorXd fd(n);
      const double h = 1e-6;
      for(Eigen::Index i = 0; i < n; ++i)
      {
        Eigen::VectorXd a = w, b = w;
        a[i] += h;
        b[i] -= h;
        fd[i] = (planner_objective(pb, mode, a, nullptr) - planner_objective(pb, mode, b, nullptr)) / (2 * h);
      }
      CHECK((g - fd).norm() / std::max(1e-8, fd.norm()) < 1e-4);
    }
  }
}

TEST_CASE("zero force range yields a constant manifold")
{
  PlannerProblem pb(testing::default_model());
  pb.f_max = 0.0;
  for(auto mode : {PlannerMode::robust, PlannerMode::standard})
  {
    auto [m, r] = solve_manifold(pb, mode);
    CHECK(r.converged);
    const JointVector q0 = eval_config(m, 0.0);
    for(double s : {0.3, 1.0}) CHECK((eval_config(m, s) - q0).cwiseAbs().maxCoeff() < 1e-5);
    if(mode == PlannerMode::robust)
    {
      // The anchor already satisfies the margin, so nothing pulls it away.
      CHECK(r.final_cost == 0.0);
      CHECK((q0 - pb.anchor_config).cwiseAbs().maxCoeff() < 1e-6);
    }
    else
    {
      CHECK(std::abs(zmp_static_simplified(pb.model, q0, 0.0)) < 1e-4);
    }
  }
}

TEST_CASE("pinned anchor holds q(0)")
{
  PlannerProblem pb(testing::default_model());
  pb.pin_anchor = true;
  auto [m, r] = solve_manifold(pb, PlannerMode::robust);
  CHECK((eval_config(m, 0.0) - pb.anchor_config).norm() == 0.0);
  CHECK(r.max_constraint_violation <= 1e-3);
}

TEST_CASE("unreachable margin is reported as infeasible")
{
  const auto & base = testing::default_model();
  const RobotModel wide(base.links(), {-0.6, 0.6}, base.default_config(), base.joint_limits(), base.hand_link_index());
  PlannerProblem pb(wide);
  pb.delta_margin = {0.30, 0.40};
  auto [m, r] = solve_manifold(pb, PlannerMode::robust);
  CHECK_FALSE(r.converged);
  CHECK(r.max_zmp_violation > pb.solver.constraint_tolerance);
  CHECK(r.message.find("infeasible") != std::string::npos);
  CHECK(m.w.size() == 55);
}

TEST_CASE("margin outside the support is a configuration error")
{
  PlannerProblem pb(testing::default_model());
  pb.delta_margin = {-0.05, 0.2};
  CHECK_THROWS_AS(pb.validate(), ConfigError);
}

TEST_CASE("robust manifold: feasible trace hugging the lower margin")
{
  const auto & p = testing::planned(PlannerMode::robust);
  const auto & r = p.report;
  CHECK(r.converged);
  CHECK(r.samples == 20);
  REQUIRE(r.trace.size() == 20);
  CHECK(r.max_constraint_violation <= r.tolerance);
  for(const auto & t : r.trace)
  {
    CHECK(t.zmp >= -0.05 - r.tolerance);
    CHECK(t.zmp <= 0.05 + r.tolerance);
    CHECK(t.hand_displacement <= 0.10 + r.tolerance);
  }
  CHECK(std::abs(r.trace.front().zmp - (-0.05)) < 0.02);
  CHECK(r.trace.front().force == 0.0);
  CHECK(r.trace.back().force == 200.0);
  // Either the flat zero is reached or the residual is certified.
  CHECK((r.robust_cost <= 1e-6 || (!r.zero_robust_cost_attainable && r.robust_cost >= r.robust_cost_floor - 1e-9)));
}

TEST_CASE("standard manifold regulates the ZMP closer to zero")
{
  const auto & rob = testing::planned(PlannerMode::robust).report;
  const auto & std_ = testing::planned(PlannerMode::standard).report;
  CHECK(std_.converged);
  double a = 0.0, b = 0.0;
  for(const auto & t : rob.trace) a += std::abs(t.zmp);
  for(const auto & t : std_.trace) b += std::abs(t.zmp);
  CHECK(b / 20 < a / 20);
  CHECK(std_.robust_cost > rob.robust_cost);
}

TEST_CASE("fine-grid check confirms the solve")
{
  PlannerProblem pb(testing::default_model());
  for(auto mode : {PlannerMode::robust, PlannerMode::standard})
  {
    const auto & p = testing::planned(mode);
    const auto fine = check_manifold(p.manifold, pb);
    CHECK(fine.samples == 200);
    CHECK(fine.max_constraint_violation <= 2.0 * pb.solver.constraint_tolerance);
  }
}

TEST_CASE("perturbed weights are caught by the checker")
{
  PlannerProblem pb(testing::default_model());
  auto m = testing::planned(PlannerMode::robust).manifold;
  m.w[0 * 11 + 5] += 0.5; // ankle, middle control point
  const auto fine = check_manifold(m, pb);
  CHECK_FALSE(fine.converged);
  CHECK(fine.max_constraint_violation > 0.01);
}

TEST_CASE("constant feasible manifold has zero violations")
{
  PlannerProblem pb(testing::default_model());
  ManifoldSpec m;
  m.C = CoordinationMatrix::identity(5);
  m.w = constant_weights(pb.anchor_config, 11);
  m.f_max = 1.0;
  m.hand_displacement_cap = 0.10;
  m.model_fingerprint = pb.model.fingerprint();
  const auto fine = check_manifold(m, pb);
  CHECK(fine.max_constraint_violation <= 0.0);
}

TEST_CASE("checker refuses a foreign manifold unless overridden")
{
  PlannerProblem pb(testing::default_model());
  auto m = testing::planned(PlannerMode::robust).manifold;
  m.model_fingerprint = "fnv1a64:0000000000000000";
  CHECK_THROWS_AS(check_manifold(m, pb), FingerprintMismatch);
  CHECK_NOTHROW(check_manifold(m, pb, true));
}

TEST_CASE("solves are deterministic")
{
  PlannerProblem pb(testing::default_model());
  pb.solver.random_restarts = 1;
  pb.solver.seed = 5;
  pb.samples = 8;
  const auto a = solve_manifold(pb, PlannerMode::robust);
  const auto b = solve_manifold(pb, PlannerMode::robust);
  CHECK(a.first.w == b.first.w);
  CHECK(to_json(a.second).dump() == to_json(b.second).dump());
}

TEST_CASE("per-force baseline: zero force solutions and jumps on the default grid")
{
  PlannerProblem pb(testing::default_model());
  const auto zero = solve_per_force_baseline(pb, {0.0}, PlannerMode::standard);
  REQUIRE(zero.size() == 1);
  CHECK(zero[0].converged);
  CHECK(zero[0].cost < 1e-9);
  // Robust: one configuration for every force in [0, f_max] sits on the lower margin at zero force.
  const auto robust = solve_per_force_baseline(pb, {0.0});
  CHECK(robust[0].converged);
  CHECK(zmp_static_simplified(pb.model, robust[0].q, 0.0) == doctest::Approx(-0.05).epsilon(1e-2));

  const auto c = compare_smoothness(pb, testing::planned(PlannerMode::robust).manifold, PlannerMode::robust);
  CHECK(c.forces.size() == 20);
  CHECK(c.manifold_max_jump < c.baseline_max_jump);
  CHECK(c.baseline_max_jump > 0.1);
}

TEST_CASE("baseline is reproducible for identical seeds")
{
  PlannerProblem pb(testing::default_model());
  pb.solver.random_restarts = 2;
  pb.solver.seed = 9;
  const auto a = solve_per_force_baseline(pb, {50.0, 60.0});
  const auto b = solve_per_force_baseline(pb, {50.0, 60.0});
  CHECK(a[0].q == b[0].q);
  CHECK(a[1].q == b[1].q);
}

TEST_CASE("planner config parsing is strict")
{
  const auto pb = planner_problem_from_json(nlohmann::json::parse(R"({"degree": 6, "samples": 12, "solver": {"seed": 3}})"),
                                            testing::default_model());
  CHECK(pb.degree == 6);
  CHECK(pb.samples == 12);
  CHECK(pb.solver.seed == 3);
  CHECK_THROWS_AS(planner_problem_from_json(nlohmann::json::parse(R"({"degre": 6})"), testing::default_model()), ConfigError);
  CHECK_THROWS_AS(planner_problem_from_json(nlohmann::json::parse(R"({"solver": {"tol": 1}})"), testing::default_model()),
                  ConfigError);
}
