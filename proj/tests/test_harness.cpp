#include <doctest.h>

#include <sstream>

#include "spatialref/errors.hpp"
#include "spatialref/harness.hpp"
#include "support.hpp"

using namespace spatialref;

namespace
{

std::map<PlannerMode, ManifoldSpec> both()
{
  return {{PlannerMode::robust, testing::planned(PlannerMode::robust).manifold},
          {PlannerMode::standard, testing::planned(PlannerMode::standard).manifold}};
}

SweepConfig small_sweep()
{
  SweepConfig c;
  c.M_values = {50.0, 150.0};
  c.h_values = {1.0, 3.0};
  c.threads = 3;
  return c;
}

} // namespace

TEST_CASE("sweep covers every cell in a fixed order")
{
  const auto r = run_sweep(testing::default_model(), both(), small_sweep());
  REQUIRE(r.cells.size() == 2 * 2 * 2);
  CHECK(r.cells[0].mode == PlannerMode::robust);
  CHECK(r.cells[0].h == 1.0);
  CHECK(r.cells[0].M == 50.0);
  CHECK(r.cells[1].M == 150.0);
  CHECK(r.cells[2].h == 3.0);
  CHECK(r.cells[4].mode == PlannerMode::standard);
  for(const auto & c : r.cells) CHECK(c.success == (c.failure_reason == FailureReason::none));
  const auto matrix = r.success_matrix(PlannerMode::robust);
  REQUIRE(matrix.size() == 2);
  CHECK(matrix[0].size() == 2);
}

TEST_CASE("sweep output does not depend on the thread count")
{
  auto config = small_sweep();
  std::ostringstream a, b;
  write_sweep_csv(run_sweep(testing::default_model(), both(), config), a);
  config.threads = 1;
  write_sweep_csv(run_sweep(testing::default_model(), both(), config), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, a.str().find('\n')) == "mode,M,h,success,failure_reason,max_abs_zmp");
}

TEST_CASE("single cell sweep")
{
  SweepConfig c;
  c.M_values = {100.0};
  c.h_values = {2.0};
  c.modes = {PlannerMode::robust};
  const auto r = run_sweep(testing::default_model(), both(), c);
  REQUIRE(r.cells.size() == 1);
  std::ostringstream os;
  write_sweep_csv(r, os);
  std::istringstream in(os.str());
  std::string line;
  int lines = 0;
  while(std::getline(in, line)) ++lines;
  CHECK(lines == 2);
}

TEST_CASE("noisy repeats are seeded")
{
  auto c = small_sweep();
  c.repeats = 2;
  c.force_noise = 5.0;
  c.seed = 11;
  std::ostringstream a, b;
  write_sweep_csv(run_sweep(testing::default_model(), both(), c), a);
  write_sweep_csv(run_sweep(testing::default_model(), both(), c), b);
  CHECK(a.str() == b.str());
  CHECK(a.str().substr(0, a.str().find('\n')) == "mode,M,h,success,failure_reason,max_abs_zmp,repeat");
}

TEST_CASE("sweep SVG marks cells and labels axes")
{
  const auto r = run_sweep(testing::default_model(), both(), small_sweep());
  const auto svg = render_sweep_svg(r);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("robust (") != std::string::npos);
  CHECK(svg.find("standard (") != std::string::npos);
  CHECK(svg.find(">150<") != std::string::npos);
  CHECK(svg.find(">3<") != std::string::npos);
  std::size_t green = 0, grey = 0;
  for(auto p = svg.find("#2ca02c"); p != std::string::npos; p = svg.find("#2ca02c", p + 1)) ++green;
  for(auto p = svg.find("#7f7f7f"); p != std::string::npos; p = svg.find("#7f7f7f", p + 1)) ++grey;
  CHECK(green == static_cast<std::size_t>(r.success_count(PlannerMode::robust) + r.success_count(PlannerMode::standard)));
  CHECK(green + grey == 8);
}

TEST_CASE("sweep config validation")
{
  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"M":[1]})")), ConfigError);
  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json::parse(R"({"modes":["fast"]})")), ConfigError);
  const auto c = sweep_config_from_json(nlohmann::json::parse(
      R"({"M_values":[10],"h_values":[0.5],"modes":["standard"],"controller":{"s_slew_limit":2}})"));
  CHECK(c.M_values == std::vector<double>{10.0});
  CHECK(c.modes == std::vector<PlannerMode>{PlannerMode::standard});
  CHECK(c.controller.s_slew_limit == 2.0);
  SweepConfig bad;
  bad.h_values = {0.0};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(run_sweep(testing::default_model(), {}, small_sweep()), ConfigError);
}

TEST_CASE("settings round trip through JSON")
{
  ControllerSettings c;
  c.rate_hz = 40.0;
  c.force_filter_cutoff_hz = 2.0;
  const auto c2 = controller_settings_from_json(to_json(c));
  CHECK(c2.rate_hz == 40.0);
  CHECK(c2.force_filter_cutoff_hz == 2.0);
  SimSettings s;
}

TEST_CASE("simulation settings round trip")
{
  SimSettings s;
  s.settle_time = 2.5;
  s.gains.kp = 500.0;
  s.f_h2 = 10.0;
  const auto s2 = sim_settings_from_json(to_json(s));
  CHECK(s2.settle_time == 2.5);
  CHECK(s2.gains.kp == 500.0);
  CHECK(s2.f_h2 == 10.0);
  CHECK_THROWS_AS(sim_settings_from_json(nlohmann::json::parse(R"({"dt":0.001,"mu":1})")), ConfigError);
}

TEST_CASE("adjacent jump")
{
  CHECK(max_adjacent_jump({}) == 0.0);
  CHECK(max_adjacent_jump({JointVector::Ones(3)}) == 0.0);
  JointVector a = JointVector::Zero(3), b = JointVector::Zero(3);
  b << 0.1, -0.4, 0.2;
  CHECK(max_adjacent_jump({a, b, a}) == doctest::Approx(0.4));
}

TEST_CASE("smoothness at zero force range is flat")
{
  PlannerProblem p(testing::default_model());
  p.f_max = 0.0;
  const auto c = compare_smoothness(p, PlannerMode::robust);
  CHECK(c.manifold_max_jump < 1e-9);
  CHECK(c.baseline_max_jump < 1e-9);
  CHECK(c.forces.size() == static_cast<std::size_t>(p.samples));
}

TEST_CASE("smoothness CSV layout")
{
  PlannerProblem p(testing::default_model());
  const auto c = compare_smoothness(p, testing::planned(PlannerMode::robust).manifold, PlannerMode::robust);
  CHECK(c.baseline_converged == p.samples);
  CHECK(c.manifold_max_jump < c.baseline_max_jump);
  std::ostringstream os;
  write_smoothness_csv(c, os);
  CHECK(os.str().substr(0, os.str().find('\n')) == "method,index,force,q0,q1,q2,q3,q4");
  CHECK(os.str().find("\nmanifold,0,0") != std::string::npos);
  CHECK(os.str().find("\nbaseline,19,200") != std::string::npos);
}

TEST_CASE("eval-zmp report")
{
  const auto & m = testing::default_model();
  nlohmann::json in;
  in["q"] = std::vector<double>(5, 0.0);
  in["f_h1"] = 20.0;
  const auto out = eval_zmp(m, in);
  const JointVector q = JointVector::Zero(5);
  CHECK(out["simplified"]["x_zmp"].get<double>() == zmp_static_simplified(m, q, 20.0));
  CHECK(out["full"]["x_zmp"].get<double>() == zmp_static_full(m, q, {20.0, 0.0}));
  CHECK(out["x_com"].get<double>() == com_position(m, q).x());
  in["f_h2"] = m.total_mass() * 9.81;
  CHECK(eval_zmp(m, in)["full"].contains("error"));
  in["q"] = std::vector<double>(4, 0.0);
  CHECK_THROWS_AS(eval_zmp(m, in), DimensionError);
  CHECK_THROWS_AS(eval_zmp(m, nlohmann::json::parse(R"({"q":[0,0,0,0,0]})")), ConfigError);
}
