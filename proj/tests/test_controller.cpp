#include <doctest.h>

#include <cmath>
#include <thread>

#include "spatialref/controller.hpp"
#include "spatialref/errors.hpp"
#include "support.hpp"

using namespace spatialref;

namespace
{

ManifoldSpec ramp_manifold()
{
  // q0 runs linearly from 0 to 1 rad, q1 stays at 0.5 rad.
  ManifoldSpec m;
  m.basis = BernsteinBasis(1);
  m.C = CoordinationMatrix::identity(2);
  m.w.resize(4);
  m.w << 0.0, 1.0, 0.5, 0.5;
  m.f_max = 200.0;
  m.model_fingerprint = "fnv1a64:test";
  return m;
}

} // namespace

TEST_CASE("force maps linearly to s with saturation")
{
  CHECK(*force_to_s(0.0, 200.0) == 0.0);
  CHECK(*force_to_s(100.0, 200.0) == 0.5);
  CHECK(*force_to_s(200.0, 200.0) == 1.0);
  CHECK(*force_to_s(250.0, 200.0) == 1.0);
  CHECK(*force_to_s(-30.0, 200.0) == 0.0);
  CHECK_FALSE(force_to_s(std::nan(""), 200.0).has_value());
  CHECK_FALSE(force_to_s(INFINITY, 200.0).has_value());
  CHECK_THROWS_AS(force_to_s(1.0, 0.0), ConfigError);
}

TEST_CASE("constant force converges to the mapped point")
{
  ManifoldController c(ramp_manifold());
  for(int i = 0; i < 200; ++i) c.step(120.0, 0.05);
  CHECK(c.s() == doctest::Approx(0.6).epsilon(1e-9));
  CHECK((c.target() - eval_config(ramp_manifold(), 0.6)).norm() < 1e-9);
}

TEST_CASE("zero force keeps the anchor")
{
  ManifoldController c(ramp_manifold());
  for(int i = 0; i < 50; ++i) CHECK(c.step(0.0, 0.05) == eval_config(ramp_manifold(), 0.0));
}

TEST_CASE("step with slew 0.5/s takes at least 2 s, monotonically")
{
  ControllerSettings settings;
  settings.s_slew_limit = 0.5;
  ManifoldController c(ramp_manifold(), settings);
  double t = 0.0, previous = 0.0, reached = -1.0;
  for(int i = 0; i < 200; ++i)
  {
    c.step(200.0, 0.05);
    t += 0.05;
    CHECK(c.s() >= previous);
    CHECK(c.s() - previous <= 0.5 * 0.05 + 1e-12);
    previous = c.s();
    if(reached < 0.0 && c.s() >= 1.0 - 1e-12) reached = t;
  }
  CHECK(reached >= 2.0 - 1e-9);
  // Without the filter the bound is attained exactly.
  settings.force_filter_cutoff_hz = 0.0;
  ManifoldController raw(ramp_manifold(), settings);
  int ticks = 0;
  while(raw.s() < 1.0 - 1e-12)
  {
    raw.step(200.0, 0.05);
    ++ticks;
  }
  CHECK(ticks == 40);
}

TEST_CASE("targets stay on the manifold and respect the Lipschitz bound")
{
  const auto m = ramp_manifold();
  ManifoldController c(m);
  JointVector last = c.target();
  for(int i = 0; i < 100; ++i)
  {
    const double f = 200.0 * std::abs(std::sin(0.3 * i));
    const auto target = c.step(f, 0.05);
    CHECK((target - eval_config(m, c.s())).norm() == 0.0);
    // max |dq/ds| = 1 on this manifold.
    CHECK((target - last).cwiseAbs().maxCoeff() <= 1.0 * 0.05 * 1.0 + 1e-12);
    last = target;
  }
}

TEST_CASE("monotone force gives monotone s")
{
  ManifoldController c(ramp_manifold());
  double previous = 0.0;
  for(int i = 0; i < 100; ++i)
  {
    c.step(2.0 * i, 0.05);
    CHECK(c.s() >= previous);
    previous = c.s();
  }
}

TEST_CASE("non-finite measurements hold the last value and flag")
{
  ManifoldController c(ramp_manifold());
  for(int i = 0; i < 40; ++i) c.step(100.0, 0.05);
  const double f = c.filtered_force();
  const double s = c.s();
  c.step(std::nan(""), 0.05);
  CHECK(c.measurement_rejected());
  CHECK(c.filtered_force() == f);
  CHECK(c.s() == doctest::Approx(s).epsilon(1e-9));
  c.step(100.0, 0.05);
  CHECK_FALSE(c.measurement_rejected());
}

TEST_CASE("snapshots are consistent while another thread steps")
{
  ManifoldController c(ramp_manifold());
  std::thread writer([&] {
    for(int i = 0; i < 2000; ++i) c.step(200.0 * (i % 100) / 100.0, 0.05);
  });
  const auto m = ramp_manifold();
  for(int i = 0; i < 2000; ++i)
  {
    const auto snap = c.snapshot();
    CHECK((snap.target - eval_config(m, snap.s)).norm() == 0.0);
  }
  writer.join();
}

TEST_CASE("controller rejects a manifold without force range")
{
  auto m = ramp_manifold();
  m.f_max = 0.0;
  CHECK_THROWS_AS((void)ManifoldController(m), ConfigError);
  CHECK_THROWS_AS(ManifoldController(ramp_manifold()).step(1.0, 0.0), ConfigError);
}
