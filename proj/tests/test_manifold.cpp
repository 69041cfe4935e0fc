#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "spatialref/errors.hpp"
#include "spatialref/manifold.hpp"
#include "support.hpp"

using namespace spatialref;

namespace
{

double binomial(int n, int k)
{
  double f = 1.0;
  for(int i = 1; i <= k; ++i) f = f * (n - k + i) / i;
  return f;
}

ManifoldSpec random_manifold(std::mt19937_64 & rng, int degree, const CoordinationMatrix & C)
{
  ManifoldSpec m;
  m.basis = BernsteinBasis(degree);
  m.C = C;
  m.w = testing::random_vector(rng, static_cast<Eigen::Index>(C.reduced_dim() * m.basis.size()), -1.0, 1.0);
  m.model_fingerprint = "fnv1a64:test";
  return m;
}

// Naive Kronecker product.
Eigen::MatrixXd kron(const Eigen::MatrixXd & A, const Eigen::MatrixXd & B)
{
  Eigen::MatrixXd K(A.rows() * B.rows(), A.cols() * B.cols());
  for(Eigen::Index i = 0; i < A.rows(); ++i)
  {
    for(Eigen::Index j = 0; j < A.cols(); ++j) K.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
  }
  return K;
}

} // namespace

TEST_CASE("basis endpoints interpolate")
{
  const BernsteinBasis b(10);
  const auto v0 = b.values(0.0);
  const auto v1 = b.values(1.0);
  CHECK(v0[0] == 1.0);
  CHECK(v0.tail(10).cwiseAbs().maxCoeff() == 0.0);
  CHECK(v1[10] == 1.0);
  CHECK(v1.head(10).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("basis matches the binomial formula at s = 0.37")
{
  const BernsteinBasis b(10);
  const double s = 0.37;
  const auto v = b.values(s);
  CHECK(std::abs(v.sum() - 1.0) < 1e-12);
  for(int i = 0; i <= 10; ++i)
  {
    const double ref = binomial(10, i) * std::pow(s, i) * std::pow(1.0 - s, 10 - i);
    CHECK(v[i] == doctest::Approx(ref).epsilon(1e-13));
  }
  CHECK((basis_row(b, s) - v).norm() == 0.0);
}

TEST_CASE("partition of unity and nonnegativity on random s")
{
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for(int degree : {1, 3, 10, 20})
  {
    const BernsteinBasis b(degree);
    double worst = 0.0;
    bool nonnegative = true;
    for(int k = 0; k < 1000; ++k)
    {
      const auto v = b.values(u(rng));
      worst = std::max(worst, std::abs(v.sum() - 1.0));
      nonnegative = nonnegative && (v.array() >= 0.0).all();
    }
    CHECK(worst < 1e-12);
    CHECK(nonnegative);
  }
}

TEST_CASE("s outside [0, 1] is clamped")
{
  const BernsteinBasis b(4);
  CHECK(b.values(-0.5) == b.values(0.0));
  CHECK(b.values(3.0) == b.values(1.0));
  CHECK(clamp_unit(std::nan("")) == 0.0);
  CHECK_THROWS_AS(BernsteinBasis(0), ConfigError);
}

TEST_CASE("quadratic curve equals the hand-expanded Bezier form")
{
  std::mt19937_64 rng(4);
  const auto m = random_manifold(rng, 2, CoordinationMatrix::identity(3));
  const auto P = m.control_points();
  const JointVector ref = 0.25 * P.col(0) + 0.5 * P.col(1) + 0.25 * P.col(2);
  CHECK((eval_config(m, 0.5) - ref).norm() < 1e-15);
}

TEST_CASE("weight layout is reduced-joint-major")
{
  ManifoldSpec m;
  m.basis = BernsteinBasis(2);
  m.C = CoordinationMatrix::identity(2);
  m.w.resize(6);
  m.w << 1, 2, 3, 10, 20, 30;
  CHECK(eval_config(m, 0.0) == JointVector((JointVector(2) << 1, 10).finished()));
  CHECK(eval_config(m, 1.0) == JointVector((JointVector(2) << 3, 30).finished()));
}

TEST_CASE("constant weights give a constant curve with zero derivative")
{
  JointVector a(3);
  a << 0.2, -0.4, 1.1;
  ManifoldSpec m;
  m.basis = BernsteinBasis(10);
  m.C = CoordinationMatrix::symmetric_pairs(3);
  m.w = constant_weights(a, 11);
  for(double s : {0.0, 0.13, 0.5, 0.99, 1.0})
  {
    CHECK((eval_config(m, s) - m.C.expand(a)).norm() < 1e-14);
    CHECK(eval_config_derivative(m, s).norm() < 1e-12);
  }
}

TEST_CASE("endpoints equal the first and last expanded control points")
{
  std::mt19937_64 rng(8);
  const auto m = random_manifold(rng, 10, CoordinationMatrix::symmetric_pairs(2));
  const auto P = m.control_points();
  CHECK((eval_config(m, 0.0) - m.C.expand(P.col(0))).norm() < 1e-14);
  CHECK((eval_config(m, 1.0) - m.C.expand(P.col(10))).norm() < 1e-14);
}

TEST_CASE("linear curve has constant derivative")
{
  ManifoldSpec m;
  m.basis = BernsteinBasis(1);
  m.C = CoordinationMatrix::identity(2);
  m.w.resize(4);
  m.w << 0.1, 0.7, -0.3, 0.5;
  for(double s : {0.0, 0.3, 1.0})
  {
    CHECK(eval_config_derivative(m, s).isApprox(JointVector((JointVector(2) << 0.6, 0.8).finished())));
  }
}

TEST_CASE("analytic derivative matches central differences")
{
  std::mt19937_64 rng(12);
  const auto m = random_manifold(rng, 10, CoordinationMatrix::identity(5));
  const double h = 1e-6;
  for(double s : {0.3, 0.05, 0.5, 0.91})
  {
    const JointVector fd = (eval_config(m, s + h) - eval_config(m, s - h)) / (2 * h);
    const JointVector an = eval_config_derivative(m, s);
    CHECK((fd - an).cwiseAbs().maxCoeff() / an.cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("both Kronecker orderings agree with eval_config")
{
  std::mt19937_64 rng(13);
  Eigen::MatrixXd E(4, 2);
  for(Eigen::Index r = 0; r < 4; ++r) E.row(r) = testing::random_vector(rng, 2, -1.0, 1.0).transpose();
  const auto m = random_manifold(rng, 6, CoordinationMatrix(E));
  const Eigen::Index n = 7, r = 2;
  // Same weights in control-point-major order.
  Eigen::VectorXd w_cp(n * r);
  for(Eigen::Index k = 0; k < r; ++k)
  {
    for(Eigen::Index i = 0; i < n; ++i) w_cp[i * r + k] = m.w[k * n + i];
  }
  for(double s : {0.0, 0.21, 0.64, 1.0})
  {
    const Eigen::MatrixXd phi = m.basis.values(s).transpose();
    const JointVector a = kron(E, phi) * m.w;
    const JointVector b = kron(phi, E) * w_cp;
    const JointVector q = eval_config(m, s);
    CHECK((a - q).norm() < 1e-13);
    CHECK((b - q).norm() < 1e-13);
    CHECK((config_weight_jacobian(m, s) - kron(E, phi)).norm() < 1e-14);
  }
}

TEST_CASE("eval_config is linear in w")
{
  std::mt19937_64 rng(14);
  auto a = random_manifold(rng, 5, CoordinationMatrix::identity(3));
  auto b = random_manifold(rng, 5, CoordinationMatrix::identity(3));
  auto c = a;
  c.w = 2.0 * a.w - 0.5 * b.w;
  CHECK((eval_config(c, 0.4) - (2.0 * eval_config(a, 0.4) - 0.5 * eval_config(b, 0.4))).norm() < 1e-13);
}

TEST_CASE("manifold validation")
{
  std::mt19937_64 rng(15);
  auto m = random_manifold(rng, 3, CoordinationMatrix::identity(2));
  CHECK_NOTHROW(m.validate());
  auto short_w = m;
  short_w.w.conservativeResize(7);
  CHECK_THROWS_AS(short_w.validate(), DimensionError);
  auto bad_margin = m;
  bad_margin.delta_margin = {0.05, -0.05};
  CHECK_THROWS_AS(bad_margin.validate(), ConfigError);
  CHECK_THROWS_AS(eval_config(short_w, 0.5), DimensionError);
}

TEST_CASE("manifold JSON round-trips exactly and rejects unknown fields")
{
  std::mt19937_64 rng(16);
  auto m = random_manifold(rng, 10, CoordinationMatrix::symmetric_pairs(2));
  m.solver_report = {12, 0.5, 1e-7};
  const auto path = (std::filesystem::temp_directory_path() / "spatialref_manifold_test.json").string();
  save_manifold(m, path);
  const auto back = load_manifold(path);
  std::remove(path.c_str());
  CHECK(back.w == m.w);
  CHECK(back.C.entries() == m.C.entries());
  CHECK(back.basis.degree() == 10);
  CHECK(back.model_fingerprint == m.model_fingerprint);
  CHECK(back.solver_report.iterations == 12);
  CHECK(to_json(back) == to_json(m));
  auto j = to_json(m);
  j["extra"] = 1;
  CHECK_THROWS_AS(manifold_from_json(j), ConfigError);
  auto missing = to_json(m);
  missing.erase("model_fingerprint");
  CHECK_THROWS_AS(manifold_from_json(missing), ConfigError);
}
