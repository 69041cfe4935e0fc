#include "spatialref/manifold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json_util.hpp"
#include "spatialref/errors.hpp"

namespace spatialref
{

double clamp_unit(double s)
{
  if(std::isnan(s)) return 0.0;
  return std::clamp(s, 0.0, 1.0);
}

BernsteinBasis::BernsteinBasis(int degree) : degree_(degree)
{
  if(degree_ < 1) throw ConfigError("Bernstein degree must be at least 1");
}

namespace
{

// Triangle recursion B_{i,k} = (1 - s) B_{i,k-1} + s B_{i-1,k-1}; returns degree-k values.
Eigen::VectorXd bernstein_values(int k, double s)
{
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k + 1);
  b[0] = 1.0;
  const double t = 1.0 - s;
  for(int j = 1; j <= k; ++j)
  {
    for(int i = j; i > 0; --i) b[i] = t * b[i] + s * b[i - 1];
    b[0] *= t;
  }
  return b;
}

} // namespace

Eigen::VectorXd BernsteinBasis::values(double s) const
{
  return bernstein_values(degree_, clamp_unit(s));
}

Eigen::VectorXd BernsteinBasis::derivatives(double s) const
{
  // B'_{i,N} = N (B_{i-1,N-1} - B_{i,N-1})
  const auto lower = bernstein_values(degree_ - 1, clamp_unit(s));
  Eigen::VectorXd d = Eigen::VectorXd::Zero(degree_ + 1);
  for(int i = 0; i <= degree_; ++i)
  {
    const double left = i > 0 ? lower[i - 1] : 0.0;
    const double right = i < degree_ ? lower[i] : 0.0;
    d[i] = degree_ * (left - right);
  }
  return d;
}

Eigen::VectorXd basis_row(const BernsteinBasis & basis, double s)
{
  return basis.values(s);
}

void ManifoldSpec::validate() const
{
  const auto expected = reduced_dim() * basis.size();
  if(static_cast<std::size_t>(w.size()) != expected)
  {
    throw DimensionError("manifold: weight vector has " + std::to_string(w.size()) + " entries, expected r*n = "
                         + std::to_string(expected));
  }
  if(!(delta_margin.lower < delta_margin.upper)) throw ConfigError("manifold: delta_margin must satisfy dminus < dplus");
  if(!(f_max >= 0.0)) throw ConfigError("manifold: f_max must be nonnegative");
  if(!(hand_displacement_cap >= 0.0)) throw ConfigError("manifold: hand_displacement_cap must be nonnegative");
}

Eigen::MatrixXd ManifoldSpec::control_points() const
{
  validate();
  const auto r = static_cast<Eigen::Index>(reduced_dim());
  const auto n = static_cast<Eigen::Index>(basis.size());
  // Row-major reshape: row k holds joint k's control points.
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), r, n);
}

Eigen::VectorXd constant_weights(const JointVector & q_reduced, std::size_t n_basis)
{
  const auto n = static_cast<Eigen::Index>(n_basis);
  Eigen::VectorXd w(q_reduced.size() * n);
  for(Eigen::Index k = 0; k < q_reduced.size(); ++k) w.segment(k * n, n).setConstant(q_reduced[k]);
  return w;
}

JointVector eval_config(const ManifoldSpec & m, double s)
{
  return m.C.expand(m.control_points() * m.basis.values(s));
}

JointVector eval_config_derivative(const ManifoldSpec & m, double s)
{
  return m.C.expand(m.control_points() * m.basis.derivatives(s));
}

Eigen::MatrixXd config_weight_jacobian(const ManifoldSpec & m, double s)
{
  m.validate();
  const auto phi = m.basis.values(s);
  const auto n = phi.size();
  const auto & C = m.C.entries();
  Eigen::MatrixXd J(C.rows(), C.cols() * n);
  for(Eigen::Index k = 0; k < C.cols(); ++k)
  {
    J.block(0, k * n, C.rows(), n) = C.col(k) * phi.transpose();
  }
  return J;
}

ManifoldSpec manifold_from_json(const nlohmann::json & j)
{
  using detail::expect_keys;
  using detail::get_number;
  try
  {
    expect_keys(j,
                {"degree", "C", "w", "f_max", "delta_margin", "hand_displacement_cap", "model_fingerprint"},
                {"created_by", "solver_report"}, "manifold");
    ManifoldSpec m;
    if(!j.at("degree").is_number_integer()) throw ConfigError("manifold: degree must be an integer");
    m.basis = BernsteinBasis(j.at("degree").get<int>());
    m.C = coordination_from_json(j.at("C"));
    m.w = detail::vector_from_json(j.at("w"), "manifold w");
    m.f_max = get_number(j, "f_max", "manifold");
    const auto margin = detail::vector_from_json(j.at("delta_margin"), "delta_margin");
    if(margin.size() != 2) throw ConfigError("manifold: delta_margin must be [dminus, dplus]");
    m.delta_margin = {margin[0], margin[1]};
    m.hand_displacement_cap = get_number(j, "hand_displacement_cap", "manifold");
    m.model_fingerprint = j.at("model_fingerprint").get<std::string>();
    if(j.contains("created_by")) m.created_by = j.at("created_by").get<std::string>();
    if(j.contains("solver_report"))
    {
      const auto & r = j.at("solver_report");
      expect_keys(r, {"iterations", "final_cost", "max_violation"}, {}, "manifold solver_report");
      m.solver_report.iterations = r.at("iterations").get<int>();
      m.solver_report.final_cost = get_number(r, "final_cost", "solver_report");
      m.solver_report.max_violation = get_number(r, "max_violation", "solver_report");
    }
    m.validate();
    return m;
  }
  catch(const nlohmann::json::exception & e)
  {
    throw ConfigError(std::string("manifold: ") + e.what());
  }
}

nlohmann::json to_json(const ManifoldSpec & m)
{
  nlohmann::json j;
  j["degree"] = m.basis.degree();
  j["C"] = to_json(m.C);
  j["w"] = detail::vector_to_json(m.w);
  j["f_max"] = m.f_max;
  j["delta_margin"] = {m.delta_margin.lower, m.delta_margin.upper};
  j["hand_displacement_cap"] = m.hand_displacement_cap;
  j["model_fingerprint"] = m.model_fingerprint;
  j["created_by"] = m.created_by;
  j["solver_report"] = {{"iterations", m.solver_report.iterations},
                        {"final_cost", m.solver_report.final_cost},
                        {"max_violation", m.solver_report.max_violation}};
  return j;
}

ManifoldSpec load_manifold(const std::string & path)
{
  return manifold_from_json(detail::read_json_file(path));
}

void save_manifold(const ManifoldSpec & m, const std::string & path)
{
  std::ofstream out(path);
  if(!out) throw ConfigError("cannot write '" + path + "'");
  out << to_json(m).dump(2) << '\n';
}

} // namespace spatialref
