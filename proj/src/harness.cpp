#include "spatialref/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json_util.hpp"
#include "spatialref/errors.hpp"

namespace spatialref
{

ControllerSettings controller_settings_from_json(const nlohmann::json & j)
{
  detail::expect_keys(j, {}, {"rate_hz", "force_filter_cutoff_hz", "s_slew_limit"}, "controller config");
  ControllerSettings c;
  if(j.contains("rate_hz")) c.rate_hz = detail::get_number(j, "rate_hz", "controller config");
  if(j.contains("force_filter_cutoff_hz"))
    c.force_filter_cutoff_hz = detail::get_number(j, "force_filter_cutoff_hz", "controller config");
  if(j.contains("s_slew_limit")) c.s_slew_limit = detail::get_number(j, "s_slew_limit", "controller config");
  if(!(c.rate_hz > 0.0)) throw ConfigError("controller config: rate_hz must be positive");
  return c;
}

nlohmann::json to_json(const ControllerSettings & c)
{
  return {{"rate_hz", c.rate_hz}, {"force_filter_cutoff_hz", c.force_filter_cutoff_hz}, {"s_slew_limit", c.s_slew_limit}};
}

SimSettings sim_settings_from_json(const nlohmann::json & j)
{
  const char * ctx = "simulation config";
  detail::expect_keys(j, {},
                      {"dt", "gravity", "pd_enabled", "kp", "kd", "settle_time", "f_h2", "joint_limit_tolerance"}, ctx);
  SimSettings s;
  if(j.contains("dt")) s.dt = detail::get_number(j, "dt", ctx);
  if(j.contains("gravity")) s.gravity = detail::get_number(j, "gravity", ctx);
  if(j.contains("pd_enabled")) s.pd_enabled = j.at("pd_enabled").get<bool>();
  if(j.contains("kp")) s.gains.kp = detail::get_number(j, "kp", ctx);
  if(j.contains("kd")) s.gains.kd = detail::get_number(j, "kd", ctx);
  if(j.contains("settle_time")) s.settle_time = detail::get_number(j, "settle_time", ctx);
  if(j.contains("f_h2")) s.f_h2 = detail::get_number(j, "f_h2", ctx);
  if(j.contains("joint_limit_tolerance")) s.joint_limit_tolerance = detail::get_number(j, "joint_limit_tolerance", ctx);
  s.validate();
  return s;
}

nlohmann::json to_json(const SimSettings & s)
{
  return {{"dt", s.dt},
          {"gravity", s.gravity},
          {"pd_enabled", s.pd_enabled},
          {"kp", s.gains.kp},
          {"kd", s.gains.kd},
          {"settle_time", s.settle_time},
          {"f_h2", s.f_h2},
          {"joint_limit_tolerance", s.joint_limit_tolerance}};
}

void SweepConfig::validate() const
{
  if(M_values.empty() || h_values.empty() || modes.empty())
  {
    throw ConfigError("sweep: M_values, h_values and modes must be nonempty");
  }
  for(double M : M_values)
  {
    if(!(M >= 0.0 && std::isfinite(M))) throw ConfigError("sweep: M values must be finite and nonnegative");
  }
  for(double h : h_values)
  {
    if(!(h > 0.0 && std::isfinite(h))) throw ConfigError("sweep: h values must be positive");
  }
  if(repeats < 1) throw ConfigError("sweep: repeats must be at least 1");
  if(!(force_noise >= 0.0)) throw ConfigError("sweep: force_noise must be nonnegative");
  if(threads < 0) throw ConfigError("sweep: threads must be nonnegative");
  sim.validate();
}

SweepConfig sweep_config_from_json(const nlohmann::json & j)
{
  const char * ctx = "sweep config";
  detail::expect_keys(j, {},
                      {"M_values", "h_values", "modes", "repeats", "seed", "force_noise", "threads", "controller",
                       "simulation"},
                      ctx);
  SweepConfig c;
  try
  {
    if(j.contains("M_values")) c.M_values = j.at("M_values").get<std::vector<double>>();
    if(j.contains("h_values")) c.h_values = j.at("h_values").get<std::vector<double>>();
    if(j.contains("modes"))
    {
      c.modes.clear();
      for(const auto & m : j.at("modes")) c.modes.push_back(planner_mode_from_string(m.get<std::string>()));
    }
    if(j.contains("repeats")) c.repeats = j.at("repeats").get<int>();
    if(j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if(j.contains("force_noise")) c.force_noise = detail::get_number(j, "force_noise", ctx);
    if(j.contains("threads")) c.threads = j.at("threads").get<int>();
  }
  catch(const nlohmann::json::exception & e)
  {
    throw ConfigError(std::string(ctx) + ": " + e.what());
  }
  if(j.contains("controller")) c.controller = controller_settings_from_json(j.at("controller"));
  if(j.contains("simulation")) c.sim = sim_settings_from_json(j.at("simulation"));
  c.validate();
  return c;
}

int SweepResult::success_count(PlannerMode mode) const
{
  int n = 0;
  for(const auto & row : success_matrix(mode))
  {
    n += static_cast<int>(std::count(row.begin(), row.end(), true));
  }
  return n;
}

std::vector<std::vector<bool>> SweepResult::success_matrix(PlannerMode mode) const
{
  std::vector<std::vector<bool>> out(h_values.size(), std::vector<bool>(M_values.size(), true));
  bool seen = false;
  for(const auto & c : cells)
  {
    if(c.mode != mode) continue;
    seen = true;
    const auto hi = std::find(h_values.begin(), h_values.end(), c.h) - h_values.begin();
    const auto mi = std::find(M_values.begin(), M_values.end(), c.M) - M_values.begin();
    out[static_cast<std::size_t>(hi)][static_cast<std::size_t>(mi)] =
        out[static_cast<std::size_t>(hi)][static_cast<std::size_t>(mi)] && c.success;
  }
  if(!seen)
  {
    for(auto & row : out) std::fill(row.begin(), row.end(), false);
  }
  return out;
}

namespace
{

std::uint64_t mix(std::uint64_t x)
{
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SweepCell run_cell(const RobotModel & model, const ManifoldSpec & manifold, const SweepConfig & cfg, SweepCell cell,
                   std::uint64_t index)
{
  const auto profile = ForceProfile::sinusoid(cell.M, cell.h);
  EpisodeResult r;
  if(cfg.force_noise == 0.0)
  {
    r = run_episode(model, manifold, cfg.controller, profile, cfg.sim);
  }
  else
  {
    EpisodeSession session(model, manifold, cfg.controller, cfg.sim);
    const double period = session.tick_period();
    const auto ticks = static_cast<long>(std::ceil((profile.end_time() + cfg.sim.settle_time) / period - 1e-9));
    std::mt19937_64 rng(mix(cfg.seed ^ mix(index)));
    std::normal_distribution<double> noise(0.0, cfg.force_noise);
    std::vector<double> offsets(static_cast<std::size_t>(ticks) + 1);
    for(auto & o : offsets) o = noise(rng);
    const std::function<double(double)> force = [&](double t) {
      const auto k = std::min(static_cast<std::size_t>(std::max(0.0, std::floor(t / period + 1e-9))), offsets.size() - 1);
      return profile.eval(t) + offsets[k];
    };
    for(long i = 0; i < ticks && !session.failed(); ++i) session.tick(force);
    r.success = !session.failed();
    r.failure_reason = session.failure();
    r.failure_time = session.failure_time();
    r.max_abs_zmp = session.max_abs_zmp();
  }
  cell.success = r.success;
  cell.failure_reason = r.failure_reason;
  cell.failure_time = r.failure_time;
  cell.max_abs_zmp = r.max_abs_zmp;
  return cell;
}

std::string format_number(double v)
{
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

} // namespace

SweepResult run_sweep(const RobotModel & model,
                      const std::map<PlannerMode, ManifoldSpec> & manifolds,
                      const SweepConfig & config)
{
  config.validate();
  for(auto mode : config.modes)
  {
    if(!manifolds.count(mode)) throw ConfigError("sweep: no manifold for mode " + to_string(mode));
  }
  // Surface fingerprint and dimension errors before spawning workers.
  for(auto mode : config.modes) EpisodeSession(model, manifolds.at(mode), config.controller, config.sim);

  SweepResult result;
  result.M_values = config.M_values;
  result.h_values = config.h_values;
  result.repeats = config.repeats;
  for(auto mode : config.modes)
  {
    for(double h : config.h_values)
    {
      for(double M : config.M_values)
      {
        for(int r = 0; r < config.repeats; ++r) result.cells.push_back({mode, M, h, r});
      }
    }
  }

  unsigned workers = config.threads > 0 ? static_cast<unsigned>(config.threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(result.cells.size())));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(workers);
  auto work = [&](unsigned id) {
    try
    {
      for(std::size_t i = next++; i < result.cells.size(); i = next++)
      {
        const auto & cell = result.cells[i];
        result.cells[i] = run_cell(model, manifolds.at(cell.mode), config, cell, i);
      }
    }
    catch(...)
    {
      errors[id] = std::current_exception();
      next = result.cells.size();
    }
  };
  std::vector<std::thread> pool;
  for(unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
  for(auto & t : pool) t.join();
  for(auto & e : errors)
  {
    if(e) std::rethrow_exception(e);
  }
  return result;
}

std::string sweep_csv_header()
{
  return "mode,M,h,success,failure_reason,max_abs_zmp";
}

void write_sweep_csv(const SweepResult & result, std::ostream & out)
{
  const bool with_repeat = result.repeats > 1;
  out << sweep_csv_header() << (with_repeat ? ",repeat" : "") << '\n';
  for(const auto & c : result.cells)
  {
    out << to_string(c.mode) << ',' << format_number(c.M) << ',' << format_number(c.h) << ',' << (c.success ? 1 : 0)
        << ',' << (c.success ? "" : to_string(c.failure_reason)) << ',' << format_number(c.max_abs_zmp);
    if(with_repeat) out << ',' << c.repeat;
    out << '\n';
  }
}

std::string render_sweep_svg(const SweepResult & result)
{
  constexpr int cell = 40;
  constexpr int left = 60;
  constexpr int top = 40;
  constexpr int gap = 40;
  std::vector<PlannerMode> modes;
  for(const auto & c : result.cells)
  {
    if(std::find(modes.begin(), modes.end(), c.mode) == modes.end()) modes.push_back(c.mode);
  }
  const int cols = static_cast<int>(result.M_values.size());
  const int rows = static_cast<int>(result.h_values.size());
  const int panel_w = left + cols * cell;
  const int width = static_cast<int>(modes.size()) * panel_w + (static_cast<int>(modes.size()) - 1) * gap + 20;
  const int height = top + rows * cell + 40;

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  for(std::size_t p = 0; p < modes.size(); ++p)
  {
    const int x0 = static_cast<int>(p) * (panel_w + gap);
    const auto matrix = result.success_matrix(modes[p]);
    os << "<text x=\"" << x0 + left + cols * cell / 2 << "\" y=\"16\" text-anchor=\"middle\" font-weight=\"bold\">"
       << to_string(modes[p]) << " (" << result.success_count(modes[p]) << "/" << rows * cols << ")</text>\n";
    os << "<text x=\"" << x0 + 8 << "\" y=\"" << top - 6 << "\">h [s]</text>\n";
    for(int r = 0; r < rows; ++r)
    {
      const int y = top + r * cell;
      os << "<text x=\"" << x0 + left - 8 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
         << format_number(result.h_values[static_cast<std::size_t>(r)]) << "</text>\n";
      for(int c = 0; c < cols; ++c)
      {
        const bool ok = matrix[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        os << "<rect x=\"" << x0 + left + c * cell << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
           << "\" fill=\"" << (ok ? "#2ca02c" : "#7f7f7f") << "\" stroke=\"#ffffff\" stroke-width=\"2\"/>\n";
      }
    }
    for(int c = 0; c < cols; ++c)
    {
      os << "<text x=\"" << x0 + left + c * cell + cell / 2 << "\" y=\"" << top + rows * cell + 16
         << "\" text-anchor=\"middle\">" << format_number(result.M_values[static_cast<std::size_t>(c)]) << "</text>\n";
    }
    os << "<text x=\"" << x0 + left + cols * cell / 2 << "\" y=\"" << top + rows * cell + 34
       << "\" text-anchor=\"middle\">M [N]</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

double max_adjacent_jump(const std::vector<JointVector> & configs)
{
  double jump = 0.0;
  for(std::size_t i = 1; i < configs.size(); ++i)
  {
    if(configs[i].size() != configs[i - 1].size()) throw DimensionError("max_adjacent_jump: configuration sizes differ");
    if(configs[i].size() > 0) jump = std::max(jump, (configs[i] - configs[i - 1]).cwiseAbs().maxCoeff());
  }
  return jump;
}

SmoothnessComparison compare_smoothness(const PlannerProblem & problem, const ManifoldSpec & manifold, PlannerMode mode)
{
  SmoothnessComparison out;
  for(double s : problem.s_grid())
  {
    out.forces.push_back(s * problem.f_max);
    out.manifold.push_back(eval_config(manifold, s));
  }
  for(const auto & b : solve_per_force_baseline(problem, out.forces, mode))
  {
    out.baseline.push_back(b.q);
    out.baseline_converged += b.converged ? 1 : 0;
  }
  out.manifold_max_jump = max_adjacent_jump(out.manifold);
  out.baseline_max_jump = max_adjacent_jump(out.baseline);
  return out;
}

SmoothnessComparison compare_smoothness(const PlannerProblem & problem, PlannerMode mode)
{
  auto [manifold, report] = solve_manifold(problem, mode);
  auto out = compare_smoothness(problem, manifold, mode);
  out.manifold_converged = report.converged;
  return out;
}

void write_smoothness_csv(const SmoothnessComparison & c, std::ostream & out)
{
  const auto dof = c.manifold.empty() ? 0 : static_cast<std::size_t>(c.manifold.front().size());
  out << "method,index,force";
  for(std::size_t i = 0; i < dof; ++i) out << ",q" << i;
  out << '\n';
  auto rows = [&](const char * name, const std::vector<JointVector> & qs) {
    for(std::size_t k = 0; k < qs.size(); ++k)
    {
      out << name << ',' << k << ',' << format_number(c.forces[k]);
      for(Eigen::Index i = 0; i < qs[k].size(); ++i) out << ',' << format_number(qs[k][i]);
      out << '\n';
    }
  };
  rows("manifold", c.manifold);
  rows("baseline", c.baseline);
}

nlohmann::json eval_zmp(const RobotModel & model, const nlohmann::json & input)
{
  const char * ctx = "eval-zmp input";
  detail::expect_keys(input, {"q", "f_h1"}, {"f_h2", "delta_margin"}, ctx);
  const JointVector q = detail::vector_from_json(input.at("q"), "eval-zmp q");
  model.check_dimension(q);
  HandWrench wrench{detail::get_number(input, "f_h1", ctx), input.contains("f_h2") ? detail::get_number(input, "f_h2", ctx) : 0.0};
  Interval margin{-0.05, 0.05};
  if(input.contains("delta_margin"))
  {
    const auto v = detail::vector_from_json(input.at("delta_margin"), "eval-zmp delta_margin");
    if(v.size() != 2) throw ConfigError("eval-zmp input: delta_margin must be [dminus, dplus]");
    margin = {v[0], v[1]};
  }
  auto flags = [&](double x) {
    const auto r = support_check(x, margin, model.foot_extent());
    return nlohmann::json{{"x_zmp", x}, {"inside_margin", r.inside_margin}, {"inside_support", r.inside_support}};
  };
  nlohmann::json out;
  out["x_com"] = com_position(model, q).x();
  out["hand"] = {hand_position(model, q).x(), hand_position(model, q).y()};
  out["simplified"] = flags(zmp_static_simplified(model, q, wrench.f_h1));
  try
  {
    out["full"] = flags(zmp_static_full(model, q, wrench));
  }
  catch(const UnsupportedLift & e)
  {
    out["full"] = {{"error", e.what()}};
  }
  return out;
}

} // namespace spatialref
