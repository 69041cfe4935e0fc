// spatialref command-line entry point.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "spatialref/errors.hpp"
#include "spatialref/harness.hpp"
#include "spatialref/serve.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace spatialref;

namespace
{

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitRejected = 2;

json read_json(const std::string & path)
{
  std::ifstream in(path);
  if(!in) throw ConfigError("cannot open '" + path + "'");
  try
  {
    return json::parse(in);
  }
  catch(const json::parse_error & e)
  {
    throw ConfigError("'" + path + "': " + e.what());
  }
}

/// Top-level config: {"planner":{...}, "controller":{...}, "simulation":{...}, "sweep":{...}}, all optional.
struct Config
{
  json planner = json::object();
  ControllerSettings controller;
  SimSettings sim;
  json sweep = json::object();
};

Config load_config(const std::string & path)
{
  Config c;
  if(path.empty()) return c;
  const auto j = read_json(path);
  if(!j.is_object()) throw ConfigError("config: expected an object");
  for(auto it = j.begin(); it != j.end(); ++it)
  {
    if(it.key() == "planner") c.planner = it.value();
    else if(it.key() == "controller") c.controller = controller_settings_from_json(it.value());
    else if(it.key() == "simulation") c.sim = sim_settings_from_json(it.value());
    else if(it.key() == "sweep") c.sweep = it.value();
    else throw ConfigError("config: unknown section '" + it.key() + "'");
  }
  return c;
}

void write_text(const fs::path & path, const std::string & text)
{
  if(path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if(!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if(!out) throw ConfigError("failed writing '" + path.string() + "'");
}

std::string report_path_for(const std::string & out)
{
  fs::path p(out);
  return (p.parent_path() / (p.stem().string() + ".report.json")).string();
}

struct PlanArgs
{
  std::string model, config, mode = "robust", out = "manifold.json", report;
  std::optional<std::uint64_t> seed;
};

int cmd_plan(const PlanArgs & a)
{
  const auto cfg = load_config(a.config);
  auto problem = planner_problem_from_json(cfg.planner, load_robot_model(a.model));
  if(a.seed) problem.solver.seed = *a.seed;
  const auto mode = planner_mode_from_string(a.mode);
  auto [manifold, report] = solve_manifold(problem, mode);
  const auto fine = check_manifold(manifold, problem);

  auto j = to_json(report);
  j["fine_check"] = {{"samples", fine.samples},
                     {"max_constraint_violation", fine.max_constraint_violation},
                     {"max_zmp_violation", fine.max_zmp_violation},
                     {"max_joint_violation", fine.max_joint_violation},
                     {"max_hand_violation", fine.max_hand_violation}};
  save_manifold(manifold, a.out);
  write_text(a.report.empty() ? report_path_for(a.out) : a.report, j.dump(2) + "\n");
  std::cout << "plan " << a.mode << ": converged=" << (report.converged ? "true" : "false")
            << " final_cost=" << report.final_cost << " max_violation=" << report.max_constraint_violation
            << " fine_max_violation=" << fine.max_constraint_violation << '\n';
  if(!report.message.empty()) std::cout << report.message << '\n';
  return report.converged ? kExitOk : kExitRejected;
}

struct SimulateArgs
{
  std::string model, manifold, config, profile, csv, out;
  double M = 0.0, h = 1.0;
  bool force = false;
  std::optional<std::uint64_t> seed;
};

int cmd_simulate(const SimulateArgs & a)
{
  auto cfg = load_config(a.config);
  cfg.sim.allow_fingerprint_mismatch = a.force;
  const auto model = load_robot_model(a.model);
  const auto manifold = load_manifold(a.manifold);
  const auto profile = a.profile.empty() ? ForceProfile::sinusoid(a.M, a.h) : force_profile_from_json(read_json(a.profile));
  const auto result = run_episode(model, manifold, cfg.controller, profile, cfg.sim);

  auto j = to_json(result);
  j["profile"] = to_json(profile);
  const auto text = j.dump(2) + "\n";
  if(a.out.empty()) std::cout << text;
  else write_text(a.out, text);
  if(!a.csv.empty())
  {
    std::ostringstream os;
    write_episode_csv(result, os);
    write_text(a.csv, os.str());
  }
  return kExitOk;
}

struct SweepArgs
{
  std::string model, robust, standard, config, out = "sweep";
  std::vector<double> M, h;
  int threads = -1;
  std::optional<std::uint64_t> seed;
};

int cmd_sweep(const SweepArgs & a)
{
  const auto cfg = load_config(a.config);
  auto sweep = sweep_config_from_json(cfg.sweep);
  if(!cfg.sweep.contains("controller")) sweep.controller = cfg.controller;
  if(!cfg.sweep.contains("simulation")) sweep.sim = cfg.sim;
  if(!a.M.empty()) sweep.M_values = a.M;
  if(!a.h.empty()) sweep.h_values = a.h;
  if(a.threads >= 0) sweep.threads = a.threads;
  if(a.seed) sweep.seed = *a.seed;

  const auto model = load_robot_model(a.model);
  std::map<PlannerMode, ManifoldSpec> manifolds;
  manifolds.emplace(PlannerMode::robust, load_manifold(a.robust));
  manifolds.emplace(PlannerMode::standard, load_manifold(a.standard));
  const auto result = run_sweep(model, manifolds, sweep);

  const fs::path dir(a.out);
  std::ostringstream csv;
  write_sweep_csv(result, csv);
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "sweep.svg", render_sweep_svg(result));

  json summary;
  for(auto mode : sweep.modes)
  {
    summary[to_string(mode)] = {{"success_count", result.success_count(mode)},
                                {"cells", result.M_values.size() * result.h_values.size()}};
  }
  write_text(dir / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump() << '\n';
  return kExitOk;
}

struct SmoothnessArgs
{
  std::string model, config, mode = "robust", out = "smoothness.csv";
  std::optional<std::uint64_t> seed;
};

int cmd_compare_smoothness(const SmoothnessArgs & a)
{
  const auto cfg = load_config(a.config);
  auto problem = planner_problem_from_json(cfg.planner, load_robot_model(a.model));
  if(a.seed) problem.solver.seed = *a.seed;
  const auto c = compare_smoothness(problem, planner_mode_from_string(a.mode));
  std::ostringstream csv;
  write_smoothness_csv(c, csv);
  write_text(a.out, csv.str());
  const json summary{{"manifold_max_jump", c.manifold_max_jump},
                     {"baseline_max_jump", c.baseline_max_jump},
                     {"manifold_converged", c.manifold_converged},
                     {"baseline_converged", c.baseline_converged},
                     {"points", c.forces.size()}};
  std::cout << summary.dump(2) << '\n';
  return kExitOk;
}

struct EvalArgs
{
  std::string model, input, out;
};

int cmd_eval_zmp(const EvalArgs & a)
{
  const auto result = eval_zmp(load_robot_model(a.model), read_json(a.input));
  const auto text = result.dump(2) + "\n";
  if(a.out.empty()) std::cout << text;
  else write_text(a.out, text);
  return kExitOk;
}

struct ServeArgs
{
  std::string model, manifold, config;
  ServeOptions options;
  bool force = false;
};

Server * g_server = nullptr;

void on_signal(int)
{
  if(g_server) g_server->stop();
}

int cmd_serve(const ServeArgs & a)
{
  auto cfg = load_config(a.config);
  cfg.sim.allow_fingerprint_mismatch = a.force;
  ServeSession session(load_robot_model(a.model), load_manifold(a.manifold), cfg.controller, cfg.sim);
  Server server(session, a.options);
  std::string error;
  if(!server.bind(error))
  {
    std::cerr << "serve: cannot listen on " << a.options.host << ":" << a.options.port << ": " << error << '\n';
    return kExitError;
  }
  std::cout << "listening on " << a.options.host << ":" << server.port() << std::endl;
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.run();
  g_server = nullptr;
  return kExitOk;
}

} // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"Robust spatial references for pHRI balance: planning, simulation and sweeps"};
  app.require_subcommand(1);

  PlanArgs plan;
  auto * p = app.add_subcommand("plan", "Plan a manifold");
  p->add_option("model", plan.model, "Robot model JSON")->required();
  p->add_option("--config", plan.config, "Config JSON");
  p->add_option("--mode", plan.mode, "robust|standard")->check(CLI::IsMember({"robust", "standard"}));
  p->add_option("--out", plan.out, "Manifold output path");
  p->add_option("--report", plan.report, "Report path (default <out stem>.report.json)");
  p->add_option("--seed", plan.seed, "Solver seed");

  SimulateArgs sim;
  auto * s = app.add_subcommand("simulate", "Run one episode");
  s->set_help_flag("--help", "Print this help message and exit");
  s->add_option("model", sim.model)->required();
  s->add_option("manifold", sim.manifold)->required();
  s->add_option("--config", sim.config);
  s->add_option("--M", sim.M, "Peak force, N");
  s->add_option("--h", sim.h, "Rise time, s");
  s->add_option("--profile", sim.profile, "Force profile JSON (overrides --M/--h)");
  s->add_option("--csv", sim.csv, "Time series CSV");
  s->add_option("--out", sim.out, "Result JSON (default stdout)");
  s->add_option("--seed", sim.seed, "Unused, episodes are deterministic");
  s->add_flag("--force", sim.force, "Accept a manifold planned for another model");

  SweepArgs sw;
  auto * w = app.add_subcommand("sweep", "Robust vs standard over the M x h grid");
  w->set_help_flag("--help", "Print this help message and exit");
  w->add_option("model", sw.model)->required();
  w->add_option("robust", sw.robust, "Robust manifold")->required();
  w->add_option("standard", sw.standard, "Standard manifold")->required();
  w->add_option("--config", sw.config);
  w->add_option("--out", sw.out, "Output directory");
  w->add_option("--M", sw.M, "Peak forces (overrides config)");
  w->add_option("--h", sw.h, "Rise times (overrides config)");
  w->add_option("--threads", sw.threads, "Worker threads, 0 = all cores");
  w->add_option("--seed", sw.seed, "Noise seed");

  SmoothnessArgs sm;
  auto * c = app.add_subcommand("compare-smoothness", "Manifold vs per-force baseline joint traces");
  c->add_option("model", sm.model)->required();
  c->add_option("--config", sm.config);
  c->add_option("--mode", sm.mode)->check(CLI::IsMember({"robust", "standard"}));
  c->add_option("--out", sm.out, "CSV path");
  c->add_option("--seed", sm.seed, "Baseline seed");

  EvalArgs ev;
  auto * e = app.add_subcommand("eval-zmp", "Static ZMP of one state");
  e->add_option("model", ev.model)->required();
  e->add_option("input", ev.input, "JSON {q, f_h1, f_h2?, delta_margin?}")->required();
  e->add_option("--out", ev.out);

  ServeArgs sv;
  auto * r = app.add_subcommand("serve", "Live session over newline-delimited JSON on TCP");
  r->add_option("model", sv.model)->required();
  r->add_option("manifold", sv.manifold)->required();
  r->add_option("--config", sv.config);
  r->add_option("--host", sv.options.host);
  r->add_option("--port", sv.options.port, "0 picks a free port");
  r->add_flag("--fast", sv.options.fast, "Lockstep ticks, no wall-clock pacing");
  r->add_flag("--once", sv.options.once, "Exit after the first client disconnects");
  r->add_flag("--force", sv.force, "Accept a manifold planned for another model");

  CLI11_PARSE(app, argc, argv);

  try
  {
    if(*p) return cmd_plan(plan);
    if(*s) return cmd_simulate(sim);
    if(*w) return cmd_sweep(sw);
    if(*c) return cmd_compare_smoothness(sm);
    if(*e) return cmd_eval_zmp(ev);
    if(*r) return cmd_serve(sv);
  }
  catch(const FingerprintMismatch & ex)
  {
    std::cerr << "error: " << ex.what() << " (use --force to override)\n";
    return kExitRejected;
  }
  catch(const std::exception & ex)
  {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
