#include "prefplan/cli.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "prefplan/automaton.hpp"
#include "prefplan/encoding.hpp"
#include "prefplan/error.hpp"
#include "prefplan/gpf.hpp"
#include "prefplan/lp.hpp"
#include "prefplan/mdp.hpp"
#include "prefplan/policy.hpp"
#include "prefplan/product.hpp"

namespace prefplan {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

std::string fixed6(double v) {
  if (std::abs(v) < 5e-7) v = 0.0;  // no "-0.000000"
  std::ostringstream s;
  s << std::fixed << std::setprecision(6) << v;
  return s.str();
}

std::string csv_field(const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) return f;
  std::string out = "\"";
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct ModelFlags {
  std::string mdp;
  std::string grid;
  std::string automaton;
  std::string pref;
};

struct SolverFlags {
  double epsilon = 1e-6;
  int enum_threshold = 16;
  long node_limit = 1'000'000;
};

void add_model_flags(CLI::App& cmd, ModelFlags& m, bool need_automaton = true) {
  auto* mdp = cmd.add_option("--mdp", m.mdp, "labeled MDP (JSON)");
  auto* grid = cmd.add_option("--grid", m.grid, "gridworld description (JSON)");
  mdp->excludes(grid);
  auto* aut = cmd.add_option("--automaton", m.automaton, "preference automaton (JSON)");
  if (need_automaton) aut->required();
  cmd.add_option("--pref", m.pref, "preference formula or preference name (defaults to the automaton's formula)");
}

void add_solver_flags(CLI::App& cmd, SolverFlags& s) {
  cmd.add_option("--epsilon", s.epsilon, "strictness margin")->check(CLI::PositiveNumber);
  cmd.add_option("--enum-threshold", s.enum_threshold, "enumerate binaries up to this count")->check(CLI::NonNegativeNumber);
  cmd.add_option("--node-limit", s.node_limit, "branch-and-bound node cap")->check(CLI::PositiveNumber);
}

LabeledMdp load_model(const ModelFlags& m) {
  if (!m.grid.empty()) return build_gridworld(load_gridworld_file(m.grid));
  if (!m.mdp.empty()) return load_mdp_file(m.mdp);
  throw Error(ErrorKind::InvalidArgument, "one of --mdp or --grid is required");
}

Gpf load_formula(const ModelFlags& m, const PreferenceAutomaton& automaton) {
  const std::string text = m.pref.empty() ? automaton.gpf_text() : m.pref;
  if (text.empty()) throw Error(ErrorKind::InvalidArgument, "no --pref given and the automaton declares no formula");
  return parse_gpf(text, automaton);
}

lp::MilpConfig milp_config(const SolverFlags& s) {
  lp::MilpConfig c;
  c.enum_threshold = s.enum_threshold;
  c.node_limit = s.node_limit;
  return c;
}

int exit_code(lp::Status s) {
  switch (s) {
    case lp::Status::Optimal: return kExitOk;
    case lp::Status::Infeasible: return kExitInfeasible;
    default: return kExitError;
  }
}

void print_plan(std::ostream& out, const OccupancyPlan& p) {
  out << "status " << lp::to_string(p.status) << '\n';
  out << "objective " << fixed6(p.objective) << '\n';
  for (const auto& [name, v] : p.apf_value) {
    out << "apf " << name << " value " << fixed6(v) << " z " << p.apf_binary.at(name) << '\n';
  }
  for (std::size_t i = 0; i < p.connective_value.size(); ++i) {
    out << "connective " << i << " value " << fixed6(p.connective_value[i]) << " z " << p.connective_binary[i] << '\n';
  }
  out << "epsilon " << p.epsilon << '\n';
  out << "nodes " << p.nodes << '\n';
  if (p.status == lp::Status::NodeLimitExceeded) out << "bound " << fixed6(p.bound) << '\n';
  if (p.tie_band_warning) out << "warning tie band: some preference is within the strictness margin\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
  f << text;
  if (!f) throw Error(ErrorKind::Io, "cannot write " + path);
}

int cmd_plan(const ModelFlags& m, const SolverFlags& s, int horizon, const std::string& out_path,
             const std::string& dump_path, std::ostream& out) {
  const auto mdp = load_model(m);
  const auto automaton = load_automaton_file(m.automaton);
  const Gpf gpf = load_formula(m, automaton);
  EncodingParams params;
  params.horizon = horizon;
  params.epsilon = s.epsilon;

  if (!dump_path.empty()) {
    if (gpf.kind == Gpf::Kind::Lex) throw Error(ErrorKind::InvalidArgument, "--dump does not apply to lex(...)");
    const auto prod = product(mdp, automaton);
    std::ostringstream text;
    lp::write_problem(text, build_program(prod, gpf, params).milp);
    write_text(dump_path, text.str());
  }

  OccupancyPlan result;
  if (gpf.kind == Gpf::Kind::Lex) {
    auto lex = plan_lex(mdp, automaton, gpf.children, params, milp_config(s));
    out << "lex-index " << lex.index << '\n';
    result = std::move(lex.plan);
  } else {
    result = plan(mdp, automaton, gpf, params, milp_config(s));
  }
  print_plan(out, result);
  if (!out_path.empty() && !result.occupancy.empty()) {
    const auto pol = extract_policy(result);
    write_text(out_path, policy_to_json(*result.product, pol).dump(2) + "\n");
  }
  return exit_code(result.status);
}

struct SweepRow {
  int horizon = 0;
  std::string status;
  double objective = 0.0;
  std::map<std::string, double> value;
  std::map<std::string, int> binary;
  long ms = 0;
  long nodes = 0;
  bool has_values = false;
};

int cmd_sweep(const ModelFlags& m, const SolverFlags& s, int t_min, int t_max, int jobs, bool no_timing,
              const std::string& out_path, std::ostream& out, std::ostream& err) {
  if (t_min > t_max) throw Error(ErrorKind::InvalidArgument, "--t-min must not exceed --t-max");
  const auto mdp = load_model(m);
  const auto automaton = load_automaton_file(m.automaton);
  const Gpf gpf = load_formula(m, automaton);
  if (gpf.kind == Gpf::Kind::Lex) throw Error(ErrorKind::InvalidArgument, "sweep plans one formula; lex(...) is not supported");
  const auto names = leaf_names(gpf);
  const auto prod = std::make_shared<const ProductMdp>(product(mdp, automaton));
  const auto config = milp_config(s);

  const int count = t_max - t_min + 1;
  std::vector<SweepRow> rows(count);
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      SweepRow& row = rows[i];
      row.horizon = t_min + i;
      EncodingParams params;
      params.horizon = row.horizon;
      params.epsilon = s.epsilon;
      const auto start = std::chrono::steady_clock::now();
      try {
        const auto p = plan(prod, gpf, params, config);
        row.status = lp::to_string(p.status);
        row.objective = p.objective;
        row.value = p.apf_value;
        row.binary = p.apf_binary;
        row.nodes = p.nodes;
        row.has_values = !p.apf_value.empty();
      } catch (const Error& e) {
        row.status = std::string("error:") + to_string(e.kind());
      }
      const auto elapsed = std::chrono::steady_clock::now() - start;
      row.ms = no_timing ? 0 : std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
    }
  };
  const int workers = std::clamp(jobs, 1, count);
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  std::ostringstream csv;
  csv << "T,objective";
  for (const auto& n : names) csv << ',' << csv_field("v_" + n);
  for (const auto& n : names) csv << ',' << csv_field("z_" + n);
  csv << ",ms,nodes,status\r\n";
  bool monotone = true;
  for (int i = 0; i < count; ++i) {
    const auto& r = rows[i];
    if (i > 0 && r.objective < rows[i - 1].objective - 1e-9) monotone = false;
    csv << r.horizon << ',' << fixed6(r.objective);
    for (const auto& n : names) csv << ',' << (r.has_values ? fixed6(r.value.at(n)) : "");
    for (const auto& n : names) csv << ',' << (r.has_values ? std::to_string(r.binary.at(n)) : "");
    csv << ',' << r.ms << ',' << r.nodes << ',' << csv_field(r.status) << "\r\n";
  }
  if (out_path.empty()) out << csv.str();
  else write_text(out_path, csv.str());
  err << "objective nondecreasing in T: " << (monotone ? "yes" : "no") << '\n';
  return kExitOk;
}

struct PolicyInputs {
  LabeledMdp mdp;
  PreferenceAutomaton automaton;
  ProductMdp prod;
  Policy policy;
  int horizon = 0;
};

PolicyInputs load_policy_inputs(const ModelFlags& m, const std::string& policy_path, int horizon) {
  PolicyInputs in;
  in.mdp = load_model(m);
  in.automaton = load_automaton_file(m.automaton);
  in.prod = product(in.mdp, in.automaton);
  in.policy = load_policy_file(policy_path, in.prod);
  in.horizon = horizon > 0 ? horizon : in.policy.horizon;
  if (in.horizon > in.policy.horizon) {
    throw Error(ErrorKind::UndefinedDecisionRule, "policy covers only " + std::to_string(in.policy.horizon) + " stages");
  }
  return in;
}

void print_leaf_values(std::ostream& out, const Gpf& g, const Eigen::VectorXd& dist, std::set<std::string>& seen) {
  if (g.is_leaf()) {
    if (seen.insert(g.name).second) out << "apf " << g.name << " value " << fixed6(eval_apf(g.apf, dist)) << '\n';
    return;
  }
  for (const auto& c : g.children) print_leaf_values(out, c, dist, seen);
}

int cmd_eval(const ModelFlags& m, const std::string& policy_path, int horizon, std::ostream& out) {
  const auto in = load_policy_inputs(m, policy_path, horizon);
  const Gpf gpf = load_formula(m, in.automaton);
  const auto r = forward_eval(in.prod, in.policy, in.horizon);
  for (int q = 0; q < in.automaton.num_states(); ++q) {
    out << "terminal " << in.automaton.state_name(q) << ' ' << fixed6(r.terminal(q)) << '\n';
  }
  std::set<std::string> seen;
  print_leaf_values(out, gpf, r.terminal, seen);
  out << "value " << fixed6(eval_gpf(gpf, r.terminal)) << '\n';
  return kExitOk;
}

int cmd_simulate(const ModelFlags& m, const std::string& policy_path, int horizon, long n, std::uint64_t seed,
                 int threads, std::ostream& out) {
  const auto in = load_policy_inputs(m, policy_path, horizon);
  const auto oracle = forward_eval(in.prod, in.policy, in.horizon).terminal;
  const auto freq = simulate(in.prod, in.policy, in.horizon, n, seed, threads);
  out << "state,empirical,oracle\n";
  for (int q = 0; q < in.automaton.num_states(); ++q) {
    out << csv_field(in.automaton.state_name(q)) << ',' << fixed6(freq(q)) << ',' << fixed6(oracle(q)) << '\n';
  }
  out << "max-abs-diff " << fixed6((freq - oracle).cwiseAbs().maxCoeff()) << '\n';
  return kExitOk;
}

int cmd_validate(const ModelFlags& m, std::ostream& out) {
  bool ok = true;
  std::optional<LabeledMdp> mdp;
  std::optional<PreferenceAutomaton> automaton;
  if (!m.mdp.empty() || !m.grid.empty()) {
    mdp = load_model(m);
    const auto issues = validate_mdp(*mdp);
    for (const auto& i : issues) out << "mdp " << to_string(i.kind) << ": " << i.message << '\n';
    ok = ok && issues.empty();
    if (issues.empty()) out << "mdp ok: " << mdp->num_states() << " states, " << mdp->num_actions() << " actions\n";
  }
  if (!m.automaton.empty()) {
    automaton = load_automaton_file(m.automaton);
    out << "automaton ok: " << automaton->num_states() << " states, " << automaton->alphabet().size() << " symbols\n";
    const std::string text = m.pref.empty() ? automaton->gpf_text() : m.pref;
    if (!text.empty()) out << "formula ok: " << to_string(parse_gpf(text, *automaton)) << '\n';
  }
  if (ok && mdp && automaton) {
    const auto prod = product(*mdp, *automaton);
    out << "product ok: " << prod.num_states() << " reachable states\n";
  }
  if (!mdp && !automaton) throw Error(ErrorKind::InvalidArgument, "nothing to validate");
  return ok ? kExitOk : kExitError;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Preference-based planning on labeled MDPs"};
  app.require_subcommand(1);

  ModelFlags model;
  SolverFlags solver;
  int horizon = 0;
  std::string out_path, dump_path, policy_path;
  int t_min = 1, t_max = 1, jobs = 1, threads = 1;
  bool no_timing = false;
  long n = 10000;
  std::uint64_t seed = 1;

  auto* plan_cmd = app.add_subcommand("plan", "solve for an optimal policy at one horizon");
  add_model_flags(*plan_cmd, model);
  add_solver_flags(*plan_cmd, solver);
  plan_cmd->add_option("--horizon", horizon, "number of decision stages T")->required()->check(CLI::PositiveNumber);
  plan_cmd->add_option("--out", out_path, "write the policy (JSON)");
  plan_cmd->add_option("--dump", dump_path, "write the program in text form");

  auto* sweep_cmd = app.add_subcommand("sweep", "plan for every horizon in a range and emit CSV");
  add_model_flags(*sweep_cmd, model);
  add_solver_flags(*sweep_cmd, solver);
  sweep_cmd->add_option("--t-min", t_min, "first horizon")->required()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--t-max", t_max, "last horizon")->required()->check(CLI::PositiveNumber);
  sweep_cmd->add_option("--jobs", jobs, "horizons solved concurrently")->check(CLI::PositiveNumber);
  sweep_cmd->add_flag("--no-timing", no_timing, "write 0 in the ms column (byte-stable output)");
  sweep_cmd->add_option("--out", out_path, "write CSV here instead of standard output");

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a policy file exactly");
  add_model_flags(*eval_cmd, model);
  eval_cmd->add_option("--policy", policy_path, "policy (JSON)")->required();
  eval_cmd->add_option("--horizon", horizon, "stages to evaluate (default: the policy's)")->check(CLI::PositiveNumber);

  auto* sim_cmd = app.add_subcommand("simulate", "sample trajectories under a policy file");
  add_model_flags(*sim_cmd, model);
  sim_cmd->add_option("--policy", policy_path, "policy (JSON)")->required();
  sim_cmd->add_option("--horizon", horizon, "stages to simulate (default: the policy's)")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--n", n, "number of trajectories")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--seed", seed, "generator seed");
  sim_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  auto* validate_cmd = app.add_subcommand("validate", "check model files");
  add_model_flags(*validate_cmd, model, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (plan_cmd->parsed()) return cmd_plan(model, solver, horizon, out_path, dump_path, out);
    if (sweep_cmd->parsed()) return cmd_sweep(model, solver, t_min, t_max, jobs, no_timing, out_path, out, err);
    if (eval_cmd->parsed()) return cmd_eval(model, policy_path, horizon, out);
    if (sim_cmd->parsed()) return cmd_simulate(model, policy_path, horizon, n, seed, threads, out);
    if (validate_cmd->parsed()) return cmd_validate(model, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace prefplan
