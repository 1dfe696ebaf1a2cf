#include "prefplan/encoding.hpp"

#include <cmath>

#include "prefplan/error.hpp"

namespace prefplan {

using lp::Comparator;
using lp::Term;

FlowVariables encode_flow(lp::MilpProblem& milp, const ProductMdp& product, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  auto& prog = milp.lp;
  FlowVariables flow;
  flow.horizon = horizon;
  flow.layers = reachable_layers(product, horizon);
  flow.index.resize(horizon);
  const int num_a = product.num_actions();

  std::vector<std::vector<Term>> rows;
  for (int t = 0; t < horizon; ++t) {
    const auto& layer = flow.layers[t];
    flow.index[t].assign(layer.size(), std::vector<int>(num_a, -1));

    // Inflow rows for this layer were accumulated while visiting t - 1.
    if (t == 0) rows.assign(layer.size(), {});
    for (std::size_t k = 0; k < layer.size(); ++k) {
      const int x = layer[k];
      for (int a = 0; a < num_a; ++a) {
        if (!product.enabled(x, a)) continue;
        const int v = prog.add_variable(0.0, 1.0, 0.0,
                                        "y[" + std::to_string(t) + "," + product.state_label(x) + "," +
                                            product.action_names()[a] + "]");
        flow.index[t][k][a] = v;
        rows[k].push_back({v, 1.0});
      }
    }
    for (std::size_t k = 0; k < layer.size(); ++k) {
      const double rhs = t == 0 ? product.initial()(layer[k]) : 0.0;
      prog.add_constraint(std::move(rows[k]), Comparator::Equal, rhs,
                          "flow[" + std::to_string(t) + "," + product.state_label(layer[k]) + "]");
    }
    if (t + 1 == horizon) break;

    // Outflow of stage t feeds the rows of stage t + 1.
    const auto& next = flow.layers[t + 1];
    std::vector<int> next_slot(product.num_states(), -1);
    for (std::size_t k = 0; k < next.size(); ++k) next_slot[next[k]] = static_cast<int>(k);
    rows.assign(next.size(), {});
    for (std::size_t k = 0; k < layer.size(); ++k) {
      for (int a = 0; a < num_a; ++a) {
        const int v = flow.index[t][k][a];
        if (v < 0) continue;
        for (const auto& o : product.successors(layer[k], a)) rows[next_slot[o.target]].push_back({v, -o.prob});
      }
    }
  }
  return flow;
}

std::vector<Term> terminal_mass(const FlowVariables& flow, const ProductMdp& product, const StateSet& set) {
  std::vector<Term> out;
  if (set.empty() || flow.horizon < 1) return out;
  std::vector<char> member(product.num_automaton_states(), 0);
  for (int q : set) {
    if (q >= 0 && q < product.num_automaton_states()) member[q] = 1;
  }
  const int t = flow.horizon - 1;
  const auto& layer = flow.layers[t];
  for (std::size_t k = 0; k < layer.size(); ++k) {
    if (!member[product.state(layer[k]).automaton_state]) continue;
    for (int v : flow.index[t][k]) {
      if (v >= 0) out.push_back({v, 1.0});
    }
  }
  return out;
}

namespace {

std::vector<Term> scaled(const std::vector<Term>& terms, double c) {
  std::vector<Term> out = terms;
  for (auto& t : out) t.coef *= c;
  return out;
}

std::vector<Term> concat(std::vector<Term> a, const std::vector<Term>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

EncodedValue encode_apf1(lp::MilpProblem& milp, const FlowVariables& flow, const ProductMdp& product,
                         const AtomicPreference& apf, const EncodingParams& params, const std::string& name) {
  if (apf.length() != 1) {
    throw Error(ErrorKind::ApfTooLong, "preference '" + name + "' has length " + std::to_string(apf.length()) +
                                           "; only length-1 preferences can be planned");
  }
  auto& prog = milp.lp;
  const double big = params.big_m;
  const double small = params.lower_m;
  const double eps = params.epsilon;
  EncodedValue e;
  e.value = prog.add_variable(0.0, lp::kInf, 0.0, "v[" + name + "]");
  e.binary = milp.add_binary("z[" + name + "]");
  const auto worse = terminal_mass(flow, product, apf.sets[0]);
  const auto better = terminal_mass(flow, product, apf.sets[1]);
  const auto gap = concat(better, scaled(worse, -1.0));  // y(X') - y(X)
  const int v = e.value;
  const int z = e.binary;

  // v - y(X') >= M (z - 1)
  prog.add_constraint(concat({{v, 1.0}, {z, -big}}, scaled(better, -1.0)), Comparator::GreaterEqual, -big,
                      name + ".value_lo");
  // v - y(X') <= 0
  prog.add_constraint(concat({{v, 1.0}}, scaled(better, -1.0)), Comparator::LessEqual, 0.0, name + ".value_hi");
  // v >= 0
  prog.add_constraint({{v, 1.0}}, Comparator::GreaterEqual, 0.0, name + ".nonneg");
  // v <= M z
  prog.add_constraint({{v, 1.0}, {z, -big}}, Comparator::LessEqual, 0.0, name + ".gate");
  // y(X') - y(X) <= M z - eps (1 - z)
  prog.add_constraint(concat(gap, {{z, -(big + eps)}}), Comparator::LessEqual, -eps, name + ".order_hi");
  // y(X') - y(X) >= m (1 - z) + eps z
  prog.add_constraint(concat(gap, {{z, small - eps}}), Comparator::GreaterEqual, small, name + ".order_lo");
  return e;
}

EncodedValue encode_and(lp::MilpProblem& milp, int v1, int v2, const EncodingParams& params,
                        const std::string& name) {
  auto& prog = milp.lp;
  const double big = params.big_m;
  const double small = params.lower_m;
  const double eps = params.epsilon;
  EncodedValue e;
  e.value = prog.add_variable(0.0, lp::kInf, 0.0, "v[" + name + "]");
  e.binary = milp.add_binary("z[" + name + "]");
  const int v = e.value;
  const int z = e.binary;
  prog.add_constraint({{v, 1.0}, {v1, -1.0}}, Comparator::LessEqual, 0.0, name + ".below1");
  prog.add_constraint({{v, 1.0}, {v2, -1.0}}, Comparator::LessEqual, 0.0, name + ".below2");
  // v - v1 >= m z: tight (v = v1) when z = 0.
  prog.add_constraint({{v, 1.0}, {v1, -1.0}, {z, -small}}, Comparator::GreaterEqual, 0.0, name + ".pick1");
  // v - v2 >= m (1 - z): tight (v = v2) when z = 1.
  prog.add_constraint({{v, 1.0}, {v2, -1.0}, {z, small}}, Comparator::GreaterEqual, small, name + ".pick2");
  // v1 - v2 <= M z - eps (1 - z)
  prog.add_constraint({{v1, 1.0}, {v2, -1.0}, {z, -(big + eps)}}, Comparator::LessEqual, -eps, name + ".order");
  return e;
}

EncodedValue encode_or(lp::MilpProblem& milp, int v1, int v2, const EncodingParams& params,
                       const std::string& name) {
  auto& prog = milp.lp;
  const double big = params.big_m;
  const double eps = params.epsilon;
  EncodedValue e;
  e.value = prog.add_variable(0.0, lp::kInf, 0.0, "v[" + name + "]");
  e.binary = milp.add_binary("z[" + name + "]");
  const int v = e.value;
  const int z = e.binary;
  prog.add_constraint({{v, 1.0}, {v1, -1.0}}, Comparator::GreaterEqual, 0.0, name + ".above1");
  prog.add_constraint({{v, 1.0}, {v2, -1.0}}, Comparator::GreaterEqual, 0.0, name + ".above2");
  // v <= v1 + M (1 - z)
  prog.add_constraint({{v, 1.0}, {v1, -1.0}, {z, big}}, Comparator::LessEqual, big, name + ".pick1");
  // v <= v2 + M z
  prog.add_constraint({{v, 1.0}, {v2, -1.0}, {z, -big}}, Comparator::LessEqual, 0.0, name + ".pick2");
  // v1 - v2 <= M z - eps (1 - z)
  prog.add_constraint({{v1, 1.0}, {v2, -1.0}, {z, -(big + eps)}}, Comparator::LessEqual, -eps, name + ".order");
  return e;
}

namespace {

int encode_node(lp::MilpProblem& milp, const FlowVariables& flow, const ProductMdp& product, const Gpf& node,
                const EncodingParams& params, PreferenceEncoding& out) {
  switch (node.kind) {
    case Gpf::Kind::Leaf: {
      auto it = out.apfs.find(node.name);
      if (it == out.apfs.end()) {
        it = out.apfs.emplace(node.name, encode_apf1(milp, flow, product, node.apf, params, node.name)).first;
      }
      return it->second.value;
    }
    case Gpf::Kind::And:
    case Gpf::Kind::Or: {
      int acc = encode_node(milp, flow, product, node.children.front(), params, out);
      for (std::size_t i = 1; i < node.children.size(); ++i) {
        const int rhs = encode_node(milp, flow, product, node.children[i], params, out);
        const std::string name = (node.kind == Gpf::Kind::And ? "and" : "or") + std::to_string(out.connectives.size());
        const auto e = node.kind == Gpf::Kind::And ? encode_and(milp, acc, rhs, params, name)
                                                   : encode_or(milp, acc, rhs, params, name);
        out.connectives.push_back(e);
        acc = e.value;
      }
      return acc;
    }
    case Gpf::Kind::Lex:
      break;
  }
  throw Error(ErrorKind::LexNotEvaluable, "lex(...) cannot be encoded as one program; use plan_lex");
}

void check_params(const EncodingParams& params) {
  if (params.horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  if (!(params.epsilon > 0.0)) throw Error(ErrorKind::InvalidArgument, "epsilon must be positive");
  if (!(params.big_m > 0.0)) throw Error(ErrorKind::InvalidArgument, "M must be positive");
  if (!(params.lower_m < 0.0)) throw Error(ErrorKind::InvalidArgument, "m must be negative");
}

// Leaves first so an unplannable preference is reported before any solving.
void check_plannable(const Gpf& gpf) {
  if (gpf.kind == Gpf::Kind::Lex) throw Error(ErrorKind::LexNotEvaluable, "lex(...) must be planned with plan_lex");
  if (gpf.is_leaf() && gpf.apf.length() != 1) {
    throw Error(ErrorKind::ApfTooLong, "preference '" + gpf.name + "' has length " + std::to_string(gpf.apf.length()) +
                                           "; only length-1 preferences can be planned");
  }
  for (const auto& c : gpf.children) check_plannable(c);
}

// True when the terminal distribution puts some preference or connective
// within a factor two of the margin, where the quantized encoding may
// disagree with the exact semantics.
bool near_tie_band(const Gpf& node, const Eigen::VectorXd& dist, double eps) {
  if (node.is_leaf()) {
    const double d = set_mass(node.apf.sets[1], dist) - set_mass(node.apf.sets[0], dist);
    return std::abs(d) < 2.0 * eps;
  }
  for (const auto& c : node.children) {
    if (near_tie_band(c, dist, eps)) return true;
  }
  if (node.kind == Gpf::Kind::And || node.kind == Gpf::Kind::Or) {
    double acc = eval_gpf(node.children.front(), dist);
    for (std::size_t i = 1; i < node.children.size(); ++i) {
      const double rhs = eval_gpf(node.children[i], dist);
      const double d = std::abs(acc - rhs);
      if (d > 1e-12 && d < 2.0 * eps) return true;
      acc = node.kind == Gpf::Kind::And ? std::min(acc, rhs) : std::max(acc, rhs);
    }
  }
  return false;
}

}  // namespace

PreferenceEncoding encode_gpf(lp::MilpProblem& milp, const FlowVariables& flow, const ProductMdp& product,
                              const Gpf& gpf, const EncodingParams& params) {
  check_plannable(gpf);
  PreferenceEncoding out;
  out.root = encode_node(milp, flow, product, gpf, params, out);
  return out;
}

BuiltProgram build_program(const ProductMdp& product, const Gpf& gpf, const EncodingParams& params) {
  check_params(params);
  check_plannable(gpf);
  BuiltProgram b;
  b.flow = encode_flow(b.milp, product, params.horizon);
  b.pref = encode_gpf(b.milp, b.flow, product, gpf, params);
  b.milp.lp.objective[b.pref.root] = 1.0;
  return b;
}

OccupancyPlan plan(std::shared_ptr<const ProductMdp> product, const Gpf& gpf, const EncodingParams& params,
                   const lp::MilpConfig& config) {
  check_params(params);
  check_plannable(gpf);
  OccupancyPlan out;
  out.product = product;
  out.horizon = params.horizon;

  EncodingParams used = params;
  BuiltProgram prog = build_program(*product, gpf, used);
  lp::Solution sol = lp::milp_solve(prog.milp, config);
  out.nodes = sol.nodes;
  if (sol.status == lp::Status::Infeasible) {
    used.epsilon = params.epsilon / 10.0;
    prog = build_program(*product, gpf, used);
    sol = lp::milp_solve(prog.milp, config);
    out.nodes += sol.nodes;
    out.retried = true;
  }
  out.epsilon = used.epsilon;
  out.status = sol.status;
  out.bound = sol.bound;
  if (sol.status == lp::Status::Unbounded) {
    throw Error(ErrorKind::NumericalBreakdown, "preference program reported unbounded");
  }
  if (sol.x.size() == 0) {
    out.objective = 0.0;
    out.tie_band_warning = true;
    return out;
  }

  out.objective = sol.objective;
  out.occupancy.assign(params.horizon, Eigen::MatrixXd::Zero(product->num_states(), product->num_actions()));
  for (int t = 0; t < params.horizon; ++t) {
    const auto& layer = prog.flow.layers[t];
    for (std::size_t k = 0; k < layer.size(); ++k) {
      for (int a = 0; a < product->num_actions(); ++a) {
        const int v = prog.flow.index[t][k][a];
        if (v >= 0) out.occupancy[t](layer[k], a) = sol.x(v);
      }
    }
  }
  for (const auto& [name, e] : prog.pref.apfs) {
    out.apf_value[name] = sol.x(e.value);
    out.apf_binary[name] = sol.x(e.binary) > 0.5 ? 1 : 0;
  }
  for (const auto& e : prog.pref.connectives) {
    out.connective_value.push_back(sol.x(e.value));
    out.connective_binary.push_back(sol.x(e.binary) > 0.5 ? 1 : 0);
  }

  Eigen::VectorXd dist = Eigen::VectorXd::Zero(product->num_automaton_states());
  const auto& last = out.occupancy.back();
  for (int x = 0; x < product->num_states(); ++x) dist(product->state(x).automaton_state) += last.row(x).sum();
  out.tie_band_warning = out.retried || near_tie_band(gpf, dist, params.epsilon);
  return out;
}

OccupancyPlan plan(const LabeledMdp& mdp, const PreferenceAutomaton& automaton, const Gpf& gpf,
                   const EncodingParams& params, const lp::MilpConfig& config) {
  check_params(params);
  check_plannable(gpf);
  auto prod = std::make_shared<const ProductMdp>(product(mdp, automaton));
  return plan(prod, gpf, params, config);
}

LexResult plan_lex(const LabeledMdp& mdp, const PreferenceAutomaton& automaton, const std::vector<Gpf>& gpfs,
                   const EncodingParams& params, const lp::MilpConfig& config) {
  if (gpfs.empty()) throw Error(ErrorKind::InvalidArgument, "lex needs at least one formula");
  for (const auto& g : gpfs) check_plannable(g);
  auto prod = std::make_shared<const ProductMdp>(product(mdp, automaton));
  LexResult out;
  for (std::size_t i = 0; i < gpfs.size(); ++i) {
    out.index = static_cast<int>(i) + 1;
    out.plan = plan(prod, gpfs[i], params, config);
    if (out.plan.objective > kPositiveValue) break;
  }
  return out;
}

}  // namespace prefplan
