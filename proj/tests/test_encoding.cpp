#include <doctest.h>

#include <functional>
#include <memory>
#include <random>

#include "oracle.hpp"
#include "prefplan/encoding.hpp"
#include "prefplan/error.hpp"
#include "prefplan/policy.hpp"

using namespace prefplan;
using lp::Comparator;
using lp::kInf;

namespace {

struct Range {
  bool feasible = false;
  double lo = 0.0, hi = 0.0;
};

// Feasible range of one variable, by maximizing and minimizing it.
Range range_of(lp::LpProblem p, int var) {
  std::fill(p.objective.begin(), p.objective.end(), 0.0);
  p.objective[var] = 1.0;
  const auto up = lp::lp_solve(p);
  if (up.status == lp::Status::Infeasible) return {};
  p.objective[var] = -1.0;
  const auto down = lp::lp_solve(p);
  return {true, -down.objective, up.objective};
}

// Child values fixed, binary fixed; returns the feasible range of v.
Range connective_range(bool is_and, double c1, double c2, int z) {
  lp::MilpProblem m;
  const int v1 = m.lp.add_variable(c1, c1);
  const int v2 = m.lp.add_variable(c2, c2);
  EncodingParams params;
  const auto e = is_and ? encode_and(m, v1, v2, params) : encode_or(m, v1, v2, params);
  m.lp.lower[e.binary] = m.lp.upper[e.binary] = z;
  return range_of(m.lp, e.value);
}

std::shared_ptr<const ProductMdp> micro_product(const LabeledMdp& mdp) {
  return std::make_shared<const ProductMdp>(product(mdp, oracle::load_automaton("automata/micro.json")));
}

Eigen::VectorXd plan_terminal(const OccupancyPlan& p) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(p.product->num_automaton_states());
  const auto& last = p.occupancy.back();
  for (int x = 0; x < p.product->num_states(); ++x) q(p.product->state(x).automaton_state) += last.row(x).sum();
  return q;
}

}  // namespace

TEST_CASE("flow on a single absorbing state forces unit occupancy") {
  nlohmann::json md = {{"states", {"s"}},
                       {"actions", {"stay"}},
                       {"initial", {{"s", 1.0}}},
                       {"transitions", {{{"from", "s"}, {"action", "stay"}, {"to", "s"}, {"prob", 1.0}}}},
                       {"propositions", nlohmann::json::array()},
                       {"labels", nlohmann::json::object()}};
  nlohmann::json ad = {{"states", {"q"}},
                       {"initial", "q"},
                       {"propositions", nlohmann::json::array()},
                       {"transitions", {{{"from", "q"}, {"symbol", nlohmann::json::array()}, {"to", "q"}}}}};
  const auto p = product(load_mdp(md), load_automaton(ad));
  lp::MilpProblem m;
  const auto flow = encode_flow(m, p, 3);
  for (int t = 0; t < 3; ++t) {
    const auto r = range_of(m.lp, flow.index[t][0][0]);
    REQUIRE(r.feasible);
    CHECK(r.lo == doctest::Approx(1.0));
    CHECK(r.hi == doctest::Approx(1.0));
  }
}

TEST_CASE("flow on the micro product") {
  const auto mdp = oracle::load_mdp("mdp/micro1.json");
  const auto a = oracle::load_automaton("automata/micro.json");
  const auto p = product(mdp, a);
  lp::MilpProblem m;
  const auto flow = encode_flow(m, p, 2);
  REQUIRE(flow.layers[1].size() == 2);
  for (std::size_t k = 0; k < flow.layers[1].size(); ++k) {
    const int x = flow.layers[1][k];
    const double expect = p.state(x).automaton_state == *a.state_index("qA") ? 0.6 : 0.4;
    const auto r = range_of(m.lp, flow.index[1][k][0]);
    CHECK(r.lo == doctest::Approx(expect));
    CHECK(r.hi == doctest::Approx(expect));
  }
  for (const auto& stage : flow.index) {
    for (const auto& actions : stage) {
      for (int var : actions) {
        CHECK(m.lp.lower[var] == 0.0);
        CHECK(m.lp.upper[var] == 1.0);
      }
    }
  }

  // Terminal masses: {qA} is 0.6, all of Q is 1, the empty set is no terms.
  auto probe = [&](const StateSet& set) {
    lp::MilpProblem mm = m;
    const int w = mm.lp.add_variable(-kInf, kInf);
    auto terms = terminal_mass(flow, p, set);
    terms.push_back({w, -1.0});
    mm.lp.add_constraint(terms, Comparator::Equal, 0.0);
    return range_of(mm.lp, w);
  };
  CHECK(probe({*a.state_index("qA")}).hi == doctest::Approx(0.6));
  CHECK(probe({*a.state_index("qA")}).lo == doctest::Approx(0.6));
  CHECK(probe({0, 1, 2}).lo == doctest::Approx(1.0));
  CHECK(terminal_mass(flow, p, {}).empty());

  lp::MilpProblem single;
  encode_flow(single, p, 1);
  CHECK(single.lp.num_rows() == 1);
}

TEST_CASE("and selects the smaller child") {
  // (0.6, 1.0): only z = 0 is feasible and pins v to 0.6.
  auto r0 = connective_range(true, 0.6, 1.0, 0);
  auto r1 = connective_range(true, 0.6, 1.0, 1);
  REQUIRE(r0.feasible);
  CHECK(r0.lo == doctest::Approx(0.6));
  CHECK(r0.hi == doctest::Approx(0.6));
  CHECK_FALSE(r1.feasible);
  // Equal children classify with z = 1.
  r1 = connective_range(true, 0.5, 0.5, 1);
  REQUIRE(r1.feasible);
  CHECK(r1.lo == doctest::Approx(0.5));
  CHECK(r1.hi == doctest::Approx(0.5));
  CHECK_FALSE(connective_range(true, 0.5, 0.5, 0).feasible);
  // A zero child wins for either order.
  for (double x : {0.0, 0.3, 1.0}) {
    for (const auto& [c1, c2] : {std::pair{0.0, x}, std::pair{x, 0.0}}) {
      bool any = false;
      for (int z : {0, 1}) {
        const auto r = connective_range(true, c1, c2, z);
        if (!r.feasible) continue;
        any = true;
        CHECK(r.hi == doctest::Approx(0.0));
        CHECK(r.lo == doctest::Approx(0.0));
      }
      CHECK(any);
    }
  }
}

TEST_CASE("or selects the larger child") {
  auto r = connective_range(false, 0.6, 0.0, 1);
  REQUIRE(r.feasible);
  CHECK(r.hi == doctest::Approx(0.6));
  CHECK(r.lo == doctest::Approx(0.6));
  CHECK_FALSE(connective_range(false, 0.6, 0.0, 0).feasible);
  r = connective_range(false, 0.0, 0.0, 1);
  REQUIRE(r.feasible);
  CHECK(r.hi == doctest::Approx(0.0));
  r = connective_range(false, 0.2, 0.9, 0);
  REQUIRE(r.feasible);
  CHECK(r.lo == doctest::Approx(0.9));
  CHECK(r.hi == doctest::Approx(0.9));
  CHECK_FALSE(connective_range(false, 0.2, 0.9, 1).feasible);
}

TEST_CASE("atomic preference on the micro instances") {
  const auto a = oracle::load_automaton("automata/micro.json");
  const auto p = parse_gpf("p", a);
  EncodingParams params;
  params.horizon = 2;

  auto mdp = oracle::load_mdp("mdp/micro1.json");
  auto r = plan(micro_product(mdp), p, params);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(r.apf_binary.at("p") == 1);
  CHECK(r.apf_value.at("p") == doctest::Approx(0.6));

  // Kernel swapped: sA gets 0.4.
  mdp.kernel[0][0][0].prob = 0.4;
  mdp.kernel[0][0][1].prob = 0.6;
  r = plan(micro_product(mdp), p, params);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(0.0));
  CHECK(r.apf_binary.at("p") == 0);

  const auto micro2 = oracle::load_mdp("mdp/micro2.json");
  r = plan(micro_product(micro2), p, params);
  REQUIRE(r.status == lp::Status::Optimal);
  CHECK(r.objective == doctest::Approx(0.6));
  const auto pol = extract_policy(r);
  const int x0 = *r.product->find(0, 0);
  CHECK(pol.rules[0](x0, 0) == doctest::Approx(1.0));

  // Forcing b at the start: y on a fixed to zero.
  auto prod2 = micro_product(micro2);
  auto built = build_program(*prod2, p, params);
  built.milp.lp.upper[built.flow.index[0][0][0]] = 0.0;
  const auto forced = lp::milp_solve(built.milp);
  REQUIRE(forced.status == lp::Status::Optimal);
  CHECK(forced.objective == doctest::Approx(0.0));
}

TEST_CASE("long preferences and lex are rejected by the planner") {
  const auto mdp = oracle::load_grid("grid/gridworld5x5.json");
  const auto a = oracle::load_automaton("automata/regions.json");
  EncodingParams params;
  params.horizon = 3;
  try {
    plan(mdp, a, parse_gpf("P5", a), params);
    FAIL("expected ApfTooLong");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::ApfTooLong);
  }
  try {
    plan(mdp, a, parse_gpf("lex(P1, P2)", a), params);
    FAIL("expected LexNotEvaluable");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::LexNotEvaluable);
  }
}

TEST_CASE("gridworld below the reachability threshold") {
  const auto mdp = oracle::load_grid("grid/gridworld5x5.json");
  const auto a = oracle::load_automaton("automata/regions.json");
  EncodingParams params;
  for (int t : {3, 5, 8}) {
    params.horizon = t;
    const auto r = plan(mdp, a, parse_gpf("P1", a), params);
    CAPTURE(t);
    // Both sets can be empty of mass, which is the tie band: Infeasible, 0.
    CHECK(r.status != lp::Status::NodeLimitExceeded);
    CHECK(r.objective == doctest::Approx(0.0));
  }
}

TEST_CASE("lexicographic rounds") {
  const auto mdp = oracle::load_mdp("mdp/micro1.json");
  const auto a = oracle::load_automaton("automata/micro.json");
  EncodingParams params;
  params.horizon = 2;
  auto r = plan_lex(mdp, a, {parse_gpf("q", a), parse_gpf("p", a)}, params);
  CHECK(r.index == 2);
  CHECK(r.plan.objective == doctest::Approx(0.6));
  r = plan_lex(mdp, a, {parse_gpf("p", a), parse_gpf("q", a)}, params);
  CHECK(r.index == 1);
  r = plan_lex(mdp, a, {parse_gpf("q", a), parse_gpf("q", a)}, params);
  CHECK(r.index == 2);
  CHECK(r.plan.objective == 0.0);

  // An unreachable preferred set keeps the first round at zero.
  const auto g = oracle::load_grid("grid/gridworld5x5.json");
  const auto f = oracle::load_automaton("automata/regions.json");
  params.horizon = 4;
  r = plan_lex(g, f, {parse_gpf("P1", f), parse_gpf("P0", f)}, params);
  CHECK(r.index == 2);
  CHECK(r.plan.objective > 0.0);
}

TEST_CASE("invariants at the optimum on random instances") {
  std::mt19937_64 rng(1234);
  oracle::RandomInstanceSpec spec;
  spec.max_product_states = 20;
  int solved = 0, mixture_checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const auto inst = oracle::random_instance(rng, spec);
    const auto gpf = parse_gpf(inst.formula, inst.automaton);
    EncodingParams params;
    params.horizon = inst.horizon;
    const auto r = plan(inst.mdp, inst.automaton, gpf, params);
    CAPTURE(trial);
    if (r.status != lp::Status::Optimal) continue;
    ++solved;
    for (const auto& y : r.occupancy) {
      CHECK(std::abs(y.sum() - 1.0) <= 1e-6);
      CHECK(y.minCoeff() >= -1e-9);
    }
    const auto terminal = plan_terminal(r);
    for (const auto& name : leaf_names(gpf)) {
      const auto& apf = inst.automaton.apf(name);
      const double better = set_mass(apf.sets[1], terminal);
      const double worse = set_mass(apf.sets[0], terminal);
      if (r.apf_binary.at(name) == 1) {
        CHECK(std::abs(r.apf_value.at(name) - better) <= 1e-6);
        CHECK(better - worse >= r.epsilon - 1e-9);
      } else {
        CHECK(r.apf_value.at(name) <= 1e-9);
      }
    }
    // Single preference: the optimum over all policies is known exactly.
    if (gpf.is_leaf() && !r.retried && oracle::deterministic_policy_count(*r.product, inst.horizon, 20000) < 20000) {
      const auto det = oracle::best_deterministic(*r.product, gpf, inst.horizon);
      const auto mix = oracle::mixture_optimum(det.terminals, gpf.apf, params.epsilon);
      if (mix) {
        ++mixture_checked;
        CHECK(std::abs(r.objective - *mix) <= 1e-6);
      }
    }
  }
  CHECK(solved > 40);
  CHECK(mixture_checked > 5);
}
