#include <doctest.h>

#include <functional>

#include "oracle.hpp"
#include "prefplan/error.hpp"
#include "prefplan/product.hpp"

using namespace prefplan;
using nlohmann::json;

namespace {

int px(const ProductMdp& p, const LabeledMdp& m, const PreferenceAutomaton& a, const std::string& s,
       const std::string& q) {
  const auto x = p.find(*m.state_index(s), *a.state_index(q));
  REQUIRE(x.has_value());
  return *x;
}

}  // namespace

TEST_CASE("micro product by hand") {
  const auto m = oracle::load_mdp("mdp/micro1.json");
  const auto a = oracle::load_automaton("automata/micro.json");
  const auto p = product(m, a);
  CHECK(p.num_states() == 3);
  const int x0 = px(p, m, a, "s0", "q0");
  const int xa = px(p, m, a, "sA", "qA");
  const int xb = px(p, m, a, "sB", "qB");
  CHECK(p.initial()(x0) == 1.0);
  CHECK(p.transition(x0, 0, xa) == doctest::Approx(0.6));
  CHECK(p.transition(x0, 0, xb) == doctest::Approx(0.4));
  CHECK(p.transition(xa, 0, xa) == 1.0);
  CHECK_FALSE(p.find(*m.state_index("sA"), *a.state_index("qB")).has_value());
}

TEST_CASE("single absorbing state product") {
  json md = {{"states", {"s"}},
             {"actions", {"stay"}},
             {"initial", {{"s", 1.0}}},
             {"transitions", {{{"from", "s"}, {"action", "stay"}, {"to", "s"}, {"prob", 1.0}}}},
             {"propositions", json::array()},
             {"labels", json::object()}};
  json ad = {{"states", {"q"}},
             {"initial", "q"},
             {"propositions", json::array()},
             {"transitions", {{{"from", "q"}, {"symbol", json::array()}, {"to", "q"}}}}};
  const auto p = product(load_mdp(md), load_automaton(ad));
  CHECK(p.num_states() == 1);
  CHECK(p.transition(0, 0, 0) == 1.0);
}

TEST_CASE("gridworld product reachability") {
  const auto m = oracle::load_grid("grid/gridworld5x5.json");
  const auto a = oracle::load_automaton("automata/regions.json");
  const auto p = product(m, a);
  CHECK(p.num_states() <= 25 * 8);
  // The obstacles at 5 and 6 force every path to cell 0 (label A) through
  // cell 12 (label B), so the automaton is at AB or beyond there.
  CHECK(p.find(0, *a.state_index("5")).has_value());
  CHECK_FALSE(p.find(0, *a.state_index("1")).has_value());
  CHECK_FALSE(p.find(0, *a.state_index("0")).has_value());
  CHECK(p.find(12, *a.state_index("2")).has_value());
  const int start = *p.find(10, *a.state_index("0"));
  CHECK(p.initial()(start) == 1.0);

  for (int x = 0; x < p.num_states(); ++x) {
    for (int act = 0; act < p.num_actions(); ++act) {
      double total = 0.0;
      for (const auto& o : p.successors(x, act)) total += o.prob;
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
      // The automaton coordinate is a function of the MDP successor.
      std::map<int, int> q_of_s;
      for (const auto& o : p.successors(x, act)) {
        const auto& st = p.state(o.target);
        auto [it, fresh] = q_of_s.emplace(st.mdp_state, st.automaton_state);
        CHECK((fresh || it->second == st.automaton_state));
      }
    }
  }
}

TEST_CASE("identity dynamics product paths replicate automaton runs") {
  GridworldSpec spec;
  spec.initial_cell = 10;
  spec.labels = {{0, "A"}, {12, "B"}, {22, "C"}};
  spec.dynamics = Eigen::Matrix4d::Identity();
  const auto m = build_gridworld(spec);
  const auto a = oracle::load_automaton("automata/regions.json");
  const auto p = product(m, a);
  // Walk E, E (to 12: B), S, S (to 22: C), W, W, N, N, N, N (to 0: A).
  const std::vector<int> moves = {1, 1, 2, 2, 3, 3, 0, 0, 0, 0};
  int x = *p.find(10, a.initial());
  std::vector<Symbol> word = {a.symbol(m.labels[10])};
  for (int mv : moves) {
    REQUIRE(p.successors(x, mv).size() == 1);
    x = p.successors(x, mv).front().target;
    word.push_back(a.symbol(m.labels[p.state(x).mdp_state]));
  }
  CHECK(p.state(x).automaton_state == run(a, word));
  CHECK(a.state_name(p.state(x).automaton_state) == "7");
}

TEST_CASE("labels outside the automaton alphabet") {
  auto m = oracle::load_mdp("mdp/micro1.json");
  const auto a = oracle::load_automaton("automata/micro.json");
  m.labels[1] = {"A", "B"};  // a symbol with no transitions
  try {
    product(m, a);
    FAIL("expected SymbolMismatch");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::SymbolMismatch);
  }
  auto broken = oracle::load_mdp("mdp/micro1.json");
  broken.kernel[0][0][0].prob = 0.1;
  try {
    product(broken, a);
    FAIL("expected InvalidModel");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidModel);
  }
}

TEST_CASE("stage layers") {
  const auto m = oracle::load_mdp("mdp/micro3.json");
  const auto a = oracle::load_automaton("automata/micro3.json");
  const auto p = product(m, a);
  const auto layers = reachable_layers(p, 4);
  REQUIRE(layers.size() == 4);
  CHECK(layers[0].size() == 1);
  CHECK(layers[1].size() == 3);  // (sA,qA), (s1,q0), (sB,qB)
  CHECK(layers[2].size() == 3);  // (sA,qA), (sB,qB), (sC,qC)
  CHECK(layers[3].size() == 3);
}
