#include <doctest.h>

#include <random>

#include "oracle.hpp"
#include "prefplan/lp.hpp"

using namespace prefplan::lp;

namespace {

MilpConfig branch_and_bound() {
  MilpConfig c;
  c.enum_threshold = 0;
  return c;
}

}  // namespace

TEST_CASE("integrality rounds down") {
  MilpProblem m;
  const int z = m.add_binary("z");
  m.lp.objective[z] = 1.0;
  m.lp.add_constraint({{z, 1.0}}, Comparator::LessEqual, 0.4);
  for (const auto& cfg : {MilpConfig{}, branch_and_bound()}) {
    const auto s = milp_solve(m, cfg);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective == 0.0);
    CHECK(s.binary_values == std::vector<int>{0});
  }
}

TEST_CASE("switch rows") {
  // v <= 0.6 z together with v <= 1 - z pins v to 0 for both z values.
  MilpProblem m;
  const int v = m.lp.add_variable(0.0, kInf, 1.0, "v");
  const int z = m.add_binary("z");
  m.lp.add_constraint({{v, 1.0}, {z, -0.6}}, Comparator::LessEqual, 0.0);
  const int second = m.lp.add_constraint({{v, 1.0}, {z, 1.0}}, Comparator::LessEqual, 1.0);
  for (const auto& cfg : {MilpConfig{}, branch_and_bound()}) {
    const auto s = milp_solve(m, cfg);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(0.0));
    CHECK(check_point(m, s.x).empty());
  }
  // With the second row relaxed to v <= 1 the switch pays off at z = 1.
  m.lp.rows[second].terms = {{v, 1.0}};
  for (const auto& cfg : {MilpConfig{}, branch_and_bound()}) {
    const auto s = milp_solve(m, cfg);
    REQUIRE(s.status == Status::Optimal);
    CHECK(s.objective == doctest::Approx(0.6));
    CHECK(s.binary_values == std::vector<int>{1});
  }
}

TEST_CASE("infeasible for every assignment") {
  MilpProblem m;
  const int a = m.add_binary();
  const int b = m.add_binary();
  m.lp.add_constraint({{a, 1.0}, {b, 1.0}}, Comparator::Equal, 1.5);
  CHECK(milp_solve(m).status == Status::Infeasible);
  CHECK(milp_solve(m, branch_and_bound()).status == Status::Infeasible);
}

TEST_CASE("no binaries falls back to the LP") {
  MilpProblem m;
  const int x = m.lp.add_variable(0.0, 2.0, 1.0);
  m.lp.add_constraint({{x, 1.0}}, Comparator::LessEqual, 1.25);
  const auto s = milp_solve(m);
  REQUIRE(s.status == Status::Optimal);
  CHECK(s.objective == doctest::Approx(1.25));
}

TEST_CASE("ties go to the lowest assignment") {
  // Symmetric: any single binary set gives the same objective.
  MilpProblem m;
  std::vector<Term> sum;
  for (int k = 0; k < 4; ++k) {
    const int z = m.add_binary();
    m.lp.objective[z] = 1.0;
    sum.push_back({z, 1.0});
  }
  m.lp.add_constraint(sum, Comparator::LessEqual, 1.0);
  const auto e = milp_solve(m);
  const auto b = milp_solve(m, branch_and_bound());
  CHECK(e.objective == doctest::Approx(1.0));
  CHECK(b.objective == doctest::Approx(1.0));
  CHECK(e.binary_values == std::vector<int>{1, 0, 0, 0});
  CHECK(milp_solve(m).binary_values == e.binary_values);
}

TEST_CASE("random MILPs: both paths match brute force") {
  std::mt19937_64 rng(424242);
  int feasible = 0;
  for (int trial = 0; trial < 150; ++trial) {
    const int l = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto m = oracle::random_milp(rng, 3, 4, l);
    const auto ref = oracle::brute_force_milp(m);
    const auto e = milp_solve(m);
    const auto b = milp_solve(m, branch_and_bound());
    CAPTURE(trial);
    if (!ref.feasible) {
      CHECK(e.status == Status::Infeasible);
      CHECK(b.status == Status::Infeasible);
      continue;
    }
    ++feasible;
    REQUIRE(e.status == Status::Optimal);
    REQUIRE(b.status == Status::Optimal);
    CHECK(std::abs(e.objective - ref.objective) <= 1e-6);
    CHECK(std::abs(b.objective - e.objective) <= 1e-7);
    CHECK(check_point(m, e.x).empty());
    CHECK(check_point(m, b.x).empty());
  }
  CHECK(feasible > 50);
}

TEST_CASE("node limit reports incumbent and bound") {
  // A knapsack with fractional LP optimum everywhere needs several nodes.
  MilpProblem m;
  std::vector<Term> weight;
  const double w[] = {3, 4, 5, 6, 7, 8, 9, 10};
  const double val[] = {4, 5, 6, 7, 8, 9, 10, 11};
  for (int k = 0; k < 8; ++k) {
    const int z = m.add_binary();
    m.lp.objective[z] = val[k];
    weight.push_back({z, w[k]});
  }
  m.lp.add_constraint(weight, Comparator::LessEqual, 20.5);
  const auto exact = milp_solve(m, branch_and_bound());
  REQUIRE(exact.status == Status::Optimal);
  CHECK(exact.objective == doctest::Approx(oracle::brute_force_milp(m).objective));

  auto cfg = branch_and_bound();
  cfg.node_limit = 3;
  const auto cut = milp_solve(m, cfg);
  CHECK(cut.status == Status::NodeLimitExceeded);
  CHECK(cut.bound >= exact.objective - 1e-9);
  if (cut.x.size() > 0) CHECK(cut.objective <= exact.objective + 1e-9);
}
