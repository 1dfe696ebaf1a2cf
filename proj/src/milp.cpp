#include <cmath>
#include <queue>

#include "prefplan/error.hpp"
#include "prefplan/lp.hpp"

namespace prefplan::lp {

namespace {

constexpr double kObjectiveTieTol = 1e-9;

struct Incumbent {
  bool found = false;
  double objective = -kInf;
  Eigen::VectorXd x;
  std::vector<int> binary_values;
  unsigned long long key = 0;  // assignment read as a binary number, first binary lowest
};

std::vector<int> rounded(const MilpProblem& problem, const Eigen::VectorXd& x) {
  std::vector<int> out;
  out.reserve(problem.binaries.size());
  for (int b : problem.binaries) out.push_back(x(b) > 0.5 ? 1 : 0);
  return out;
}

unsigned long long assignment_key(const std::vector<int>& values) {
  unsigned long long k = 0;
  for (std::size_t i = 0; i < values.size() && i < 64; ++i) {
    if (values[i]) k |= 1ULL << i;
  }
  return k;
}

// Higher objective wins; exact ties go to the smaller assignment key so the
// reported optimum does not depend on visiting order.
void offer(Incumbent& inc, double objective, const Eigen::VectorXd& x, std::vector<int> values) {
  const unsigned long long k = assignment_key(values);
  const bool better = !inc.found || objective > inc.objective + kObjectiveTieTol ||
                      (objective >= inc.objective - kObjectiveTieTol && k < inc.key);
  if (!better) return;
  inc.found = true;
  inc.objective = objective;
  inc.x = x;
  inc.binary_values = std::move(values);
  inc.key = k;
}

// Solves with the warm basis; a numerical failure gets one cold retry.
Status solve_with_retry(Simplex& simplex, const MilpProblem& problem, const SolverOptions& options, long& iterations) {
  try {
    const long before = simplex.iterations();
    const Status s = simplex.solve();
    iterations += simplex.iterations() - before;
    return s;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::NumericalBreakdown) throw;
  }
  Simplex fresh(problem.lp, options);
  for (int b : problem.binaries) fresh.set_bounds(b, simplex.lower(b), simplex.upper(b));
  const Status s = fresh.solve();
  iterations += fresh.iterations();
  simplex = std::move(fresh);
  return s;
}

Solution finish(const MilpProblem& problem, const MilpConfig& config, Incumbent& inc, Solution sol) {
  if (!inc.found) {
    if (sol.status != Status::NodeLimitExceeded) sol.status = Status::Infeasible;
    sol.objective = 0.0;
    return sol;
  }
  // Snap binaries to exact integers before the independent check.
  for (std::size_t i = 0; i < problem.binaries.size(); ++i) inc.x(problem.binaries[i]) = inc.binary_values[i];
  const auto violations = check_point(problem, inc.x, config.lp.tol);
  if (!violations.empty()) {
    throw Error(ErrorKind::NumericalBreakdown, "incumbent fails re-verification: " + violations.front());
  }
  sol.objective = evaluate_objective(problem.lp, inc.x);
  sol.x = inc.x;
  sol.binary_values = inc.binary_values;
  return sol;
}

Solution enumerate(const MilpProblem& problem, const MilpConfig& config) {
  const int ell = static_cast<int>(problem.binaries.size());
  Simplex simplex(problem.lp, config.lp);
  for (int b : problem.binaries) simplex.set_bounds(b, 0.0, 0.0);

  Incumbent inc;
  Solution sol;
  sol.status = Status::Optimal;
  const unsigned long long total = 1ULL << ell;
  // Gray-code order: consecutive assignments differ in one binary, so each
  // solve starts from a nearly optimal basis.
  for (unsigned long long k = 0; k < total; ++k) {
    if (k > 0) {
      const int flip = __builtin_ctzll(k);
      const int b = problem.binaries[flip];
      const double v = simplex.lower(b) > 0.5 ? 0.0 : 1.0;
      simplex.set_bounds(b, v, v);
    }
    const Status s = solve_with_retry(simplex, problem, config.lp, sol.iterations);
    ++sol.nodes;
    if (s == Status::Unbounded) {
      sol.status = Status::Unbounded;
      return sol;
    }
    if (s != Status::Optimal) continue;
    const Eigen::VectorXd x = simplex.primal();
    offer(inc, evaluate_objective(problem.lp, x), x, rounded(problem, x));
  }
  return finish(problem, config, inc, sol);
}

struct Node {
  double bound = kInf;
  long id = 0;
  std::vector<std::pair<int, int>> fixes;  // (binary position, value)
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    return a.id > b.id;
  }
};

Solution branch_and_bound(const MilpProblem& problem, const MilpConfig& config) {
  const auto& tol = config.lp.tol;
  Simplex simplex(problem.lp, config.lp);
  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push({kInf, next_id++, {}});

  Incumbent inc;
  Solution sol;
  sol.status = Status::Optimal;
  while (!open.empty()) {
    if (sol.nodes >= config.node_limit) {
      sol.status = Status::NodeLimitExceeded;
      sol.bound = std::max(open.top().bound, inc.found ? inc.objective : -kInf);
      return finish(problem, config, inc, sol);
    }
    Node node = open.top();
    open.pop();
    if (inc.found && node.bound <= inc.objective + kObjectiveTieTol) continue;

    for (int b : problem.binaries) simplex.set_bounds(b, 0.0, 1.0);
    for (const auto& [i, v] : node.fixes) simplex.set_bounds(problem.binaries[i], v, v);
    const Status s = solve_with_retry(simplex, problem, config.lp, sol.iterations);
    ++sol.nodes;
    if (s == Status::Unbounded) {
      sol.status = Status::Unbounded;
      return sol;
    }
    if (s != Status::Optimal) continue;
    const Eigen::VectorXd x = simplex.primal();
    const double obj = evaluate_objective(problem.lp, x);
    if (inc.found && obj <= inc.objective + kObjectiveTieTol) continue;

    int branch = -1;
    double best_frac = tol.integrality;
    for (std::size_t i = 0; i < problem.binaries.size(); ++i) {
      const double v = x(problem.binaries[i]);
      const double frac = std::min(v - std::floor(v), std::ceil(v) - v);
      if (frac > best_frac + 1e-12) {
        best_frac = frac;
        branch = static_cast<int>(i);
      }
    }
    if (branch < 0) {
      offer(inc, obj, x, rounded(problem, x));
      continue;
    }
    for (int v : {0, 1}) {
      Node child{obj, next_id++, node.fixes};
      child.fixes.emplace_back(branch, v);
      open.push(std::move(child));
    }
  }
  return finish(problem, config, inc, sol);
}

}  // namespace

Solution milp_solve(const MilpProblem& problem, const MilpConfig& config) {
  if (problem.binaries.empty()) return lp_solve(problem.lp, config.lp);
  const int ell = static_cast<int>(problem.binaries.size());
  if (ell <= config.enum_threshold && ell < 40) return enumerate(problem, config);
  return branch_and_bound(problem, config);
}

}  // namespace prefplan::lp
