#pragma once

#include <iosfwd>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace prefplan::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Centralized; every feasibility, optimality and integrality judgement in the
// solver and its callers goes through one of these.
struct Tolerances {
  double feasibility = 1e-7;
  double optimality = 1e-7;
  double integrality = 1e-7;
};

enum class Comparator { LessEqual, GreaterEqual, Equal };

struct Term {
  int var = 0;
  double coef = 0.0;
};

struct Constraint {
  std::vector<Term> terms;
  Comparator cmp = Comparator::LessEqual;
  double rhs = 0.0;
  std::string name;
};

// maximize objective . x  subject to rows and lower <= x <= upper.
struct LpProblem {
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> objective;
  std::vector<std::string> names;
  std::vector<Constraint> rows;

  int add_variable(double lo, double hi, double obj = 0.0, std::string name = {});
  int add_constraint(std::vector<Term> terms, Comparator cmp, double rhs, std::string name = {});
  int num_variables() const { return static_cast<int>(lower.size()); }
  int num_rows() const { return static_cast<int>(rows.size()); }
};

struct MilpProblem {
  LpProblem lp;
  std::vector<int> binaries;

  int add_binary(std::string name = {});
};

enum class Status { Optimal, Infeasible, Unbounded, NodeLimitExceeded };

const char* to_string(Status status) noexcept;

struct Solution {
  Status status = Status::Infeasible;
  double objective = 0.0;
  Eigen::VectorXd x;
  std::vector<int> binary_values;   // MILP only, parallel to MilpProblem::binaries
  long nodes = 0;                   // LPs solved (enumeration) or B&B nodes
  long iterations = 0;              // simplex pivots + bound flips
  double bound = kInf;              // best known upper bound (NodeLimitExceeded)
};

struct SolverOptions {
  Tolerances tol;
  long max_iterations = 0;          // 0 picks a size-dependent cap
  int refactor_interval = 64;
  int stall_threshold = 100;        // consecutive degenerate pivots before Bland's rule
};

// Bounded-variable revised primal simplex with a composite phase 1
// (sum of infeasibilities) so any basis can serve as a warm start. The basis
// is factorized with a sparse LU and updated with product-form etas.
class Simplex {
 public:
  explicit Simplex(const LpProblem& problem, SolverOptions options = {});
  ~Simplex();
  Simplex(Simplex&&) noexcept;
  Simplex& operator=(Simplex&&) noexcept;

  void set_bounds(int var, double lo, double hi);
  double lower(int var) const;
  double upper(int var) const;

  // Re-solves from the current basis. Throws Error(NumericalBreakdown) when the
  // safeguards cannot restore a consistent basis.
  Status solve();

  double objective() const;
  Eigen::VectorXd primal() const;
  long iterations() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

Solution lp_solve(const LpProblem& problem, const SolverOptions& options = {});

struct MilpConfig {
  int enum_threshold = 16;          // exhaustive enumeration when #binaries <= this
  long node_limit = 1'000'000;
  SolverOptions lp;
};

// Exact in both paths: exhaustive enumeration over binary assignments, or
// best-first branch and bound (ties broken by lowest node id).
Solution milp_solve(const MilpProblem& problem, const MilpConfig& config = {});

// Independent re-verification of a point: returns one message per violated
// bound, row or integrality requirement.
std::vector<std::string> check_point(const MilpProblem& problem, const Eigen::VectorXd& x, const Tolerances& tol = {});
std::vector<std::string> check_point(const LpProblem& problem, const Eigen::VectorXd& x, const Tolerances& tol = {});

double evaluate_objective(const LpProblem& problem, const Eigen::VectorXd& x);

// Line-oriented text dump for debugging; see README for the format.
void write_problem(std::ostream& out, const MilpProblem& problem);
MilpProblem read_problem(std::istream& in);

}  // namespace prefplan::lp
