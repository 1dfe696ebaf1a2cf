#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "prefplan/error.hpp"
#include "prefplan/lp.hpp"

namespace prefplan::lp {

int LpProblem::add_variable(double lo, double hi, double obj, std::string name) {
  lower.push_back(lo);
  upper.push_back(hi);
  objective.push_back(obj);
  names.push_back(std::move(name));
  return num_variables() - 1;
}

int LpProblem::add_constraint(std::vector<Term> terms, Comparator cmp, double rhs, std::string name) {
  rows.push_back({std::move(terms), cmp, rhs, std::move(name)});
  return num_rows() - 1;
}

int MilpProblem::add_binary(std::string name) {
  const int v = lp.add_variable(0.0, 1.0, 0.0, std::move(name));
  binaries.push_back(v);
  return v;
}

const char* to_string(Status status) noexcept {
  switch (status) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::NodeLimitExceeded: return "node-limit";
  }
  return "unknown";
}

namespace {

// Internal tolerances are tighter than the reporting ones in Tolerances so
// that a solution accepted here passes the independent re-check.
constexpr double kPrimalTol = 1e-9;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr int kMaxBasisResets = 4;

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using SpRowMat = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

struct Eta {
  int row = 0;
  double pivot = 1.0;
  std::vector<int> index;
  std::vector<double> value;
};

}  // namespace

struct Simplex::Impl {
  int n = 0;  // structural columns
  int m = 0;  // rows (one logical column each)
  SpMat a;
  Eigen::VectorXd lo, hi, cost, x;
  std::vector<int> head;  // basic variable per row position
  std::vector<int> pos;   // row position of a basic variable, -1 if nonbasic
  SolverOptions opt;

  mutable Eigen::SparseLU<SpMat, Eigen::COLAMDOrdering<int>> lu;
  bool factored = false;
  std::vector<Eta> etas;
  long iterations = 0;
  int resets = 0;

  Impl(const LpProblem& p, SolverOptions o) : opt(o) {
    n = p.num_variables();
    m = p.num_rows();
    lo.resize(n + m);
    hi.resize(n + m);
    cost = Eigen::VectorXd::Zero(n + m);
    for (int j = 0; j < n; ++j) {
      lo(j) = p.lower[j];
      hi(j) = p.upper[j];
      cost(j) = p.objective[j];
      if (lo(j) > hi(j)) {
        // Contradictory bounds: keep them, phase 1 will report infeasibility.
      }
    }
    std::vector<Eigen::Triplet<double>> trip;
    for (int i = 0; i < m; ++i) {
      const auto& row = p.rows[i];
      for (const auto& t : row.terms) {
        if (t.var < 0 || t.var >= n) throw Error(ErrorKind::InvalidArgument, "constraint references a missing variable");
        if (t.coef != 0.0) trip.emplace_back(i, t.var, t.coef);
      }
      switch (row.cmp) {
        case Comparator::LessEqual: lo(n + i) = -kInf; hi(n + i) = row.rhs; break;
        case Comparator::GreaterEqual: lo(n + i) = row.rhs; hi(n + i) = kInf; break;
        case Comparator::Equal: lo(n + i) = row.rhs; hi(n + i) = row.rhs; break;
      }
    }
    a.resize(m, n);
    a.setFromTriplets(trip.begin(), trip.end());  // sums duplicates
    a.makeCompressed();

    x = Eigen::VectorXd::Zero(n + m);
    for (int j = 0; j < n + m; ++j) x(j) = rest_value(j, true);
    head.resize(m);
    pos.assign(n + m, -1);
    for (int i = 0; i < m; ++i) {
      head[i] = n + i;
      pos[n + i] = i;
    }
    crash();
  }

  double rest_value(int j, bool prefer_lower) const {
    const bool lo_finite = std::isfinite(lo(j));
    const bool hi_finite = std::isfinite(hi(j));
    if (lo_finite && (prefer_lower || !hi_finite)) return lo(j);
    if (hi_finite) return hi(j);
    return 0.0;
  }

  // Lower-triangular crash over equality rows: repeatedly pick a structural
  // column with exactly one nonzero among the rows still covered by fixed
  // logicals. The resulting basis is triangular after permutation.
  void crash() {
    if (m == 0) return;
    SpRowMat rows = a;
    std::vector<char> covered(m, 1);
    for (int i = 0; i < m; ++i) {
      if (lo(n + i) == hi(n + i)) covered[i] = 0;
    }
    std::vector<int> count(n, 0);
    std::vector<double> colmax(n, 0.0);
    for (int j = 0; j < n; ++j) {
      for (SpMat::InnerIterator it(a, j); it; ++it) {
        colmax[j] = std::max(colmax[j], std::abs(it.value()));
        if (!covered[it.row()]) ++count[j];
      }
    }
    std::deque<int> queue;
    for (int j = 0; j < n; ++j) {
      if (count[j] == 1 && lo(j) < hi(j)) queue.push_back(j);
    }
    while (!queue.empty()) {
      const int j = queue.front();
      queue.pop_front();
      if (count[j] != 1 || pos[j] >= 0) continue;
      int r = -1;
      double pivot = 0.0;
      for (SpMat::InnerIterator it(a, j); it; ++it) {
        if (!covered[it.row()]) {
          r = it.row();
          pivot = it.value();
        }
      }
      if (r < 0 || std::abs(pivot) < 1e-3 * colmax[j]) continue;
      pos[head[r]] = -1;
      head[r] = j;
      pos[j] = r;
      covered[r] = 1;
      for (SpRowMat::InnerIterator it(rows, r); it; ++it) {
        const int k = static_cast<int>(it.col());
        if (--count[k] == 1 && pos[k] < 0 && lo(k) < hi(k)) queue.push_back(k);
      }
    }
  }

  template <typename F>
  void for_column(int j, F&& f) const {
    if (j < n) {
      for (SpMat::InnerIterator it(a, j); it; ++it) f(static_cast<int>(it.row()), it.value());
    } else {
      f(j - n, -1.0);
    }
  }

  double column_dot(int j, const Eigen::VectorXd& v) const {
    if (j >= n) return -v(j - n);
    double s = 0.0;
    for (SpMat::InnerIterator it(a, j); it; ++it) s += it.value() * v(it.row());
    return s;
  }

  void reset_to_slack_basis() {
    for (int j = 0; j < n + m; ++j) pos[j] = -1;
    for (int i = 0; i < m; ++i) {
      head[i] = n + i;
      pos[n + i] = i;
    }
    for (int j = 0; j < n; ++j) x(j) = std::clamp(x(j), std::isfinite(lo(j)) ? lo(j) : x(j), std::isfinite(hi(j)) ? hi(j) : x(j));
    for (int j = 0; j < n; ++j) {
      if (x(j) != lo(j) && x(j) != hi(j)) x(j) = rest_value(j, true);
    }
  }

  bool factorize() {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(m) * 4);
    for (int k = 0; k < m; ++k) {
      for_column(head[k], [&](int r, double v) { trip.emplace_back(r, k, v); });
    }
    SpMat b(m, m);
    b.setFromTriplets(trip.begin(), trip.end());
    b.makeCompressed();
    lu.analyzePattern(b);
    lu.factorize(b);
    etas.clear();
    return lu.info() == Eigen::Success;
  }

  void refactor() {
    if (m == 0) {
      factored = true;
      return;
    }
    while (!factorize()) {
      if (++resets > kMaxBasisResets) throw Error(ErrorKind::NumericalBreakdown, "basis stays singular after resets");
      reset_to_slack_basis();
    }
    factored = true;
    compute_basic_values();
  }

  void ftran(Eigen::VectorXd& v) const {
    v = lu.solve(v).eval();
    for (const auto& e : etas) {
      const double xr = v(e.row) / e.pivot;
      v(e.row) = xr;
      if (xr == 0.0) continue;
      for (std::size_t k = 0; k < e.index.size(); ++k) v(e.index[k]) -= e.value[k] * xr;
    }
  }

  void btran(Eigen::VectorXd& v) const {
    for (auto it = etas.rbegin(); it != etas.rend(); ++it) {
      double s = v(it->row);
      for (std::size_t k = 0; k < it->index.size(); ++k) s -= v(it->index[k]) * it->value[k];
      v(it->row) = s / it->pivot;
    }
    v = lu.transpose().solve(v).eval();
  }

  void compute_basic_values() {
    if (m == 0) return;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
    for (int j = 0; j < n + m; ++j) {
      if (pos[j] >= 0 || x(j) == 0.0) continue;
      const double xj = x(j);
      for_column(j, [&](int r, double v) { rhs(r) -= v * xj; });
    }
    ftran(rhs);
    for (int k = 0; k < m; ++k) x(head[k]) = rhs(k);
  }

  // +1 below lower, -1 above upper, 0 feasible.
  int infeasibility(int j) const {
    if (x(j) < lo(j) - kPrimalTol) return 1;
    if (x(j) > hi(j) + kPrimalTol) return -1;
    return 0;
  }

  double max_infeasibility() const {
    double worst = 0.0;
    for (int k = 0; k < m; ++k) {
      const int j = head[k];
      worst = std::max({worst, lo(j) - x(j), x(j) - hi(j)});
    }
    return worst;
  }

  long iteration_cap() const {
    if (opt.max_iterations > 0) return opt.max_iterations;
    return 50L * (n + m) + 20000;
  }

  Status solve() {
    if (m == 0) return solve_without_rows();
    if (!factored) refactor();
    else compute_basic_values();

    Eigen::VectorXd cb(m), pi(m), alpha(m);
    int degenerate_run = 0;
    bool confirmed = false;
    const long cap = iterations + iteration_cap();

    while (true) {
      if (iterations > cap) throw Error(ErrorKind::NumericalBreakdown, "simplex iteration limit reached");
      if (static_cast<int>(etas.size()) >= opt.refactor_interval) refactor();

      bool phase1 = false;
      for (int k = 0; k < m; ++k) {
        if (infeasibility(head[k]) != 0) {
          phase1 = true;
          break;
        }
      }
      for (int k = 0; k < m; ++k) cb(k) = phase1 ? infeasibility(head[k]) : cost(head[k]);
      pi = cb;
      btran(pi);

      const bool bland = degenerate_run > opt.stall_threshold;
      int enter = -1;
      int dir = 0;
      double best = 0.0;
      for (int j = 0; j < n + m; ++j) {
        if (pos[j] >= 0 || lo(j) == hi(j)) continue;
        const double d = (phase1 ? 0.0 : cost(j)) - column_dot(j, pi);
        int jdir = 0;
        if (d > kDualTol && x(j) < hi(j)) jdir = 1;
        else if (d < -kDualTol && x(j) > lo(j)) jdir = -1;
        if (jdir == 0) continue;
        if (bland) {
          enter = j;
          dir = jdir;
          break;
        }
        if (std::abs(d) > best) {
          best = std::abs(d);
          enter = j;
          dir = jdir;
        }
      }

      if (enter < 0) {
        if (!confirmed) {
          // Recompute everything from a fresh factorization before trusting
          // the verdict.
          refactor();
          confirmed = true;
          continue;
        }
        if (phase1) return Status::Infeasible;
        return Status::Optimal;
      }
      confirmed = false;

      alpha.setZero();
      for_column(enter, [&](int r, double v) { alpha(r) = v; });
      ftran(alpha);

      // Ratio test (Harris two-pass; Bland picks the lowest index on ties).
      double theta_max = kInf;
      for (int k = 0; k < m; ++k) {
        const double delta = -dir * alpha(k);
        if (std::abs(delta) < kPivotTol) continue;
        const int b = head[k];
        double dist = 0.0;
        if (!blocking_distance(b, delta, dist)) continue;
        theta_max = std::min(theta_max, (dist + kPrimalTol) / std::abs(delta));
      }
      int leave = -1;
      double theta = kInf;
      double leave_target = 0.0;
      if (std::isfinite(theta_max)) {
        double best_pivot = 0.0;
        double best_ratio = kInf;
        for (int k = 0; k < m; ++k) {
          const double delta = -dir * alpha(k);
          if (std::abs(delta) < kPivotTol) continue;
          const int b = head[k];
          double dist = 0.0;
          if (!blocking_distance(b, delta, dist)) continue;
          const double ratio = std::max(dist, 0.0) / std::abs(delta);
          if (bland) {
            if (ratio < best_ratio - 1e-12 || (ratio <= best_ratio + 1e-12 && (leave < 0 || b < head[leave]))) {
              if (ratio < best_ratio - 1e-12) best_ratio = ratio;
              leave = k;
            }
          } else if (ratio <= theta_max && std::abs(delta) > best_pivot) {
            best_pivot = std::abs(delta);
            leave = k;
          }
        }
        if (leave >= 0) {
          const double delta = -dir * alpha(leave);
          const int b = head[leave];
          double dist = 0.0;
          blocking_distance(b, delta, dist);
          theta = std::max(dist, 0.0) / std::abs(delta);
          leave_target = delta < 0 ? (x(b) > hi(b) + kPrimalTol ? hi(b) : lo(b))
                                   : (x(b) < lo(b) - kPrimalTol ? lo(b) : hi(b));
        }
      }

      const double range = hi(enter) - lo(enter);
      const bool flip = std::isfinite(range) && range <= theta;
      if (!flip && leave < 0) {
        if (phase1) throw Error(ErrorKind::NumericalBreakdown, "phase 1 found no blocking variable");
        return Status::Unbounded;
      }
      if (flip) theta = range;

      if (theta <= 1e-12) ++degenerate_run;
      else degenerate_run = 0;

      for (int k = 0; k < m; ++k) {
        if (alpha(k) != 0.0) x(head[k]) -= dir * theta * alpha(k);
      }
      ++iterations;
      if (flip) {
        x(enter) = dir > 0 ? hi(enter) : lo(enter);
        continue;
      }
      x(enter) += dir * theta;
      const int out = head[leave];
      x(out) = leave_target;
      head[leave] = enter;
      pos[enter] = leave;
      pos[out] = -1;

      Eta e;
      e.row = leave;
      e.pivot = alpha(leave);
      for (int k = 0; k < m; ++k) {
        if (k != leave && std::abs(alpha(k)) > kDropTol) {
          e.index.push_back(k);
          e.value.push_back(alpha(k));
        }
      }
      etas.push_back(std::move(e));
      if (std::abs(alpha(leave)) < 1e-7) refactor();
    }
  }

  // Distance a basic variable can travel at rate `delta` before it blocks.
  // Feasible variables block at the bound they move toward; infeasible ones
  // block where they regain feasibility, and never when moving away.
  bool blocking_distance(int b, double delta, double& dist) const {
    const int inf = infeasibility(b);
    if (delta < 0) {
      if (inf == -1) {
        dist = x(b) - hi(b);
        return true;
      }
      if (inf == 1 || !std::isfinite(lo(b))) return false;
      dist = x(b) - lo(b);
      return true;
    }
    if (inf == 1) {
      dist = lo(b) - x(b);
      return true;
    }
    if (inf == -1 || !std::isfinite(hi(b))) return false;
    dist = hi(b) - x(b);
    return true;
  }

  Status solve_without_rows() {
    for (int j = 0; j < n; ++j) {
      if (lo(j) > hi(j) + kPrimalTol) return Status::Infeasible;
    }
    for (int j = 0; j < n; ++j) {
      if (cost(j) > 0) {
        if (!std::isfinite(hi(j))) return Status::Unbounded;
        x(j) = hi(j);
      } else if (cost(j) < 0) {
        if (!std::isfinite(lo(j))) return Status::Unbounded;
        x(j) = lo(j);
      } else {
        x(j) = rest_value(j, true);
      }
    }
    return Status::Optimal;
  }
};

Simplex::Simplex(const LpProblem& problem, SolverOptions options)
    : impl_(std::make_unique<Impl>(problem, options)) {}
Simplex::~Simplex() = default;
Simplex::Simplex(Simplex&&) noexcept = default;
Simplex& Simplex::operator=(Simplex&&) noexcept = default;

void Simplex::set_bounds(int var, double lo, double hi) {
  auto& s = *impl_;
  const bool was_upper = s.pos[var] < 0 && s.x(var) == s.hi(var) && s.x(var) != s.lo(var);
  s.lo(var) = lo;
  s.hi(var) = hi;
  if (s.pos[var] < 0) s.x(var) = s.rest_value(var, !was_upper);
}

double Simplex::lower(int var) const { return impl_->lo(var); }
double Simplex::upper(int var) const { return impl_->hi(var); }

Status Simplex::solve() { return impl_->solve(); }

double Simplex::objective() const { return impl_->cost.head(impl_->n).dot(impl_->x.head(impl_->n)); }

Eigen::VectorXd Simplex::primal() const { return impl_->x.head(impl_->n); }

long Simplex::iterations() const { return impl_->iterations; }

double evaluate_objective(const LpProblem& problem, const Eigen::VectorXd& x) {
  double z = 0.0;
  for (int j = 0; j < problem.num_variables(); ++j) z += problem.objective[j] * x(j);
  return z;
}

std::vector<std::string> check_point(const LpProblem& problem, const Eigen::VectorXd& x, const Tolerances& tol) {
  std::vector<std::string> out;
  if (x.size() != problem.num_variables()) {
    out.push_back("point has wrong dimension");
    return out;
  }
  for (int j = 0; j < problem.num_variables(); ++j) {
    if (x(j) < problem.lower[j] - tol.feasibility || x(j) > problem.upper[j] + tol.feasibility) {
      out.push_back("variable " + std::to_string(j) + " outside its bounds");
    }
  }
  for (int i = 0; i < problem.num_rows(); ++i) {
    const auto& row = problem.rows[i];
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x(t.var);
    const bool ok = row.cmp == Comparator::LessEqual      ? act <= row.rhs + tol.feasibility
                    : row.cmp == Comparator::GreaterEqual ? act >= row.rhs - tol.feasibility
                                                          : std::abs(act - row.rhs) <= tol.feasibility;
    if (!ok) out.push_back("row " + std::to_string(i) + (row.name.empty() ? "" : " (" + row.name + ")") + " violated");
  }
  return out;
}

std::vector<std::string> check_point(const MilpProblem& problem, const Eigen::VectorXd& x, const Tolerances& tol) {
  auto out = check_point(problem.lp, x, tol);
  for (int b : problem.binaries) {
    if (std::min(std::abs(x(b)), std::abs(x(b) - 1.0)) > tol.integrality) {
      out.push_back("binary " + std::to_string(b) + " is fractional");
    }
  }
  return out;
}

Solution lp_solve(const LpProblem& problem, const SolverOptions& options) {
  Simplex simplex(problem, options);
  Solution sol;
  sol.status = simplex.solve();
  sol.iterations = simplex.iterations();
  sol.nodes = 1;
  if (sol.status == Status::Optimal) {
    sol.x = simplex.primal();
    sol.objective = evaluate_objective(problem, sol.x);
    const auto violations = check_point(problem, sol.x, options.tol);
    if (!violations.empty()) {
      throw Error(ErrorKind::NumericalBreakdown, "optimal point fails re-verification: " + violations.front());
    }
  }
  return sol;
}

}  // namespace prefplan::lp
