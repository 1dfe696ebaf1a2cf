#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "prefplan/automaton.hpp"
#include "prefplan/error.hpp"

namespace prefplan {

// Probability mass per automaton state, indexed like PreferenceAutomaton
// states. Masses are nonnegative and sum to one.
using TerminalDistribution = Eigen::VectorXd;

// General preference formula. Leaves carry a resolved copy of their atomic
// preference so the tree can be evaluated without the automaton at hand.
struct Gpf {
  enum class Kind { Leaf, And, Or, Lex };

  Kind kind = Kind::Leaf;
  std::string name;              // leaves only
  AtomicPreference apf;          // leaves only
  std::vector<Gpf> children;     // And / Or / Lex

  static Gpf leaf(std::string name, AtomicPreference apf);
  static Gpf node(Kind kind, std::vector<Gpf> children);

  bool is_leaf() const { return kind == Kind::Leaf; }
};

// Grammar:
//   gpf  := "lex(" gpf ("," gpf)+ ")" | or
//   or   := and ("|" and)*
//   and  := atom ("&" atom)*
//   atom := NAME | "(" or ")"
// & binds tighter than |. A chain "a & b & c" becomes one n-ary node.
Gpf parse_gpf(std::string_view text, const PreferenceAutomaton& automaton);

std::string to_string(const Gpf& gpf);

// Leaf names in first-occurrence order, without duplicates.
std::vector<std::string> leaf_names(const Gpf& gpf);

bool contains_lex(const Gpf& gpf);

// Throws InvalidArgument if the distribution is not a probability vector
// within 1e-9.
void check_distribution(const TerminalDistribution& dist, int num_states);

template <typename Derived>
double set_mass(const StateSet& set, const Eigen::MatrixBase<Derived>& dist) {
  double mass = 0.0;
  for (int q : set) mass += dist(q);
  return mass;
}

// Largest index i >= 1 with Pr(X_i) >= Pr(X_{i-1}) (strict: >) yields
// Pr(X_i); no such index yields 0.
template <typename Derived>
double eval_apf(const AtomicPreference& apf, const Eigen::MatrixBase<Derived>& dist) {
  const int n = apf.length();
  for (int i = n; i >= 1; --i) {
    const double hi = set_mass(apf.sets[i], dist);
    const double lo = set_mass(apf.sets[i - 1], dist);
    if (apf.strict ? hi > lo : hi >= lo) return hi;
  }
  return 0.0;
}

template <typename Derived>
double eval_gpf(const Gpf& gpf, const Eigen::MatrixBase<Derived>& dist) {
  switch (gpf.kind) {
    case Gpf::Kind::Leaf:
      return eval_apf(gpf.apf, dist);
    case Gpf::Kind::And: {
      double v = 1.0;
      for (const auto& c : gpf.children) v = std::min(v, eval_gpf(c, dist));
      return v;
    }
    case Gpf::Kind::Or: {
      double v = 0.0;
      for (const auto& c : gpf.children) v = std::max(v, eval_gpf(c, dist));
      return v;
    }
    case Gpf::Kind::Lex:
      break;
  }
  throw Error(ErrorKind::LexNotEvaluable, "lex(...) has no pointwise value; plan it with plan_lex");
}

}  // namespace prefplan
