#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "prefplan/automaton.hpp"
#include "prefplan/mdp.hpp"

namespace prefplan {

struct ProductState {
  int mdp_state = 0;
  int automaton_state = 0;
};

// M (x) A restricted to the fragment reachable from the support of the
// initial distribution. Product states are numbered in breadth-first order.
class ProductMdp {
 public:
  int num_states() const { return static_cast<int>(states_.size()); }
  int num_actions() const { return static_cast<int>(action_names_.size()); }
  int num_automaton_states() const { return static_cast<int>(automaton_state_names_.size()); }

  const ProductState& state(int x) const { return states_[x]; }
  const std::vector<ProductState>& states() const { return states_; }
  std::optional<int> find(int mdp_state, int automaton_state) const;

  const Eigen::VectorXd& initial() const { return initial_; }
  const std::vector<Outcome>& successors(int x, int a) const { return kernel_[x][a]; }
  bool enabled(int x, int a) const { return !kernel_[x][a].empty(); }
  int num_enabled(int x) const;

  // Delta((s',q') | (s,q), a) for product state indices.
  double transition(int from, int a, int to) const;

  const std::vector<std::string>& mdp_state_names() const { return mdp_state_names_; }
  const std::vector<std::string>& automaton_state_names() const { return automaton_state_names_; }
  const std::vector<std::string>& action_names() const { return action_names_; }
  std::string state_label(int x) const;

  friend ProductMdp product(const LabeledMdp& mdp, const PreferenceAutomaton& automaton);

 private:
  std::vector<ProductState> states_;
  std::unordered_map<long long, int> index_;
  Eigen::VectorXd initial_;
  std::vector<std::vector<std::vector<Outcome>>> kernel_;
  std::vector<std::string> mdp_state_names_;
  std::vector<std::string> automaton_state_names_;
  std::vector<std::string> action_names_;
};

// Throws InvalidModel when the MDP fails validation and SymbolMismatch when
// some label has no transition in the automaton's alphabet.
ProductMdp product(const LabeledMdp& mdp, const PreferenceAutomaton& automaton);

// Product states reachable at exactly stage t (t = 0 is the initial support).
std::vector<std::vector<int>> reachable_layers(const ProductMdp& product, int horizon);

}  // namespace prefplan
