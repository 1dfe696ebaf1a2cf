#include "prefplan/product.hpp"

#include <deque>

#include "prefplan/error.hpp"

namespace prefplan {

namespace {

long long key(int s, int q, int num_q) { return static_cast<long long>(s) * num_q + q; }

}  // namespace

std::optional<int> ProductMdp::find(int mdp_state, int automaton_state) const {
  auto it = index_.find(key(mdp_state, automaton_state, num_automaton_states()));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int ProductMdp::num_enabled(int x) const {
  int n = 0;
  for (const auto& row : kernel_[x]) n += row.empty() ? 0 : 1;
  return n;
}

double ProductMdp::transition(int from, int a, int to) const {
  double p = 0.0;
  for (const auto& o : kernel_[from][a]) {
    if (o.target == to) p += o.prob;
  }
  return p;
}

std::string ProductMdp::state_label(int x) const {
  const auto& st = states_[x];
  return "(" + mdp_state_names_[st.mdp_state] + "," + automaton_state_names_[st.automaton_state] + ")";
}

ProductMdp product(const LabeledMdp& mdp, const PreferenceAutomaton& automaton) {
  const auto issues = validate_mdp(mdp);
  if (!issues.empty()) throw Error(ErrorKind::InvalidModel, issues.front().message);

  // Every label must be a declared symbol with transitions.
  std::vector<Symbol> label_symbol(mdp.num_states());
  for (int s = 0; s < mdp.num_states(); ++s) {
    try {
      label_symbol[s] = automaton.symbol(mdp.labels[s]);
    } catch (const Error& e) {
      throw Error(ErrorKind::SymbolMismatch, "label of '" + mdp.states[s] + "': " + e.what());
    }
    if (!automaton.has_symbol(label_symbol[s])) {
      throw Error(ErrorKind::SymbolMismatch, "label of '" + mdp.states[s] + "' has no transition in the automaton");
    }
  }

  ProductMdp p;
  p.mdp_state_names_ = mdp.states;
  p.automaton_state_names_ = automaton.state_names();
  p.action_names_ = mdp.actions;
  const int num_q = automaton.num_states();

  std::deque<int> frontier;
  auto intern = [&](int s, int q) {
    const long long k = key(s, q, num_q);
    auto [it, inserted] = p.index_.emplace(k, static_cast<int>(p.states_.size()));
    if (inserted) {
      p.states_.push_back({s, q});
      frontier.push_back(it->second);
    }
    return it->second;
  };

  std::vector<std::pair<int, double>> init;
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.initial(s) > 0.0) {
      const int q = automaton.step(automaton.initial(), label_symbol[s]);
      init.emplace_back(intern(s, q), mdp.initial(s));
    }
  }

  while (!frontier.empty()) {
    const int x = frontier.front();
    frontier.pop_front();
    const auto [s, q] = p.states_[x];
    std::vector<std::vector<Outcome>> rows(mdp.num_actions());
    for (int a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& o : mdp.kernel[s][a]) {
        if (o.prob <= 0.0) continue;
        const int q_next = automaton.step(q, label_symbol[o.target]);
        rows[a].push_back({intern(o.target, q_next), o.prob});
      }
    }
    if (static_cast<int>(p.kernel_.size()) <= x) p.kernel_.resize(x + 1);
    p.kernel_[x] = std::move(rows);
  }
  p.kernel_.resize(p.states_.size());

  p.initial_ = Eigen::VectorXd::Zero(p.num_states());
  for (const auto& [x, mass] : init) p.initial_(x) += mass;
  return p;
}

std::vector<std::vector<int>> reachable_layers(const ProductMdp& product, int horizon) {
  std::vector<std::vector<int>> layers(std::max(horizon, 0));
  if (horizon <= 0) return layers;
  std::vector<char> mark(product.num_states(), 0);
  for (int x = 0; x < product.num_states(); ++x) {
    if (product.initial()(x) > 0.0) layers[0].push_back(x);
  }
  for (int t = 1; t < horizon; ++t) {
    std::fill(mark.begin(), mark.end(), 0);
    for (int x : layers[t - 1]) {
      for (int a = 0; a < product.num_actions(); ++a) {
        for (const auto& o : product.successors(x, a)) mark[o.target] = 1;
      }
    }
    for (int x = 0; x < product.num_states(); ++x) {
      if (mark[x]) layers[t].push_back(x);
    }
  }
  return layers;
}

}  // namespace prefplan
