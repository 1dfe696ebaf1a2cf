#include "prefplan/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "prefplan/error.hpp"

namespace prefplan {

using nlohmann::json;

namespace {

constexpr double kStochasticTol = 1e-9;

int lookup(const std::vector<std::string>& names, const std::string& name, const char* what) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw Error(ErrorKind::ParseError, std::string("unknown ") + what + " '" + name + "'");
  return static_cast<int>(it - names.begin());
}

}  // namespace

std::optional<int> LabeledMdp::state_index(const std::string& name) const {
  auto it = std::find(states.begin(), states.end(), name);
  if (it == states.end()) return std::nullopt;
  return static_cast<int>(it - states.begin());
}

const char* to_string(IssueKind kind) noexcept {
  switch (kind) {
    case IssueKind::Shape: return "Shape";
    case IssueKind::StochasticityViolation: return "StochasticityViolation";
    case IssueKind::NegativeProbability: return "NegativeProbability";
    case IssueKind::InitialDistribution: return "InitialDistribution";
    case IssueKind::UnknownProposition: return "UnknownProposition";
    case IssueKind::NoEnabledAction: return "NoEnabledAction";
  }
  return "Unknown";
}

std::vector<Issue> validate_mdp(const LabeledMdp& mdp) {
  std::vector<Issue> issues;
  const int n = mdp.num_states();
  const int m = mdp.num_actions();
  if (mdp.initial.size() != n || static_cast<int>(mdp.kernel.size()) != n ||
      static_cast<int>(mdp.labels.size()) != n) {
    issues.push_back({IssueKind::Shape, "initial, kernel and labels must have one entry per state"});
    return issues;
  }
  for (int s = 0; s < n; ++s) {
    if (static_cast<int>(mdp.kernel[s].size()) != m) {
      issues.push_back({IssueKind::Shape, "state '" + mdp.states[s] + "' does not list every action"});
      continue;
    }
    bool any = false;
    for (int a = 0; a < m; ++a) {
      const auto& row = mdp.kernel[s][a];
      if (row.empty()) continue;
      any = true;
      double total = 0.0;
      for (const auto& o : row) {
        if (o.target < 0 || o.target >= n) {
          issues.push_back({IssueKind::Shape, "(" + mdp.states[s] + ", " + mdp.actions[a] + ") targets a missing state"});
          continue;
        }
        if (o.prob < 0.0) {
          issues.push_back({IssueKind::NegativeProbability,
                            "(" + mdp.states[s] + ", " + mdp.actions[a] + ") has a negative probability"});
        }
        total += o.prob;
      }
      if (std::abs(total - 1.0) > kStochasticTol) {
        issues.push_back({IssueKind::StochasticityViolation,
                          "(" + mdp.states[s] + ", " + mdp.actions[a] + ") sums to " + std::to_string(total)});
      }
    }
    if (!any) issues.push_back({IssueKind::NoEnabledAction, "state '" + mdp.states[s] + "' has no enabled action"});
    for (const auto& p : mdp.labels[s]) {
      if (std::find(mdp.propositions.begin(), mdp.propositions.end(), p) == mdp.propositions.end()) {
        issues.push_back({IssueKind::UnknownProposition, "label of '" + mdp.states[s] + "' uses undeclared '" + p + "'"});
      }
    }
  }
  if ((mdp.initial.array() < 0.0).any() || std::abs(mdp.initial.sum() - 1.0) > kStochasticTol) {
    issues.push_back({IssueKind::InitialDistribution, "initial distribution is not a probability vector"});
  }
  return issues;
}

LabeledMdp load_mdp(const json& doc) {
  try {
    LabeledMdp mdp;
    mdp.states = doc.at("states").get<std::vector<std::string>>();
    mdp.actions = doc.at("actions").get<std::vector<std::string>>();
    mdp.propositions = doc.value("propositions", std::vector<std::string>{});
    const int n = mdp.num_states();
    mdp.initial = Eigen::VectorXd::Zero(n);
    for (const auto& [name, p] : doc.at("initial").items()) {
      mdp.initial(lookup(mdp.states, name, "state")) += p.get<double>();
    }
    mdp.kernel.assign(n, std::vector<std::vector<Outcome>>(mdp.num_actions()));
    for (const auto& t : doc.at("transitions")) {
      const int s = lookup(mdp.states, t.at("from").get<std::string>(), "state");
      const int a = lookup(mdp.actions, t.at("action").get<std::string>(), "action");
      const int to = lookup(mdp.states, t.at("to").get<std::string>(), "state");
      mdp.kernel[s][a].push_back({to, t.at("prob").get<double>()});
    }
    mdp.labels.assign(n, {});
    if (doc.contains("labels")) {
      for (const auto& [name, props] : doc.at("labels").items()) {
        auto& label = mdp.labels[lookup(mdp.states, name, "state")];
        label = props.get<std::vector<std::string>>();
        std::sort(label.begin(), label.end());
        label.erase(std::unique(label.begin(), label.end()), label.end());
      }
    }
    return mdp;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("mdp document: ") + e.what());
  }
}

LabeledMdp load_mdp_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return load_mdp(doc);
}

json to_json(const LabeledMdp& mdp) {
  json doc;
  doc["states"] = mdp.states;
  doc["actions"] = mdp.actions;
  doc["propositions"] = mdp.propositions;
  json initial = json::object();
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (mdp.initial(s) != 0.0) initial[mdp.states[s]] = mdp.initial(s);
  }
  doc["initial"] = std::move(initial);
  json transitions = json::array();
  for (int s = 0; s < mdp.num_states(); ++s) {
    for (int a = 0; a < mdp.num_actions(); ++a) {
      for (const auto& o : mdp.kernel[s][a]) {
        transitions.push_back(
            {{"from", mdp.states[s]}, {"action", mdp.actions[a]}, {"to", mdp.states[o.target]}, {"prob", o.prob}});
      }
    }
  }
  doc["transitions"] = std::move(transitions);
  json labels = json::object();
  for (int s = 0; s < mdp.num_states(); ++s) {
    if (!mdp.labels[s].empty()) labels[mdp.states[s]] = mdp.labels[s];
  }
  doc["labels"] = std::move(labels);
  return doc;
}

}  // namespace prefplan
