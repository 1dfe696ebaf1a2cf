#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace prefplan {

struct Outcome {
  int target = 0;
  double prob = 0.0;
};

// M = <S, A, nu, P, AP, L>. kernel[s][a] lists the successors of (s, a);
// an empty list means the action is not enabled in s.
struct LabeledMdp {
  std::vector<std::string> states;
  std::vector<std::string> actions;
  Eigen::VectorXd initial;
  std::vector<std::vector<std::vector<Outcome>>> kernel;
  std::vector<std::string> propositions;
  std::vector<std::vector<std::string>> labels;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_actions() const { return static_cast<int>(actions.size()); }
  bool enabled(int s, int a) const { return !kernel[s][a].empty(); }
  std::optional<int> state_index(const std::string& name) const;
};

enum class IssueKind {
  Shape,
  StochasticityViolation,
  NegativeProbability,
  InitialDistribution,
  UnknownProposition,
  NoEnabledAction,
};

struct Issue {
  IssueKind kind;
  std::string message;
};

const char* to_string(IssueKind kind) noexcept;

// Report-style check; an empty result means every invariant holds.
std::vector<Issue> validate_mdp(const LabeledMdp& mdp);

LabeledMdp load_mdp(const nlohmann::json& doc);
LabeledMdp load_mdp_file(const std::filesystem::path& path);
nlohmann::json to_json(const LabeledMdp& mdp);

enum class Heading { North = 0, East = 1, South = 2, West = 3 };

// Row = chosen heading, column = realized heading, both in N, E, S, W order.
Eigen::Matrix4d slip_dynamics();

// Cells are row-major from the top-left corner; row 0 is the top row.
struct GridworldSpec {
  int width = 5;
  int height = 5;
  int initial_cell = 0;
  std::map<int, std::string> labels;
  std::set<int> obstacles;
  Eigen::Matrix4d dynamics = slip_dynamics();
};

// Moves that would leave the grid keep the agent in place. Obstacles can be
// entered and are absorbing under every action.
LabeledMdp build_gridworld(const GridworldSpec& spec);

GridworldSpec load_gridworld(const nlohmann::json& doc);
GridworldSpec load_gridworld_file(const std::filesystem::path& path);

}  // namespace prefplan
