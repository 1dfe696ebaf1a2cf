#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "prefplan/encoding.hpp"
#include "prefplan/gpf.hpp"
#include "prefplan/product.hpp"

namespace prefplan {

// Nonstationary stochastic policy on the product: rules[t](x, a) is the
// probability of action a in product state x at stage t. A row of zeros
// means the rule is undefined there.
struct Policy {
  int horizon = 0;
  std::vector<Eigen::MatrixXd> rules;
};

// mu_t(x, a) = y(t, x, a) / sum_a' y(t, x, a'); states with no occupancy get
// the uniform distribution over their enabled actions.
Policy extract_policy(const OccupancyPlan& plan);

// Deterministic policy from a per-stage action choice ([t][x] -> action).
Policy deterministic_policy(const ProductMdp& product, const std::vector<std::vector<int>>& choice);

struct EvalResult {
  std::vector<Eigen::VectorXd> stage;   // p_t over product states, t = 0..T-1
  Eigen::VectorXd terminal;             // marginal of p_{T-1} over automaton states
};

// Exact forward propagation of the induced chain. Throws
// UndefinedDecisionRule when a state with positive mass has no rule.
EvalResult forward_eval(const ProductMdp& product, const Policy& policy, int horizon);

// Per-state, per-action occupancy of the induced chain; the inverse of
// extract_policy on reachable states.
std::vector<Eigen::MatrixXd> occupancy(const ProductMdp& product, const Policy& policy, int horizon);

double value_of(const Policy& policy, const Gpf& gpf, const ProductMdp& product, int horizon);

// Empirical terminal automaton-state frequencies over n sampled trajectories.
// Trajectory i draws from its own generator seeded with (seed, i), so the
// result does not depend on the order trajectories are run in.
Eigen::VectorXd simulate(const ProductMdp& product, const Policy& policy, int horizon, long n, std::uint64_t seed,
                         int threads = 1);

nlohmann::json policy_to_json(const ProductMdp& product, const Policy& policy);
Policy policy_from_json(const nlohmann::json& doc, const ProductMdp& product);
Policy load_policy_file(const std::filesystem::path& path, const ProductMdp& product);

}  // namespace prefplan
