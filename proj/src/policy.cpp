#include "prefplan/policy.hpp"

#include <cmath>
#include <fstream>

#include "prefplan/error.hpp"

namespace prefplan {

using nlohmann::json;

namespace {

constexpr double kZeroDenominator = 1e-12;
constexpr double kRuleSumTol = 1e-9;

void uniform_rule(const ProductMdp& product, int x, Eigen::MatrixXd& rule) {
  const int k = product.num_enabled(x);
  for (int a = 0; a < product.num_actions(); ++a) rule(x, a) = product.enabled(x, a) ? 1.0 / k : 0.0;
}

}  // namespace

Policy extract_policy(const OccupancyPlan& plan) {
  if (!plan.product || plan.occupancy.empty()) {
    throw Error(ErrorKind::InvalidArgument, "plan carries no occupancy (infeasible solve?)");
  }
  const auto& product = *plan.product;
  Policy pol;
  pol.horizon = plan.horizon;
  pol.rules.reserve(plan.horizon);
  for (int t = 0; t < plan.horizon; ++t) {
    Eigen::MatrixXd y = plan.occupancy[t].cwiseMax(0.0);
    Eigen::MatrixXd rule = Eigen::MatrixXd::Zero(product.num_states(), product.num_actions());
    for (int x = 0; x < product.num_states(); ++x) {
      const double denom = y.row(x).sum();
      if (denom > kZeroDenominator) rule.row(x) = y.row(x) / denom;
      else uniform_rule(product, x, rule);
    }
    pol.rules.push_back(std::move(rule));
  }
  return pol;
}

Policy deterministic_policy(const ProductMdp& product, const std::vector<std::vector<int>>& choice) {
  Policy pol;
  pol.horizon = static_cast<int>(choice.size());
  for (const auto& stage : choice) {
    Eigen::MatrixXd rule = Eigen::MatrixXd::Zero(product.num_states(), product.num_actions());
    for (int x = 0; x < product.num_states(); ++x) {
      const int a = stage.at(x);
      if (a >= 0) rule(x, a) = 1.0;
    }
    pol.rules.push_back(std::move(rule));
  }
  return pol;
}

EvalResult forward_eval(const ProductMdp& product, const Policy& policy, int horizon) {
  if (horizon < 1) throw Error(ErrorKind::InvalidArgument, "horizon must be at least 1");
  if (static_cast<int>(policy.rules.size()) < horizon) {
    throw Error(ErrorKind::UndefinedDecisionRule, "policy has fewer decision rules than the horizon");
  }
  EvalResult r;
  Eigen::VectorXd p = product.initial();
  for (int t = 0; t < horizon; ++t) {
    r.stage.push_back(p);
    if (t + 1 == horizon) break;
    const auto& rule = policy.rules[t];
    Eigen::VectorXd next = Eigen::VectorXd::Zero(product.num_states());
    for (int x = 0; x < product.num_states(); ++x) {
      if (p(x) == 0.0) continue;
      const double sum = rule.row(x).sum();
      if (std::abs(sum - 1.0) > kRuleSumTol) {
        throw Error(ErrorKind::UndefinedDecisionRule,
                    "no decision rule at stage " + std::to_string(t) + " for " + product.state_label(x));
      }
      for (int a = 0; a < product.num_actions(); ++a) {
        const double w = rule(x, a);
        if (w == 0.0) continue;
        if (!product.enabled(x, a)) {
          throw Error(ErrorKind::UndefinedDecisionRule, "rule picks a disabled action at " + product.state_label(x));
        }
        for (const auto& o : product.successors(x, a)) next(o.target) += p(x) * w * o.prob;
      }
    }
    p = std::move(next);
  }
  r.terminal = Eigen::VectorXd::Zero(product.num_automaton_states());
  const auto& last = r.stage.back();
  for (int x = 0; x < product.num_states(); ++x) r.terminal(product.state(x).automaton_state) += last(x);
  return r;
}

std::vector<Eigen::MatrixXd> occupancy(const ProductMdp& product, const Policy& policy, int horizon) {
  const auto r = forward_eval(product, policy, horizon);
  std::vector<Eigen::MatrixXd> out;
  for (int t = 0; t < horizon; ++t) out.push_back(r.stage[t].asDiagonal() * policy.rules[t]);
  return out;
}

double value_of(const Policy& policy, const Gpf& gpf, const ProductMdp& product, int horizon) {
  return eval_gpf(gpf, forward_eval(product, policy, horizon).terminal);
}

json policy_to_json(const ProductMdp& product, const Policy& policy) {
  json rules = json::array();
  for (int t = 0; t < policy.horizon; ++t) {
    for (int x = 0; x < product.num_states(); ++x) {
      json probs = json::object();
      for (int a = 0; a < product.num_actions(); ++a) {
        if (policy.rules[t](x, a) != 0.0) probs[product.action_names()[a]] = policy.rules[t](x, a);
      }
      if (probs.empty()) continue;
      const auto& st = product.state(x);
      rules.push_back({{"t", t},
                       {"state", {product.mdp_state_names()[st.mdp_state],
                                  product.automaton_state_names()[st.automaton_state]}},
                       {"action_probs", probs}});
    }
  }
  return {{"horizon", policy.horizon}, {"rules", rules}};
}

Policy policy_from_json(const json& doc, const ProductMdp& product) {
  try {
    Policy pol;
    pol.horizon = doc.at("horizon").get<int>();
    if (pol.horizon < 1) throw Error(ErrorKind::ParseError, "policy horizon must be at least 1");
    pol.rules.assign(pol.horizon, Eigen::MatrixXd::Zero(product.num_states(), product.num_actions()));
    const auto& mdp_names = product.mdp_state_names();
    const auto& q_names = product.automaton_state_names();
    const auto& actions = product.action_names();
    for (const auto& r : doc.at("rules")) {
      const int t = r.at("t").get<int>();
      if (t < 0 || t >= pol.horizon) throw Error(ErrorKind::ParseError, "rule stage out of range");
      const auto& st = r.at("state");
      const auto s_name = st.at(0).get<std::string>();
      const auto q_name = st.at(1).get<std::string>();
      const auto s_it = std::find(mdp_names.begin(), mdp_names.end(), s_name);
      const auto q_it = std::find(q_names.begin(), q_names.end(), q_name);
      if (s_it == mdp_names.end() || q_it == q_names.end()) {
        throw Error(ErrorKind::UnknownState, "policy names unknown state (" + s_name + "," + q_name + ")");
      }
      const auto x = product.find(static_cast<int>(s_it - mdp_names.begin()), static_cast<int>(q_it - q_names.begin()));
      if (!x) continue;  // unreachable in this product, never consulted
      for (const auto& [a_name, p] : r.at("action_probs").items()) {
        const auto a_it = std::find(actions.begin(), actions.end(), a_name);
        if (a_it == actions.end()) throw Error(ErrorKind::ParseError, "policy names unknown action '" + a_name + "'");
        pol.rules[t](*x, static_cast<int>(a_it - actions.begin())) = p.get<double>();
      }
    }
    return pol;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("policy document: ") + e.what());
  }
}

Policy load_policy_file(const std::filesystem::path& path, const ProductMdp& product) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return policy_from_json(doc, product);
}

}  // namespace prefplan
