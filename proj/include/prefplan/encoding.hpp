#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "prefplan/automaton.hpp"
#include "prefplan/gpf.hpp"
#include "prefplan/lp.hpp"
#include "prefplan/mdp.hpp"
#include "prefplan/product.hpp"

namespace prefplan {

struct EncodingParams {
  int horizon = 1;         // T, number of decision stages
  double big_m = 1.0;      // M
  double lower_m = -1.0;   // m
  double epsilon = 1e-6;   // strictness margin
};

// Occupancy variables y(t, x, a) for t = 0..T-1. Stage t only carries the
// product states reachable in exactly t steps.
struct FlowVariables {
  int horizon = 0;
  std::vector<std::vector<int>> layers;              // [t] -> product states
  std::vector<std::vector<std::vector<int>>> index;  // [t][k][a] -> variable, -1 if disabled
};

FlowVariables encode_flow(lp::MilpProblem& milp, const ProductMdp& product, int horizon);

// Probability of ending the horizon in S x X, as a sum of last-stage
// occupancy variables. Empty for an empty set.
std::vector<lp::Term> terminal_mass(const FlowVariables& flow, const ProductMdp& product, const StateSet& set);

// A subformula's value variable and its indicator binary.
struct EncodedValue {
  int value = -1;
  int binary = -1;
};

EncodedValue encode_apf1(lp::MilpProblem& milp, const FlowVariables& flow, const ProductMdp& product,
                         const AtomicPreference& apf, const EncodingParams& params, const std::string& name = {});

// v = min(v1, v2); z = 1 selects v2 (v2 <= v1), z = 0 selects v1 (v1 <= v2 - eps).
EncodedValue encode_and(lp::MilpProblem& milp, int v1, int v2, const EncodingParams& params,
                        const std::string& name = {});

// v = max(v1, v2); z = 1 selects v1 (v1 >= v2), z = 0 selects v2 (v1 <= v2 - eps).
EncodedValue encode_or(lp::MilpProblem& milp, int v1, int v2, const EncodingParams& params,
                       const std::string& name = {});

struct PreferenceEncoding {
  int root = -1;                                     // value variable of the whole formula
  std::map<std::string, EncodedValue> apfs;          // one entry per distinct leaf name
  std::vector<EncodedValue> connectives;             // in creation order
};

// Recursively encodes a lex-free formula; n-ary connectives are folded left.
PreferenceEncoding encode_gpf(lp::MilpProblem& milp, const FlowVariables& flow, const ProductMdp& product,
                              const Gpf& gpf, const EncodingParams& params);

struct BuiltProgram {
  lp::MilpProblem milp;
  FlowVariables flow;
  PreferenceEncoding pref;
};

BuiltProgram build_program(const ProductMdp& product, const Gpf& gpf, const EncodingParams& params);

struct OccupancyPlan {
  lp::Status status = lp::Status::Infeasible;
  double objective = 0.0;
  int horizon = 0;
  double epsilon = 0.0;                              // margin actually used (after a retry)
  std::shared_ptr<const ProductMdp> product;
  std::vector<Eigen::MatrixXd> occupancy;            // [t](x, a), zero off the reachable layers
  std::map<std::string, double> apf_value;
  std::map<std::string, int> apf_binary;
  std::vector<double> connective_value;
  std::vector<int> connective_binary;
  long nodes = 0;
  double bound = lp::kInf;                           // NodeLimitExceeded only
  bool retried = false;
  bool tie_band_warning = false;
};

// Solves max v(phi) over the occupancy polytope. An infeasible program is
// retried once with epsilon / 10; if it stays infeasible the plan is
// returned with status Infeasible and objective 0.
OccupancyPlan plan(std::shared_ptr<const ProductMdp> product, const Gpf& gpf, const EncodingParams& params,
                   const lp::MilpConfig& config = {});
OccupancyPlan plan(const LabeledMdp& mdp, const PreferenceAutomaton& automaton, const Gpf& gpf,
                   const EncodingParams& params, const lp::MilpConfig& config = {});

struct LexResult {
  int index = 0;  // 1-based position of the formula that was planned
  OccupancyPlan plan;
};

// Plans each formula in order and stops at the first positive optimum; when
// none is positive the last plan is returned.
LexResult plan_lex(const LabeledMdp& mdp, const PreferenceAutomaton& automaton, const std::vector<Gpf>& gpfs,
                   const EncodingParams& params, const lp::MilpConfig& config = {});

// Satisfiable threshold used by plan_lex.
inline constexpr double kPositiveValue = 1e-9;

}  // namespace prefplan
