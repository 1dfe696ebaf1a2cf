#include "prefplan/automaton.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "prefplan/error.hpp"

namespace prefplan {

namespace {

using nlohmann::json;

constexpr const char* kSinkName = "__sink__";

const json& require(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) {
    throw Error(ErrorKind::ParseError, std::string("automaton document lacks field '") + key + "'");
  }
  return doc.at(key);
}

std::vector<std::string> string_list(const json& node, const char* what) {
  if (!node.is_array()) {
    throw Error(ErrorKind::ParseError, std::string(what) + " must be a list of strings");
  }
  std::vector<std::string> out;
  out.reserve(node.size());
  for (const auto& item : node) {
    if (!item.is_string()) {
      throw Error(ErrorKind::ParseError, std::string(what) + " must be a list of strings");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

}  // namespace

std::optional<int> PreferenceAutomaton::state_index(std::string_view name) const {
  auto it = std::find(state_names_.begin(), state_names_.end(), name);
  if (it == state_names_.end()) return std::nullopt;
  return static_cast<int>(it - state_names_.begin());
}

bool PreferenceAutomaton::has_symbol(Symbol sigma) const {
  return std::binary_search(alphabet_.begin(), alphabet_.end(), sigma);
}

Symbol PreferenceAutomaton::symbol(std::span<const std::string> props) const {
  Symbol sigma = 0;
  for (const auto& p : props) {
    auto it = std::find(propositions_.begin(), propositions_.end(), p);
    if (it == propositions_.end()) {
      throw Error(ErrorKind::UnknownSymbol, "proposition '" + p + "' is not declared");
    }
    sigma |= Symbol{1} << (it - propositions_.begin());
  }
  return sigma;
}

std::vector<std::string> PreferenceAutomaton::symbol_props(Symbol sigma) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < propositions_.size(); ++i) {
    if (sigma & (Symbol{1} << i)) out.push_back(propositions_[i]);
  }
  return out;
}

int PreferenceAutomaton::symbol_slot(Symbol sigma) const {
  auto it = std::lower_bound(alphabet_.begin(), alphabet_.end(), sigma);
  if (it == alphabet_.end() || *it != sigma) return -1;
  return static_cast<int>(it - alphabet_.begin());
}

int PreferenceAutomaton::step(int q, Symbol sigma) const {
  const int slot = symbol_slot(sigma);
  if (slot < 0) {
    std::string shown = "{";
    for (const auto& p : symbol_props(sigma)) shown += (shown.size() > 1 ? "," : "") + p;
    throw Error(ErrorKind::UnknownSymbol, "symbol " + shown + "} is not in the alphabet");
  }
  return delta_.at(q)[slot];
}

const AtomicPreference& PreferenceAutomaton::apf(const std::string& name) const {
  auto it = apfs_.find(name);
  if (it == apfs_.end()) throw Error(ErrorKind::UnknownApfName, "no atomic preference named '" + name + "'");
  return it->second;
}

PreferenceAutomaton load_automaton(const json& doc) {
  PreferenceAutomaton a;
  a.state_names_ = string_list(require(doc, "states"), "states");
  if (a.state_names_.empty()) throw Error(ErrorKind::ParseError, "automaton has no states");
  {
    std::set<std::string> seen(a.state_names_.begin(), a.state_names_.end());
    if (seen.size() != a.state_names_.size()) throw Error(ErrorKind::ParseError, "duplicate state name");
  }
  a.propositions_ = string_list(require(doc, "propositions"), "propositions");
  if (a.propositions_.size() > 64) throw Error(ErrorKind::ParseError, "at most 64 propositions are supported");
  {
    std::set<std::string> seen(a.propositions_.begin(), a.propositions_.end());
    if (seen.size() != a.propositions_.size()) throw Error(ErrorKind::ParseError, "duplicate proposition");
  }

  const auto& init = require(doc, "initial");
  if (!init.is_string()) throw Error(ErrorKind::ParseError, "initial must be a state name");
  auto q0 = a.state_index(init.get<std::string>());
  if (!q0) throw Error(ErrorKind::UnknownState, "initial state '" + init.get<std::string>() + "' is not declared");
  a.initial_ = *q0;

  a.pad_with_sink_ = doc.value("pad_with_sink", false);

  struct Edge {
    int from;
    Symbol sigma;
    int to;
  };
  std::vector<Edge> edges;
  std::set<Symbol> alphabet;
  const auto& transitions = require(doc, "transitions");
  if (!transitions.is_array()) throw Error(ErrorKind::ParseError, "transitions must be a list");
  for (const auto& t : transitions) {
    if (!t.is_object() || !t.contains("from") || !t.contains("symbol") || !t.contains("to")) {
      throw Error(ErrorKind::ParseError, "transition entries need from, symbol and to");
    }
    const auto from_name = t.at("from").get<std::string>();
    const auto to_name = t.at("to").get<std::string>();
    auto from = a.state_index(from_name);
    auto to = a.state_index(to_name);
    if (!from) throw Error(ErrorKind::UnknownState, "transition source '" + from_name + "' is not declared");
    if (!to) throw Error(ErrorKind::UnknownState, "transition target '" + to_name + "' is not declared");
    const auto props = string_list(t.at("symbol"), "symbol");
    Symbol sigma = 0;
    try {
      sigma = a.symbol(props);
    } catch (const Error& e) {
      throw Error(ErrorKind::ParseError, e.what());
    }
    edges.push_back({*from, sigma, *to});
    alphabet.insert(sigma);
  }
  a.alphabet_.assign(alphabet.begin(), alphabet.end());

  const int n = a.num_states();
  const int k = static_cast<int>(a.alphabet_.size());
  std::vector<std::vector<int>> delta(n, std::vector<int>(k, -1));
  for (const auto& e : edges) {
    int& cell = delta[e.from][a.symbol_slot(e.sigma)];
    if (cell >= 0 && cell != e.to) {
      throw Error(ErrorKind::ParseError, "state '" + a.state_names_[e.from] + "' has two successors on one symbol");
    }
    cell = e.to;
  }

  bool missing = false;
  for (int q = 0; q < n; ++q) {
    for (int s = 0; s < k; ++s) {
      if (delta[q][s] >= 0) continue;
      if (!a.pad_with_sink_) {
        std::string shown;
        for (const auto& p : a.symbol_props(a.alphabet_[s])) shown += (shown.empty() ? "" : ",") + p;
        throw Error(ErrorKind::MissingTransition,
                    "no transition from '" + a.state_names_[q] + "' on {" + shown + "}");
      }
      missing = true;
    }
  }
  if (missing) {
    std::string name = kSinkName;
    while (a.state_index(name)) name += "_";
    a.state_names_.push_back(name);
    const int sink = n;
    a.sink_ = sink;
    for (auto& row : delta) {
      for (auto& cell : row) {
        if (cell < 0) cell = sink;
      }
    }
    delta.emplace_back(k, sink);
  }
  a.delta_ = std::move(delta);

  if (doc.contains("apfs")) {
    const auto& apfs = doc.at("apfs");
    if (!apfs.is_object()) throw Error(ErrorKind::ParseError, "apfs must map names to preferences");
    for (const auto& [name, body] : apfs.items()) {
      if (!body.is_object() || !body.contains("sets")) {
        throw Error(ErrorKind::ParseError, "apf '" + name + "' needs a sets field");
      }
      AtomicPreference apf;
      apf.strict = body.value("strict", false);
      const auto& sets = body.at("sets");
      if (!sets.is_array() || sets.size() < 2) {
        throw Error(ErrorKind::ParseError, "apf '" + name + "' needs at least two state sets");
      }
      std::set<int> used;
      for (const auto& set_node : sets) {
        StateSet set;
        for (const auto& state_name : string_list(set_node, "apf set")) {
          auto q = a.state_index(state_name);
          if (!q) throw Error(ErrorKind::UnknownState, "apf '" + name + "' references unknown state '" + state_name + "'");
          set.push_back(*q);
        }
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        if (set.empty()) throw Error(ErrorKind::ParseError, "apf '" + name + "' has an empty state set");
        for (int q : set) {
          if (!used.insert(q).second) {
            throw Error(ErrorKind::OverlappingSets,
                        "apf '" + name + "' uses state '" + a.state_names_[q] + "' in two sets");
          }
        }
        apf.sets.push_back(std::move(set));
      }
      a.apfs_.emplace(name, std::move(apf));
    }
  }
  a.gpf_text_ = doc.value("gpf", std::string{});
  return a;
}

PreferenceAutomaton load_automaton_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return load_automaton(doc);
}

json to_json(const PreferenceAutomaton& a) {
  json doc;
  doc["states"] = a.state_names();
  doc["propositions"] = a.propositions();
  doc["initial"] = a.state_name(a.initial());
  doc["pad_with_sink"] = a.pad_with_sink();
  json transitions = json::array();
  for (int q = 0; q < a.num_states(); ++q) {
    for (Symbol sigma : a.alphabet()) {
      transitions.push_back({{"from", a.state_name(q)},
                             {"symbol", a.symbol_props(sigma)},
                             {"to", a.state_name(a.step(q, sigma))}});
    }
  }
  doc["transitions"] = std::move(transitions);
  json apfs = json::object();
  for (const auto& [name, apf] : a.apfs()) {
    json sets = json::array();
    for (const auto& set : apf.sets) {
      json names = json::array();
      for (int q : set) names.push_back(a.state_name(q));
      sets.push_back(std::move(names));
    }
    apfs[name] = {{"sets", std::move(sets)}, {"strict", apf.strict}};
  }
  doc["apfs"] = std::move(apfs);
  doc["gpf"] = a.gpf_text();
  return doc;
}

int run_from(const PreferenceAutomaton& automaton, int state, std::span<const Symbol> word) {
  for (Symbol sigma : word) state = automaton.step(state, sigma);
  return state;
}

int run(const PreferenceAutomaton& automaton, std::span<const Symbol> word) {
  return run_from(automaton, automaton.initial(), word);
}

}  // namespace prefplan
