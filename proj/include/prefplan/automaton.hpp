#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace prefplan {

// A symbol of the alphabet 2^AP, stored as a bitmask over the automaton's
// proposition list. Bit i set means propositions()[i] holds.
using Symbol = std::uint64_t;

// Sorted, duplicate-free list of automaton state indices.
using StateSet = std::vector<int>;

// X_0 <= X_1 <= ... <= X_n; later sets are preferred outcomes.
struct AtomicPreference {
  std::vector<StateSet> sets;
  bool strict = false;

  int length() const { return static_cast<int>(sets.size()) - 1; }
};

class PreferenceAutomaton {
 public:
  int num_states() const { return static_cast<int>(state_names_.size()); }
  int initial() const { return initial_; }
  const std::vector<std::string>& state_names() const { return state_names_; }
  const std::string& state_name(int q) const { return state_names_.at(q); }
  std::optional<int> state_index(std::string_view name) const;

  const std::vector<std::string>& propositions() const { return propositions_; }

  // Declared alphabet: every symbol that appears on at least one transition.
  const std::vector<Symbol>& alphabet() const { return alphabet_; }
  bool has_symbol(Symbol sigma) const;

  // Encodes a proposition set; throws UnknownSymbol on an undeclared
  // proposition name.
  Symbol symbol(std::span<const std::string> props) const;
  std::vector<std::string> symbol_props(Symbol sigma) const;

  // delta(q, sigma); throws UnknownSymbol when sigma is not in the alphabet.
  int step(int q, Symbol sigma) const;

  // Index of the absorbing sink added by the padding rule, if one was needed.
  std::optional<int> sink() const { return sink_; }
  bool pad_with_sink() const { return pad_with_sink_; }

  const std::map<std::string, AtomicPreference>& apfs() const { return apfs_; }
  const AtomicPreference& apf(const std::string& name) const;
  const std::string& gpf_text() const { return gpf_text_; }

  friend PreferenceAutomaton load_automaton(const nlohmann::json& doc);

 private:
  int symbol_slot(Symbol sigma) const;

  std::vector<std::string> state_names_;
  std::vector<std::string> propositions_;
  std::vector<Symbol> alphabet_;             // sorted
  std::vector<std::vector<int>> delta_;      // [q][slot in alphabet_]
  int initial_ = 0;
  std::optional<int> sink_;
  bool pad_with_sink_ = false;
  std::map<std::string, AtomicPreference> apfs_;
  std::string gpf_text_;
};

PreferenceAutomaton load_automaton(const nlohmann::json& doc);
PreferenceAutomaton load_automaton_file(const std::filesystem::path& path);

// Emits the document form. The padding sink, when present, is written as an
// ordinary state with explicit self-loops so the round trip is exact.
nlohmann::json to_json(const PreferenceAutomaton& automaton);

// Folds delta over the word starting from q0. The empty word returns q0.
int run(const PreferenceAutomaton& automaton, std::span<const Symbol> word);
int run_from(const PreferenceAutomaton& automaton, int state, std::span<const Symbol> word);

}  // namespace prefplan
