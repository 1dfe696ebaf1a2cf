#include "prefplan/gpf.hpp"

#include <cctype>
#include <cmath>

namespace prefplan {

Gpf Gpf::leaf(std::string name, AtomicPreference apf) {
  Gpf g;
  g.kind = Kind::Leaf;
  g.name = std::move(name);
  g.apf = std::move(apf);
  return g;
}

Gpf Gpf::node(Kind kind, std::vector<Gpf> children) {
  Gpf g;
  g.kind = kind;
  g.children = std::move(children);
  return g;
}

namespace {

bool name_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
}

class Parser {
 public:
  Parser(std::string_view text, const PreferenceAutomaton& automaton) : text_(text), automaton_(automaton) {}

  Gpf parse() {
    skip_space();
    Gpf result;
    if (at_lex()) {
      result = parse_lex();
    } else {
      result = parse_or();
    }
    skip_space();
    if (pos_ != text_.size()) fail("unexpected '" + std::string(1, text_[pos_]) + "'");
    return result;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw Error(ErrorKind::ParseError, msg + " at offset " + std::to_string(pos_) + " in \"" + std::string(text_) + "\"");
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool consume(char c) {
    skip_space();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  bool at_lex() {
    skip_space();
    if (text_.substr(pos_, 3) != "lex") return false;
    std::size_t p = pos_ + 3;
    while (p < text_.size() && std::isspace(static_cast<unsigned char>(text_[p]))) ++p;
    return p < text_.size() && text_[p] == '(';
  }

  Gpf parse_lex() {
    pos_ += 3;
    if (!consume('(')) fail("expected '(' after lex");
    std::vector<Gpf> children;
    do {
      if (at_lex()) throw Error(ErrorKind::LexNotAtRoot, "lex(...) may only appear as the outermost formula");
      children.push_back(parse_or());
    } while (consume(','));
    if (!consume(')')) fail("expected ')' closing lex");
    if (children.size() < 2) fail("lex needs at least two formulas");
    return Gpf::node(Gpf::Kind::Lex, std::move(children));
  }

  Gpf parse_or() {
    std::vector<Gpf> items;
    items.push_back(parse_and());
    while (consume('|')) items.push_back(parse_and());
    if (items.size() == 1) return std::move(items.front());
    return Gpf::node(Gpf::Kind::Or, std::move(items));
  }

  Gpf parse_and() {
    std::vector<Gpf> items;
    items.push_back(parse_atom());
    while (consume('&')) items.push_back(parse_atom());
    if (items.size() == 1) return std::move(items.front());
    return Gpf::node(Gpf::Kind::And, std::move(items));
  }

  Gpf parse_atom() {
    skip_space();
    if (consume('(')) {
      if (at_lex()) throw Error(ErrorKind::LexNotAtRoot, "lex(...) may only appear as the outermost formula");
      Gpf inner = parse_or();
      if (!consume(')')) fail("expected ')'");
      return inner;
    }
    if (at_lex()) throw Error(ErrorKind::LexNotAtRoot, "lex(...) may only appear as the outermost formula");
    if (pos_ >= text_.size() || !name_start(text_[pos_])) fail("expected a preference name");
    const std::size_t start = pos_;
    while (pos_ < text_.size() && name_char(text_[pos_])) ++pos_;
    std::string name(text_.substr(start, pos_ - start));
    return Gpf::leaf(name, automaton_.apf(name));
  }

  std::string_view text_;
  const PreferenceAutomaton& automaton_;
  std::size_t pos_ = 0;
};

void collect_leaves(const Gpf& g, std::vector<std::string>& out) {
  if (g.is_leaf()) {
    if (std::find(out.begin(), out.end(), g.name) == out.end()) out.push_back(g.name);
    return;
  }
  for (const auto& c : g.children) collect_leaves(c, out);
}

}  // namespace

Gpf parse_gpf(std::string_view text, const PreferenceAutomaton& automaton) {
  return Parser(text, automaton).parse();
}

std::string to_string(const Gpf& gpf) {
  switch (gpf.kind) {
    case Gpf::Kind::Leaf:
      return gpf.name;
    case Gpf::Kind::And:
    case Gpf::Kind::Or: {
      const char* op = gpf.kind == Gpf::Kind::And ? " & " : " | ";
      std::string out = "(";
      for (std::size_t i = 0; i < gpf.children.size(); ++i) {
        if (i) out += op;
        out += to_string(gpf.children[i]);
      }
      return out + ")";
    }
    case Gpf::Kind::Lex: {
      std::string out = "lex(";
      for (std::size_t i = 0; i < gpf.children.size(); ++i) {
        if (i) out += ", ";
        out += to_string(gpf.children[i]);
      }
      return out + ")";
    }
  }
  return {};
}

std::vector<std::string> leaf_names(const Gpf& gpf) {
  std::vector<std::string> out;
  collect_leaves(gpf, out);
  return out;
}

bool contains_lex(const Gpf& gpf) {
  if (gpf.kind == Gpf::Kind::Lex) return true;
  return std::any_of(gpf.children.begin(), gpf.children.end(), [](const Gpf& c) { return contains_lex(c); });
}

void check_distribution(const TerminalDistribution& dist, int num_states) {
  if (dist.size() != num_states) {
    throw Error(ErrorKind::InvalidArgument, "distribution has " + std::to_string(dist.size()) +
                                                " entries, automaton has " + std::to_string(num_states) + " states");
  }
  if ((dist.array() < 0.0).any()) throw Error(ErrorKind::InvalidArgument, "negative probability mass");
  if (std::abs(dist.sum() - 1.0) > 1e-9) throw Error(ErrorKind::InvalidArgument, "masses do not sum to one");
}

}  // namespace prefplan
