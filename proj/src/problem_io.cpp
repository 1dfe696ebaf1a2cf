#include <cctype>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "prefplan/error.hpp"
#include "prefplan/lp.hpp"

namespace prefplan::lp {

namespace {

std::string token_name(const std::string& name) {
  if (name.empty()) return "-";
  std::string out = name;
  for (char& c : out) {
    if (std::isspace(static_cast<unsigned char>(c))) c = '_';
  }
  return out;
}

std::string untoken(const std::string& tok) { return tok == "-" ? std::string{} : tok; }

const char* cmp_token(Comparator cmp) {
  switch (cmp) {
    case Comparator::LessEqual: return "<=";
    case Comparator::GreaterEqual: return ">=";
    case Comparator::Equal: return "=";
  }
  return "?";
}

double read_number(std::istream& in, int line) {
  std::string tok;
  if (!(in >> tok)) throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": missing number");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0') {
    throw Error(ErrorKind::ParseError, "line " + std::to_string(line) + ": bad number '" + tok + "'");
  }
  return v;
}

}  // namespace

void write_problem(std::ostream& out, const MilpProblem& problem) {
  const auto& lp = problem.lp;
  std::vector<char> is_binary(lp.num_variables(), 0);
  for (int b : problem.binaries) is_binary[b] = 1;
  std::ostringstream s;
  s << std::setprecision(17);
  s << "prefplan-milp 1\n";
  s << "maximize " << lp.num_variables() << ' ' << lp.num_rows() << '\n';
  for (int j = 0; j < lp.num_variables(); ++j) {
    s << "var " << j << ' ' << lp.lower[j] << ' ' << lp.upper[j] << ' ' << lp.objective[j] << ' '
      << (is_binary[j] ? "bin" : "cont") << ' ' << token_name(lp.names[j]) << '\n';
  }
  for (const auto& row : lp.rows) {
    s << "row " << cmp_token(row.cmp) << ' ' << row.rhs << ' ' << row.terms.size();
    for (const auto& t : row.terms) s << ' ' << t.var << ' ' << t.coef;
    s << ' ' << token_name(row.name) << '\n';
  }
  out << s.str();
}

MilpProblem read_problem(std::istream& in) {
  MilpProblem p;
  std::string line;
  int lineno = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    auto fail = [&](const std::string& what) {
      throw Error(ErrorKind::ParseError, "line " + std::to_string(lineno) + ": " + what);
    };
    if (!header) {
      int version = 0;
      if (kind != "prefplan-milp" || !(ls >> version) || version != 1) fail("expected 'prefplan-milp 1'");
      header = true;
    } else if (kind == "maximize") {
      continue;
    } else if (kind == "var") {
      int index = 0;
      if (!(ls >> index) || index != p.lp.num_variables()) fail("variables must be listed in order");
      const double lo = read_number(ls, lineno);
      const double hi = read_number(ls, lineno);
      const double obj = read_number(ls, lineno);
      std::string type, name;
      if (!(ls >> type >> name)) fail("truncated variable");
      if (type != "bin" && type != "cont") fail("variable type must be bin or cont");
      const int v = p.lp.add_variable(lo, hi, obj, untoken(name));
      if (type == "bin") p.binaries.push_back(v);
    } else if (kind == "row") {
      std::string cmp;
      ls >> cmp;
      Comparator c;
      if (cmp == "<=") c = Comparator::LessEqual;
      else if (cmp == ">=") c = Comparator::GreaterEqual;
      else if (cmp == "=") c = Comparator::Equal;
      else fail("bad comparator '" + cmp + "'");
      const double rhs = read_number(ls, lineno);
      std::size_t count = 0;
      if (!(ls >> count)) fail("missing term count");
      std::vector<Term> terms(count);
      for (auto& t : terms) {
        if (!(ls >> t.var) || t.var < 0 || t.var >= p.lp.num_variables()) fail("bad variable index");
        t.coef = read_number(ls, lineno);
      }
      std::string name;
      if (!(ls >> name)) fail("truncated row");
      p.lp.add_constraint(std::move(terms), c, rhs, untoken(name));
    } else {
      fail("unknown record '" + kind + "'");
    }
  }
  if (!header) throw Error(ErrorKind::ParseError, "empty problem file");
  return p;
}

}  // namespace prefplan::lp
