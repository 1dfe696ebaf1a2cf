#include <cmath>
#include <fstream>
#include <set>

#include "prefplan/error.hpp"
#include "prefplan/mdp.hpp"

namespace prefplan {

using nlohmann::json;

Eigen::Matrix4d slip_dynamics() {
  Eigen::Matrix4d d;
  // realized:  N     E     S     W
  d << 0.80, 0.10, 0.00, 0.10,   // 'N'
       0.05, 0.80, 0.15, 0.00,   // 'E'
       0.00, 0.10, 0.70, 0.20,   // 'S'
       0.15, 0.00, 0.15, 0.70;   // 'W'
  return d;
}

namespace {

void check_spec(const GridworldSpec& spec) {
  const int cells = spec.width * spec.height;
  if (spec.width < 1 || spec.height < 1) throw Error(ErrorKind::InvalidSpec, "grid must have positive size");
  if (spec.initial_cell < 0 || spec.initial_cell >= cells) throw Error(ErrorKind::InvalidSpec, "initial cell outside grid");
  if (spec.obstacles.contains(spec.initial_cell)) throw Error(ErrorKind::InvalidSpec, "initial cell is an obstacle");
  for (const auto& [cell, prop] : spec.labels) {
    if (cell < 0 || cell >= cells) throw Error(ErrorKind::InvalidSpec, "labeled cell outside grid");
    if (prop.empty()) throw Error(ErrorKind::InvalidSpec, "empty proposition name");
  }
  for (int cell : spec.obstacles) {
    if (cell < 0 || cell >= cells) throw Error(ErrorKind::InvalidSpec, "obstacle outside grid");
  }
  if ((spec.dynamics.array() < 0.0).any()) throw Error(ErrorKind::InvalidSpec, "negative dynamics entry");
  for (int r = 0; r < 4; ++r) {
    if (std::abs(spec.dynamics.row(r).sum() - 1.0) > 1e-9) {
      throw Error(ErrorKind::InvalidSpec, "dynamics row " + std::to_string(r) + " does not sum to one");
    }
  }
}

int neighbor(const GridworldSpec& spec, int cell, int heading) {
  static constexpr int kDr[4] = {-1, 0, 1, 0};
  static constexpr int kDc[4] = {0, 1, 0, -1};
  const int r = cell / spec.width + kDr[heading];
  const int c = cell % spec.width + kDc[heading];
  if (r < 0 || r >= spec.height || c < 0 || c >= spec.width) return cell;
  return r * spec.width + c;
}

}  // namespace

LabeledMdp build_gridworld(const GridworldSpec& spec) {
  check_spec(spec);
  const int cells = spec.width * spec.height;
  LabeledMdp mdp;
  mdp.actions = {"N", "E", "S", "W"};
  mdp.states.reserve(cells);
  for (int c = 0; c < cells; ++c) mdp.states.push_back(std::to_string(c));
  mdp.initial = Eigen::VectorXd::Zero(cells);
  mdp.initial(spec.initial_cell) = 1.0;

  std::set<std::string> props;
  mdp.labels.assign(cells, {});
  for (const auto& [cell, prop] : spec.labels) {
    mdp.labels[cell] = {prop};
    props.insert(prop);
  }
  mdp.propositions.assign(props.begin(), props.end());

  mdp.kernel.assign(cells, std::vector<std::vector<Outcome>>(4));
  for (int c = 0; c < cells; ++c) {
    for (int a = 0; a < 4; ++a) {
      auto& row = mdp.kernel[c][a];
      if (spec.obstacles.contains(c)) {
        row.push_back({c, 1.0});
        continue;
      }
      // Merge realized headings that land on the same cell.
      std::map<int, double> landing;
      for (int h = 0; h < 4; ++h) {
        const double p = spec.dynamics(a, h);
        if (p > 0.0) landing[neighbor(spec, c, h)] += p;
      }
      for (const auto& [target, p] : landing) row.push_back({target, p});
    }
  }
  return mdp;
}

GridworldSpec load_gridworld(const json& doc) {
  try {
    GridworldSpec spec;
    spec.width = doc.at("width").get<int>();
    spec.height = doc.at("height").get<int>();
    spec.initial_cell = doc.at("initial_cell").get<int>();
    if (doc.contains("labels")) {
      for (const auto& [cell, prop] : doc.at("labels").items()) {
        spec.labels[std::stoi(cell)] = prop.get<std::string>();
      }
    }
    if (doc.contains("obstacles")) {
      for (const auto& cell : doc.at("obstacles")) spec.obstacles.insert(cell.get<int>());
    }
    if (doc.contains("dynamics")) {
      const auto& rows = doc.at("dynamics");
      if (!rows.is_array() || rows.size() != 4) throw Error(ErrorKind::ParseError, "dynamics must be 4x4");
      for (int r = 0; r < 4; ++r) {
        if (!rows[r].is_array() || rows[r].size() != 4) throw Error(ErrorKind::ParseError, "dynamics must be 4x4");
        for (int c = 0; c < 4; ++c) spec.dynamics(r, c) = rows[r][c].get<double>();
      }
    }
    check_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("gridworld document: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw Error(ErrorKind::ParseError, "gridworld labels must be keyed by cell number");
  }
}

GridworldSpec load_gridworld_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what());
  }
  return load_gridworld(doc);
}

}  // namespace prefplan
