#pragma once

#include <array>
#include <stdexcept>
#include <string>

#include "vmap/gridworld/mdp.hpp"

namespace vmap::oracle {

using gridworld::Cell;
using gridworld::Grid;
using gridworld::kCellCount;
using gridworld::MdpConfig;
using gridworld::WorldMap;

struct ValueMap {
  Grid values{};
  std::string map_id;
  Cell goal;
  double gamma = 0.95;

  double at(Cell c) const { return values[c.index()]; }
  friend bool operator==(const ValueMap&, const ValueMap&) = default;
};

class OracleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Fixed point of V(s) = R(s) + gamma * max_a V(move(s, a)) with V(goal)
// pinned to the goal reward. Sweeps until the largest change is below tol.
ValueMap value_iteration(const WorldMap& map, Cell goal, const MdpConfig& config = {}, double tol = 1e-9);

// pi(a | s) for each cell, actions in N, S, E, W order.
using Policy = std::array<std::array<double, 4>, kCellCount>;

Policy uniform_policy();
// One-hot on the action with the largest successor value; ties go to the
// earliest action in N, S, E, W order.
Policy greedy_policy(const Grid& values);
// pi(a | s) proportional to exp(V(move(s, a)) / temperature).
Policy softmax_policy(const Grid& values, double temperature);

// Solves V = R + gamma * P_pi V exactly with V(goal) pinned to the goal
// reward. Throws OracleError for malformed policy rows.
Grid evaluate_policy_exact(const WorldMap& map, Cell goal, const Policy& policy, const MdpConfig& config = {});

// Row-major first maximum.
Cell argmax_cell(const Grid& values);

}  // namespace vmap::oracle
