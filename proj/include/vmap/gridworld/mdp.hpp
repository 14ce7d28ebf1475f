#pragma once

#include <array>
#include <stdexcept>
#include <string_view>

#include "vmap/gridworld/world_map.hpp"

namespace vmap::gridworld {

enum class Action : std::uint8_t { North, South, East, West };
inline constexpr std::array<Action, 4> kActions = {Action::North, Action::South, Action::East, Action::West};
std::string_view action_name(Action a);

struct MdpConfig {
  double goal_reward = 3.0;
  double puddle_reward = -1.0;
  double step_reward = 0.0;
  double gamma = 0.95;
  int max_steps = 75;

  void validate() const;
};

// Off-grid moves leave the agent in place.
constexpr Cell move(Cell c, Action a) {
  Cell n = c;
  switch (a) {
    case Action::North: n.row -= 1; break;
    case Action::South: n.row += 1; break;
    case Action::East: n.col += 1; break;
    case Action::West: n.col -= 1; break;
  }
  return n.on_grid() ? n : c;
}

// R(s): reward collected on arriving at `cell`.
double reward_at(const WorldMap& map, Cell goal, Cell cell, const MdpConfig& config);

struct EpisodeState {
  Cell agent;
  Cell goal;
  int steps_taken = 0;
  bool terminated = false;

  friend bool operator==(const EpisodeState&, const EpisodeState&) = default;
};

struct StepResult {
  EpisodeState next;
  double reward = 0.0;
  bool done = false;
};

class EpisodeError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Validates that the goal is grass and the start lies on the grid.
EpisodeState start_episode(const WorldMap& map, Cell start, Cell goal);

// Pure transition. Throws EpisodeError when the episode already terminated.
StepResult step(const WorldMap& map, const EpisodeState& state, Action action, const MdpConfig& config);

}  // namespace vmap::gridworld
