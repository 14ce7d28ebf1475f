#include "vmap/gridworld/mdp.hpp"

namespace vmap::gridworld {

std::string_view action_name(Action a) {
  switch (a) {
    case Action::North: return "N";
    case Action::South: return "S";
    case Action::East: return "E";
    case Action::West: return "W";
  }
  return "?";
}

void MdpConfig::validate() const {
  if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("MdpConfig: gamma must lie in (0, 1)");
  if (max_steps < 1) throw std::invalid_argument("MdpConfig: max_steps must be at least 1");
}

double reward_at(const WorldMap& map, Cell goal, Cell cell, const MdpConfig& config) {
  if (cell == goal) return config.goal_reward;
  return map.is_grass(cell) ? config.step_reward : config.puddle_reward;
}

EpisodeState start_episode(const WorldMap& map, Cell start, Cell goal) {
  if (!start.on_grid() || !goal.on_grid()) throw EpisodeError("episode cells must lie on the grid");
  if (!map.is_grass(goal)) throw EpisodeError("goal must be a grass cell");
  return {start, goal, 0, start == goal};
}

StepResult step(const WorldMap& map, const EpisodeState& state, Action action, const MdpConfig& config) {
  if (state.terminated) throw EpisodeError("step() on a terminated episode");
  StepResult result;
  result.next = state;
  result.next.agent = move(state.agent, action);
  result.next.steps_taken += 1;
  result.reward = reward_at(map, state.goal, result.next.agent, config);
  result.done = result.next.agent == state.goal || result.next.steps_taken >= config.max_steps;
  result.next.terminated = result.done;
  return result;
}

}  // namespace vmap::gridworld
