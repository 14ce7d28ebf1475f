#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmap/core/rng.hpp"
#include "vmap/gridworld/mdp.hpp"
#include "vmap/instructions/dataset.hpp"
#include "vmap/model/model.hpp"
#include "vmap/oracle/supervision.hpp"

namespace vmap::training {

using gridworld::Action;
using gridworld::Cell;
using gridworld::Grid;
using gridworld::MdpConfig;
using gridworld::WorldMap;
using model::Model;
using numerics::Tape;
using numerics::Tensor;

class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One (map, instruction) pair ready for the model. `target` is only needed
// by the supervised trainer.
struct Example {
  const WorldMap* map = nullptr;
  std::vector<int> tokens;
  Cell goal;
  std::size_t record = 0;
  oracle::SharedValueMap target;

  model::Query query() const { return {tokens, goal}; }
};

// Examples for the given records. With `supervision` (aligned with
// dataset.records) each example carries its oracle map.
std::vector<Example> make_examples(const instructions::Dataset& dataset, std::span<const std::size_t> records,
                                   const std::vector<oracle::SharedValueMap>* supervision = nullptr);

struct Trajectory {
  std::string map_id;
  std::size_t example = 0;  // index into the trainer's example list
  Cell goal;
  std::vector<Cell> states;     // s_0 .. s_T
  std::vector<Action> actions;  // a_0 .. a_{T-1}
  std::vector<double> rewards;  // r_t = R(s_t); r_0 is the start cell's reward
  bool terminal = false;  // reached the goal

  // sum_t gamma^t r_t from the start state.
  double discounted_return(double gamma) const;
};

// Replays the actions through the gridworld step function and checks states,
// rewards and the terminal flag. Returns a description of the first mismatch.
std::optional<std::string> audit_trajectory(const Trajectory& trajectory, const WorldMap& map, const MdpConfig& config);

class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity);

  // Evicts the oldest trajectory when full.
  void push(Trajectory trajectory);

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return items_.empty(); }
  const Trajectory& at(std::size_t i) const { return items_.at(i); }

  struct Batch {
    std::size_t trajectory = 0;
    std::vector<std::size_t> steps;  // indices into states, with replacement
  };
  // A uniformly chosen trajectory, then `size` uniformly chosen states of it.
  Batch sample(Rng& rng, std::size_t size) const;

 private:
  std::size_t capacity_;
  std::deque<Trajectory> items_;
};

// Action with the largest successor value; ties go to the first of N, S, E, W.
Action select_action(Cell state, const Grid& values);

struct EpisodeConfig {
  int max_steps = 75;
  double epsilon = 0.0;  // probability of a uniformly random action
  // Predict again before every action instead of once per episode. Parameters
  // do not move during an episode, so this only costs time; kept for ablation.
  bool recompute_each_step = false;
};

// Greedy (or epsilon-greedy) rollout under fixed values. The episode ends at
// the goal or after max_steps actions.
Trajectory run_episode(const Grid& values, const WorldMap& map, Cell goal, Cell start, const MdpConfig& mdp,
                       const EpisodeConfig& config, Rng& rng);
Trajectory run_episode(const Model& model, const Example& example, Cell start, const MdpConfig& mdp,
                       const EpisodeConfig& config, Rng& rng);

// y(s) = R(s) + gamma * max_a target(move(s, a)), or R(s) at the goal.
std::vector<double> td_targets(const Grid& target, const WorldMap& map, Cell goal, std::span<const Cell> states,
                               const MdpConfig& mdp);

// Mean of (online(s) - y(s))^2 over the batch. The target grid carries no
// gradient, so the bootstrap term is blocked by construction.
Tensor td_loss(Tape& tape, const Tensor& online, const Grid& target, const WorldMap& map, Cell goal,
               std::span<const Cell> states, const MdpConfig& mdp);

struct RLConfig {
  int epochs = 200;
  int goals_per_epoch = 500;
  int max_steps = 75;
  int gradient_steps = 8;  // J
  std::size_t batch_size = 32;
  std::int64_t sync_period = 500;  // gradient steps
  std::size_t replay_capacity = 2000;
  double learning_rate = 1e-3;
  double epsilon_start = 0.1;
  double epsilon_end = 0.01;
  bool stop_when_positive = false;
  bool recompute_each_step = false;
  double divergence_threshold = 1e6;

  void validate() const;
  // Linear anneal from epsilon_start at epoch 0 to epsilon_end at the last.
  double epsilon_at(int epoch) const;
};

struct RLEpoch {
  int epoch = 0;
  double mean_reward = 0.0;
  double mean_loss = 0.0;
  double epsilon = 0.0;
  std::int64_t gradient_steps = 0;
  std::size_t replay_size = 0;
};

struct RLObserver {
  std::function<void(const Trajectory&)> on_episode;
  std::function<void(std::int64_t step, const Model& target, bool synced)> on_gradient_step;
  std::function<void(const RLEpoch&, const Model&)> on_epoch;
};

struct RLResult {
  std::vector<RLEpoch> epochs;
  bool stopped_early = false;
};

RLResult rl_train(Model& model, const std::vector<Example>& examples, const RLConfig& config, const MdpConfig& mdp,
                  std::uint64_t seed, const RLObserver& observer = {});

struct SupervisedConfig {
  // What early stopping watches on the validation maps: the regression loss,
  // or the mean L1 distance from the predicted argmax to the goal (ties broken
  // by loss).
  enum class Monitor { Loss, GoalDistance };

  int epochs = 60;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double validation_fraction = 0.1;  // of training maps
  int patience = 10;                 // epochs without improvement
  Monitor monitor = Monitor::Loss;
  double divergence_threshold = 1e6;

  void validate() const;
};

struct SupervisedEpoch {
  int epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;  // train loss when there is no validation split
  double validation_distance = 0.0;
};

struct SupervisedResult {
  std::vector<SupervisedEpoch> epochs;
  int best_epoch = 0;
  std::size_t train_examples = 0;
  std::size_t validation_examples = 0;
  std::vector<std::string> validation_maps;
};

// Mean over the batch and all cells of (V - V_oracle)^2.
Tensor supervised_loss(Tape& tape, const Model& model, std::span<const Example* const> batch);
double mean_supervised_loss(const Model& model, std::span<const Example> examples);

// Holds out whole maps for validation, trains by mini-batch Adam, and leaves
// the model at the best validation epoch under config.monitor.
SupervisedResult supervised_train(Model& model, const std::vector<Example>& examples, const SupervisedConfig& config,
                                  std::uint64_t seed,
                                  const std::function<void(const SupervisedEpoch&, const Model&)>& on_epoch = {});

}  // namespace vmap::training
