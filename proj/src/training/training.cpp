#include "vmap/training/training.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "vmap/core/kahan.hpp"
#include "vmap/numerics/adam.hpp"
#include "vmap/numerics/ops.hpp"

namespace vmap::training {

namespace nx = vmap::numerics;

std::vector<Example> make_examples(const instructions::Dataset& dataset, std::span<const std::size_t> records,
                                   const std::vector<oracle::SharedValueMap>* supervision) {
  if (supervision && supervision->size() != dataset.records.size()) {
    throw std::invalid_argument("supervision set does not match the dataset records");
  }
  std::vector<Example> out;
  out.reserve(records.size());
  for (std::size_t r : records) {
    const auto& rec = dataset.records.at(r);
    Example e;
    e.map = &dataset.map(rec.map_id);
    e.tokens = dataset.vocabulary.encode(rec.tokens);
    e.goal = rec.goal;
    e.record = r;
    if (supervision) e.target = (*supervision)[r];
    out.push_back(std::move(e));
  }
  return out;
}

double Trajectory::discounted_return(double gamma) const {
  double total = 0.0, discount = 1.0;
  for (double r : rewards) {
    total += discount * r;
    discount *= gamma;
  }
  return total;
}

std::optional<std::string> audit_trajectory(const Trajectory& t, const WorldMap& map, const MdpConfig& config) {
  if (t.states.empty()) return "no states";
  if (t.states.size() != t.actions.size() + 1) return "states and actions differ in length";
  if (t.rewards.size() != t.states.size()) return "states and rewards differ in length";
  if (t.actions.size() > static_cast<std::size_t>(config.max_steps)) return "longer than the step cap";
  if (t.rewards[0] != gridworld::reward_at(map, t.goal, t.states[0], config)) return "start reward mismatch";
  auto state = gridworld::start_episode(map, t.states[0], t.goal);
  for (std::size_t i = 0; i < t.actions.size(); ++i) {
    if (state.terminated) return "actions continue past the goal at step " + std::to_string(i);
    const auto result = gridworld::step(map, state, t.actions[i], config);
    if (result.next.agent != t.states[i + 1]) return "state mismatch at step " + std::to_string(i + 1);
    if (result.reward != t.rewards[i + 1]) return "reward mismatch at step " + std::to_string(i + 1);
    state = result.next;
  }
  if ((state.agent == t.goal) != t.terminal) return "terminal flag mismatch";
  return std::nullopt;
}

ReplayMemory::ReplayMemory(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayMemory::push(Trajectory trajectory) {
  if (items_.size() == capacity_) items_.pop_front();
  items_.push_back(std::move(trajectory));
}

ReplayMemory::Batch ReplayMemory::sample(Rng& rng, std::size_t size) const {
  if (items_.empty()) throw std::logic_error("sampling from an empty replay memory");
  Batch b;
  b.trajectory = rng.index(items_.size());
  const std::size_t n = items_[b.trajectory].states.size();
  b.steps.resize(size);
  for (auto& s : b.steps) s = rng.index(n);
  return b;
}

Action select_action(Cell state, const Grid& values) {
  Action best = Action::North;
  double best_value = values[gridworld::move(state, best).index()];
  for (Action a : gridworld::kActions) {
    const double v = values[gridworld::move(state, a).index()];
    if (v > best_value) {
      best = a;
      best_value = v;
    }
  }
  return best;
}

namespace {

template <class Values>
Trajectory rollout(Values&& values, const WorldMap& map, Cell goal, Cell start, const MdpConfig& mdp,
                   const EpisodeConfig& config, Rng& rng) {
  Trajectory t;
  t.map_id = map.map_id();
  t.goal = goal;
  auto state = gridworld::start_episode(map, start, goal);
  t.states.push_back(start);
  t.rewards.push_back(gridworld::reward_at(map, goal, start, mdp));
  MdpConfig capped = mdp;
  capped.max_steps = config.max_steps;
  for (int i = 0; i < config.max_steps && !state.terminated; ++i) {
    Action a = select_action(state.agent, values());
    if (config.epsilon > 0.0 && rng.bernoulli(config.epsilon)) a = gridworld::kActions[rng.index(4)];
    const auto result = gridworld::step(map, state, a, capped);
    t.actions.push_back(a);
    t.states.push_back(result.next.agent);
    t.rewards.push_back(result.reward);
    state = result.next;
  }
  t.terminal = state.agent == goal;
  return t;
}

}  // namespace

Trajectory run_episode(const Grid& values, const WorldMap& map, Cell goal, Cell start, const MdpConfig& mdp,
                       const EpisodeConfig& config, Rng& rng) {
  return rollout([&]() -> const Grid& { return values; }, map, goal, start, mdp, config, rng);
}

Trajectory run_episode(const Model& model, const Example& example, Cell start, const MdpConfig& mdp,
                       const EpisodeConfig& config, Rng& rng) {
  Grid values;
  bool fresh = false;
  auto provide = [&]() -> const Grid& {
    if (!fresh || config.recompute_each_step) values = model.predict(*example.map, example.query());
    fresh = true;
    return values;
  };
  return rollout(provide, *example.map, example.goal, start, mdp, config, rng);
}

std::vector<double> td_targets(const Grid& target, const WorldMap& map, Cell goal, std::span<const Cell> states,
                               const MdpConfig& mdp) {
  std::vector<double> y;
  y.reserve(states.size());
  for (Cell s : states) {
    const double r = gridworld::reward_at(map, goal, s, mdp);
    if (s == goal) {
      y.push_back(r);
      continue;
    }
    double m = target[gridworld::move(s, Action::North).index()];
    for (Action a : gridworld::kActions) m = std::max(m, target[gridworld::move(s, a).index()]);
    y.push_back(r + mdp.gamma * m);
  }
  return y;
}

Tensor td_loss(Tape& tape, const Tensor& online, const Grid& target, const WorldMap& map, Cell goal,
               std::span<const Cell> states, const MdpConfig& mdp) {
  if (states.empty()) throw std::invalid_argument("td_loss: empty batch");
  std::vector<std::size_t> idx;
  idx.reserve(states.size());
  for (Cell s : states) idx.push_back(s.index());
  const auto y = td_targets(target, map, goal, states, mdp);
  Tensor loss = nx::mse(tape, nx::gather(tape, online, idx), y);
  if (!std::isfinite(loss.item())) {
    std::ostringstream msg;
    msg << "non-finite TD loss on map " << map.map_id() << " goal (" << goal.row << "," << goal.col << ")";
    throw TrainingDiverged(msg.str());
  }
  return loss;
}

void RLConfig::validate() const {
  if (epochs <= 0 || goals_per_epoch <= 0 || max_steps <= 0 || gradient_steps < 0 || batch_size == 0 ||
      sync_period <= 0 || replay_capacity == 0 || !(learning_rate > 0.0)) {
    throw std::invalid_argument("RL configuration values must be positive");
  }
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0) {
    throw std::invalid_argument("epsilon must lie in [0, 1]");
  }
}

double RLConfig::epsilon_at(int epoch) const {
  if (epochs <= 1) return epsilon_start;
  const double f = static_cast<double>(epoch) / static_cast<double>(epochs - 1);
  return epsilon_start + (epsilon_end - epsilon_start) * f;
}

namespace {

Cell random_start(const WorldMap& map, Cell goal, Rng& rng) {
  const auto grass = map.grass_cells();
  if (grass.size() < 2) throw std::invalid_argument("map " + map.map_id() + " has no start cell besides the goal");
  for (;;) {
    const Cell c = grass[rng.index(grass.size())];
    if (c != goal) return c;
  }
}

void check_loss(double loss, double threshold, const std::string& where) {
  if (!std::isfinite(loss) || loss > threshold) {
    std::ostringstream msg;
    msg << "training diverged: loss " << loss << " at " << where;
    throw TrainingDiverged(msg.str());
  }
}

}  // namespace

RLResult rl_train(Model& model, const std::vector<Example>& examples, const RLConfig& config, const MdpConfig& mdp,
                  std::uint64_t seed, const RLObserver& observer) {
  config.validate();
  if (examples.empty()) throw std::invalid_argument("rl_train: no examples");
  const Rng root(seed);
  Rng episode_rng = root.split("episodes");
  Rng replay_rng = root.split("replay");

  Model target = model.clone();
  nx::AdamState adam(model.params(), {.learning_rate = config.learning_rate});
  ReplayMemory memory(config.replay_capacity);
  const EpisodeConfig base{config.max_steps, 0.0, config.recompute_each_step};

  RLResult result;
  std::int64_t steps = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    EpisodeConfig episode = base;
    episode.epsilon = config.epsilon_at(epoch);
    KahanSum reward, loss_sum;
    for (int g = 0; g < config.goals_per_epoch; ++g) {
      const std::size_t which = episode_rng.index(examples.size());
      const Example& ex = examples[which];
      const Cell start = random_start(*ex.map, ex.goal, episode_rng);
      Trajectory t = run_episode(model, ex, start, mdp, episode, episode_rng);
      t.example = which;
      reward.add(t.discounted_return(mdp.gamma));
      if (observer.on_episode) observer.on_episode(t);
      memory.push(std::move(t));

      for (int j = 0; j < config.gradient_steps; ++j) {
        const auto batch = memory.sample(replay_rng, config.batch_size);
        const Trajectory& tr = memory.at(batch.trajectory);
        const Example& bex = examples[tr.example];
        std::vector<Cell> states;
        states.reserve(batch.steps.size());
        for (std::size_t s : batch.steps) states.push_back(tr.states[s]);

        const Grid bootstrap = target.predict(*bex.map, bex.query());
        Tape tape;
        Tensor online = model.forward(tape, *bex.map, bex.query());
        Tensor loss = td_loss(tape, online, bootstrap, *bex.map, bex.goal, states, mdp);
        check_loss(loss.item(), config.divergence_threshold,
                   "epoch " + std::to_string(epoch) + ", gradient step " + std::to_string(steps));
        loss_sum.add(loss.item());
        tape.backward(loss);
        nx::adam_step(model.params(), adam);
        ++steps;
        const bool sync = steps % config.sync_period == 0;
        if (sync) target.params().copy_values_from(model.params());
        if (observer.on_gradient_step) observer.on_gradient_step(steps, target, sync);
      }
    }
    RLEpoch log{epoch, reward.mean(), loss_sum.mean(), episode.epsilon, steps, memory.size()};
    result.epochs.push_back(log);
    if (observer.on_epoch) observer.on_epoch(log, model);
    if (config.stop_when_positive && log.mean_reward > 0.0) {
      result.stopped_early = epoch + 1 < config.epochs;
      break;
    }
  }
  return result;
}

void SupervisedConfig::validate() const {
  if (epochs <= 0 || batch_size == 0 || !(learning_rate > 0.0) || patience <= 0) {
    throw std::invalid_argument("supervised configuration values must be positive");
  }
  if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
    throw std::invalid_argument("validation_fraction must lie in [0, 1)");
  }
}

Tensor supervised_loss(Tape& tape, const Model& model, std::span<const Example* const> batch) {
  if (batch.empty()) throw std::invalid_argument("supervised_loss: empty batch");
  Tensor total;
  for (const Example* ex : batch) {
    if (!ex->target) throw std::invalid_argument("supervised_loss: example without an oracle map");
    Tensor out = model.forward(tape, *ex->map, ex->query());
    Tensor l = nx::mse(tape, out, ex->target->values);
    total = total.defined() ? nx::add(tape, total, l) : l;
  }
  return nx::scale(tape, total, 1.0 / static_cast<double>(batch.size()));
}

double mean_supervised_loss(const Model& model, std::span<const Example> examples) {
  KahanSum sum;
  for (const Example& ex : examples) {
    Tape tape(Tape::Mode::kInference);
    const Example* one[] = {&ex};
    sum.add(supervised_loss(tape, model, one).item());
  }
  return sum.mean();
}

namespace {

double mean_goal_distance(const Model& model, std::span<const Example> examples) {
  KahanSum total;
  for (const auto& e : examples) {
    total.add(gridworld::manhattan(oracle::argmax_cell(model.predict(*e.map, e.query())), e.goal));
  }
  return total.mean();
}

}  // namespace

SupervisedResult supervised_train(Model& model, const std::vector<Example>& examples, const SupervisedConfig& config,
                                  std::uint64_t seed,
                                  const std::function<void(const SupervisedEpoch&, const Model&)>& on_epoch) {
  config.validate();
  if (examples.empty()) throw std::invalid_argument("supervised_train: no examples");
  const Rng root(seed);

  // Whole maps go to validation so it measures transfer to unseen layouts.
  std::set<std::string> ids;
  for (const auto& e : examples) ids.insert(e.map->map_id());
  std::vector<std::string> maps(ids.begin(), ids.end());
  Rng split_rng = root.split("validation");
  split_rng.shuffle(maps);
  std::size_t held = static_cast<std::size_t>(std::ceil(config.validation_fraction * static_cast<double>(maps.size())));
  if (held >= maps.size()) held = maps.size() - 1;
  const std::set<std::string> held_out(maps.begin(), maps.begin() + static_cast<std::ptrdiff_t>(held));
  std::vector<Example> train, validation;
  for (const auto& e : examples) (held_out.count(e.map->map_id()) ? validation : train).push_back(e);

  SupervisedResult result;
  result.train_examples = train.size();
  result.validation_examples = validation.size();
  result.validation_maps.assign(held_out.begin(), held_out.end());

  nx::AdamState adam(model.params(), {.learning_rate = config.learning_rate});
  Rng order_rng = root.split("order");
  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const bool by_distance = config.monitor == SupervisedConfig::Monitor::GoalDistance;
  const std::span<const Example> watched = validation.empty() ? std::span<const Example>(train) : validation;
  double best = std::numeric_limits<double>::infinity();
  double best_loss = best;
  nx::ParamStore best_params = model.params().clone();
  int since_best = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    order_rng.shuffle(order);
    KahanSum train_loss;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      std::vector<const Example*> batch;
      for (std::size_t i = begin; i < end; ++i) batch.push_back(&train[order[i]]);
      Tape tape;
      Tensor loss = supervised_loss(tape, model, batch);
      check_loss(loss.item(), config.divergence_threshold, "epoch " + std::to_string(epoch));
      train_loss.add(loss.item());
      tape.backward(loss);
      nx::adam_step(model.params(), adam);
    }
    SupervisedEpoch log{epoch, train_loss.mean(), mean_supervised_loss(model, watched), mean_goal_distance(model, watched)};
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log, model);
    const double score = by_distance ? log.validation_distance : log.validation_loss;
    if (score < best || (score == best && log.validation_loss < best_loss)) {
      best = score;
      best_loss = log.validation_loss;
      best_params.copy_values_from(model.params());
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.params().copy_values_from(best_params);
  return result;
}

}  // namespace vmap::training
