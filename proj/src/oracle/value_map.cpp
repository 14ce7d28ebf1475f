#include "vmap/oracle/value_map.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace vmap::oracle {

using gridworld::kActions;
using gridworld::move;

ValueMap value_iteration(const WorldMap& map, Cell goal, const MdpConfig& config, double tol) {
  config.validate();
  if (!goal.on_grid() || !map.is_grass(goal)) throw OracleError("value iteration needs a grass goal");
  if (!(tol > 0.0)) throw OracleError("tolerance must be positive");

  Grid reward{};
  for (std::size_t i = 0; i < kCellCount; ++i) reward[i] = gridworld::reward_at(map, goal, Cell::from_index(i), config);

  ValueMap out;
  out.map_id = map.map_id();
  out.goal = goal;
  out.gamma = config.gamma;
  Grid& v = out.values;
  v.fill(0.0);
  v[goal.index()] = config.goal_reward;
  // Gauss-Seidel sweeps in row-major order.
  for (int sweep = 0; sweep < 100000; ++sweep) {
    double change = 0.0;
    for (std::size_t i = 0; i < kCellCount; ++i) {
      if (i == goal.index()) continue;
      const Cell c = Cell::from_index(i);
      double best = -INFINITY;
      for (auto a : kActions) best = std::max(best, v[move(c, a).index()]);
      const double next = reward[i] + config.gamma * best;
      change = std::max(change, std::abs(next - v[i]));
      v[i] = next;
    }
    if (change < tol) return out;
  }
  throw OracleError("value iteration did not converge");
}

Policy uniform_policy() {
  Policy p;
  for (auto& row : p) row.fill(0.25);
  return p;
}

Policy greedy_policy(const Grid& values) {
  Policy p{};
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    std::size_t best = 0;
    for (std::size_t a = 1; a < 4; ++a) {
      if (values[move(c, kActions[a]).index()] > values[move(c, kActions[best]).index()]) best = a;
    }
    p[i][best] = 1.0;
  }
  return p;
}

Policy softmax_policy(const Grid& values, double temperature) {
  if (!(temperature > 0.0)) throw OracleError("softmax temperature must be positive");
  Policy p{};
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    std::array<double, 4> logits{};
    double top = -INFINITY;
    for (std::size_t a = 0; a < 4; ++a) {
      logits[a] = values[move(c, kActions[a]).index()] / temperature;
      top = std::max(top, logits[a]);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < 4; ++a) total += (p[i][a] = std::exp(logits[a] - top));
    for (double& x : p[i]) x /= total;
  }
  return p;
}

Grid evaluate_policy_exact(const WorldMap& map, Cell goal, const Policy& policy, const MdpConfig& config) {
  config.validate();
  if (!goal.on_grid() || !map.is_grass(goal)) throw OracleError("policy evaluation needs a grass goal");
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(kCellCount, kCellCount);
  Eigen::VectorXd b(kCellCount);
  for (std::size_t i = 0; i < kCellCount; ++i) {
    double total = 0.0;
    for (double q : policy[i]) {
      if (!(q >= 0.0) || !std::isfinite(q)) throw OracleError("policy probabilities must be finite and nonnegative");
      total += q;
    }
    if (std::abs(total - 1.0) > 1e-9) throw OracleError("policy row " + std::to_string(i) + " does not sum to 1");
    const Cell c = Cell::from_index(i);
    const auto row = static_cast<Eigen::Index>(i);
    if (i == goal.index()) {
      b(row) = config.goal_reward;
      continue;
    }
    b(row) = gridworld::reward_at(map, goal, c, config);
    for (std::size_t k = 0; k < 4; ++k) a(row, static_cast<Eigen::Index>(move(c, kActions[k]).index())) -= config.gamma * policy[i][k];
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const Eigen::VectorXd x = lu.solve(b);
  if (!x.allFinite() || (a * x - b).cwiseAbs().maxCoeff() > 1e-8) throw OracleError("policy evaluation system is singular");
  Grid out{};
  for (std::size_t i = 0; i < kCellCount; ++i) out[i] = x(static_cast<Eigen::Index>(i));
  return out;
}

Cell argmax_cell(const Grid& values) {
  return Cell::from_index(static_cast<std::size_t>(std::max_element(values.begin(), values.end()) - values.begin()));
}

}  // namespace vmap::oracle
