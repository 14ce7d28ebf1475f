#include "vmap/numerics/adam.hpp"

#include <cmath>

namespace vmap::numerics {

AdamState::AdamState(const ParamStore& params, AdamConfig cfg) : config(cfg) {
  for (const auto& [name, t] : params.entries()) {
    first_moment.emplace_back(t.size(), 0.0);
    second_moment.emplace_back(t.size(), 0.0);
  }
}

void adam_step(ParamStore& params, AdamState& state) {
  auto& entries = params.entries();
  if (entries.size() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: optimizer state does not match parameter store");
  }
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& [name, t] = entries[i];
    if (state.first_moment[i].size() != t.size()) {
      throw std::invalid_argument("adam_step: moment buffer shape mismatch for '" + name + "'");
    }
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NonFiniteGradient(name);
    }
  }

  const AdamConfig& c = state.config;
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    Tensor& p = entries[i].second;
    auto values = p.data();
    auto grads = p.grad();
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    for (std::size_t j = 0; j < values.size(); ++j) {
      const double g = grads[j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      values[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
    p.zero_grad();
  }
}

}  // namespace vmap::numerics
