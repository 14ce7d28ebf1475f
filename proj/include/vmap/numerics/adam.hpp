#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmap/numerics/params.hpp"

namespace vmap::numerics {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  explicit NonFiniteGradient(std::string parameter)
      : std::runtime_error("non-finite gradient in parameter '" + parameter + "'"), parameter_(std::move(parameter)) {}
  const std::string& parameter() const { return parameter_; }

 private:
  std::string parameter_;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step_count = 0;
  std::vector<std::vector<double>> first_moment;
  std::vector<std::vector<double>> second_moment;

  AdamState() = default;
  AdamState(const ParamStore& params, AdamConfig cfg);
};

// One bias-corrected Adam update over every parameter, then zeroes the
// gradients. A non-finite gradient anywhere aborts before any value changes.
void adam_step(ParamStore& params, AdamState& state);

}  // namespace vmap::numerics
