#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "vmap/numerics/params.hpp"

namespace vmap::numerics {

// Builds a scalar loss on the given tape from the current parameter values.
using LossFn = std::function<Tensor(Tape&)>;

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise at least one per tensor, the rest sampled.
  std::size_t max_coordinates = 0;
  // Relative error is |a - n| / max(|a|, |n|, floor).
  double denominator_floor = 1e-6;
  std::uint64_t seed = 0;
  // When positive, a coordinate whose two one-sided quotients disagree while
  // the analytic value matches one of them (both to this tolerance) is a kink
  // inside the step: reported in `kinks`, left out of the error.
  double kink_tolerance = 0.0;
};

struct GradCheckEntry {
  std::string name;
  std::size_t coordinates = 0;
  std::size_t kinks = 0;
  double max_relative_error = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  std::size_t coordinates = 0;  // compared, kinks excluded
  std::size_t kinks = 0;
  double max_relative_error = 0.0;
  bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

// Compares taped gradients against central differences. Parameter values are
// restored afterwards and gradients are left zeroed.
GradCheckReport finite_diff_check(const LossFn& loss_fn, ParamStore& params, const GradCheckOptions& options = {});

}  // namespace vmap::numerics
