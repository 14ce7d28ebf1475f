#include "vmap/numerics/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace vmap::numerics {
namespace {

double evaluate(const LossFn& loss_fn) {
  Tape tape(Tape::Mode::kInference);
  return loss_fn(tape).item();
}

}  // namespace

GradCheckReport finite_diff_check(const LossFn& loss_fn, ParamStore& params, const GradCheckOptions& options) {
  auto& entries = params.entries();
  params.zero_grad();
  {
    Tape tape;
    Tensor loss = loss_fn(tape);
    tape.backward(loss);
  }
  std::vector<std::vector<double>> analytic;
  for (auto& [name, t] : entries) analytic.emplace_back(t.grad().begin(), t.grad().end());
  params.zero_grad();

  // (tensor, element) pairs to probe.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  const std::size_t total = params.parameter_count();
  if (options.max_coordinates == 0 || options.max_coordinates >= total) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      for (std::size_t j = 0; j < entries[i].second.size(); ++j) coords.emplace_back(i, j);
    }
  } else {
    Rng rng(options.seed);
    std::vector<std::size_t> flat;
    flat.reserve(total);
    std::vector<std::size_t> offsets;
    for (std::size_t i = 0, off = 0; i < entries.size(); ++i) {
      offsets.push_back(off);
      off += entries[i].second.size();
    }
    auto locate = [&](std::size_t f) {
      const std::size_t i = static_cast<std::size_t>(std::upper_bound(offsets.begin(), offsets.end(), f) - offsets.begin()) - 1;
      return std::make_pair(i, f - offsets[i]);
    };
    std::vector<bool> taken(total, false);
    for (std::size_t i = 0; i < entries.size() && coords.size() < options.max_coordinates; ++i) {
      const std::size_t f = offsets[i] + rng.index(entries[i].second.size());
      taken[f] = true;
      coords.push_back(locate(f));
    }
    while (coords.size() < options.max_coordinates) {
      const std::size_t f = rng.index(total);
      if (taken[f]) continue;
      taken[f] = true;
      coords.push_back(locate(f));
    }
    std::sort(coords.begin(), coords.end());
  }

  auto relative = [&](double x, double y) {
    return std::abs(x - y) / std::max({std::abs(x), std::abs(y), options.denominator_floor});
  };
  const double center = options.kink_tolerance > 0.0 ? evaluate(loss_fn) : 0.0;

  GradCheckReport report;
  for (auto& [name, t] : entries) report.entries.push_back({name, 0, 0, 0.0});
  for (auto [i, j] : coords) {
    double& value = entries[i].second.data()[j];
    const double saved = value;
    value = saved + options.step;
    const double plus = evaluate(loss_fn);
    value = saved - options.step;
    const double minus = evaluate(loss_fn);
    value = saved;
    const double numeric = (plus - minus) / (2.0 * options.step);
    const double a = analytic[i][j];
    const double rel = relative(a, numeric);
    auto& e = report.entries[i];
    if (options.kink_tolerance > 0.0 && rel >= options.kink_tolerance) {
      const double forward = (plus - center) / options.step;
      const double backward = (center - minus) / options.step;
      if (relative(forward, backward) >= options.kink_tolerance &&
          std::min(relative(a, forward), relative(a, backward)) < options.kink_tolerance) {
        e.kinks += 1;
        report.kinks += 1;
        continue;
      }
    }
    e.coordinates += 1;
    e.max_relative_error = std::max(e.max_relative_error, rel);
    report.max_relative_error = std::max(report.max_relative_error, rel);
    report.coordinates += 1;
  }
  return report;
}

}  // namespace vmap::numerics
