#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "vmap/core/rng.hpp"
#include "vmap/numerics/tensor.hpp"

namespace vmap::numerics {

// Ordered, named collection of trainable tensors. Not copyable: clone()
// produces an independent deep copy (e.g. a target network).
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(ParamStore&&) = default;
  ParamStore& operator=(ParamStore&&) = default;
  ParamStore(const ParamStore&) = delete;
  ParamStore& operator=(const ParamStore&) = delete;

  // Zero-initialized, gradient-tracking parameter. Names must be unique.
  Tensor add(const std::string& name, Shape shape);

  bool contains(const std::string& name) const;
  const Tensor& get(const std::string& name) const;
  Tensor& get(const std::string& name);

  std::size_t size() const { return entries_.size(); }
  std::size_t parameter_count() const;

  const std::vector<std::pair<std::string, Tensor>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Tensor>>& entries() { return entries_; }

  ParamStore clone() const;
  // Overwrites values (not gradients) from a store with identical layout.
  void copy_values_from(const ParamStore& other);
  void zero_grad();
  bool values_equal(const ParamStore& other) const;

 private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

// uniform(-bound, +bound) per element.
void init_uniform(Tensor& t, double bound, Rng& rng);

}  // namespace vmap::numerics
