#include "vmap/numerics/params.hpp"

#include <algorithm>

namespace vmap::numerics {

Tensor ParamStore::add(const std::string& name, Shape shape) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter '" + name + "'");
  entries_.emplace_back(name, Tensor::zeros(std::move(shape), true));
  return entries_.back().second;
}

bool ParamStore::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

const Tensor& ParamStore::get(const std::string& name) const {
  for (const auto& [n, t] : entries_) {
    if (n == name) return t;
  }
  throw std::out_of_range("ParamStore: no parameter '" + name + "'");
}

Tensor& ParamStore::get(const std::string& name) {
  return const_cast<Tensor&>(std::as_const(*this).get(name));
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

ParamStore ParamStore::clone() const {
  ParamStore copy;
  copy.entries_.reserve(entries_.size());
  for (const auto& [name, t] : entries_) copy.entries_.emplace_back(name, t.clone());
  return copy;
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.entries_.size() != entries_.size()) throw std::invalid_argument("ParamStore: layout mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto& [name, t] = entries_[i];
    const auto& [oname, ot] = other.entries_[i];
    if (name != oname || t.shape() != ot.shape()) {
      throw std::invalid_argument("ParamStore: layout mismatch at '" + name + "'");
    }
    std::copy(ot.data().begin(), ot.data().end(), t.data().begin());
  }
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : entries_) t.zero_grad();
}

bool ParamStore::values_equal(const ParamStore& other) const {
  if (other.entries_.size() != entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& a = entries_[i];
    const auto& b = other.entries_[i];
    if (a.first != b.first || a.second.shape() != b.second.shape()) return false;
    if (!std::equal(a.second.data().begin(), a.second.data().end(), b.second.data().begin())) return false;
  }
  return true;
}

void init_uniform(Tensor& t, double bound, Rng& rng) {
  for (double& v : t.data()) v = rng.uniform(-bound, bound);
}

}  // namespace vmap::numerics
