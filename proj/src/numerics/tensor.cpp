#include "vmap/numerics/tensor.hpp"

#include <algorithm>
#include <sstream>

namespace vmap::numerics {

std::size_t shape_size(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return from(shape, std::vector<double>(shape_size(shape), 0.0), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one dimension");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape));
  }
  if (values.size() != shape_size(shape)) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_string(shape));
  }
  Tensor t;
  t.storage_ = std::make_shared<Storage>();
  t.storage_->shape = std::move(shape);
  t.storage_->data = std::move(values);
  t.storage_->requires_grad = requires_grad;
  if (requires_grad) t.storage_->grad.assign(t.storage_->data.size(), 0.0);
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({1}, {value}, requires_grad);
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string(shape()));
  return storage_->data[0];
}

void Tensor::zero_grad() const { std::fill(storage_->grad.begin(), storage_->grad.end(), 0.0); }

Tensor Tensor::clone() const {
  Tensor t;
  t.storage_ = std::make_shared<Storage>(*storage_);
  return t;
}

bool Tape::tracks(std::initializer_list<const Tensor*> inputs) const {
  if (!recording()) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->defined() && t->requires_grad(); });
}

void Tape::record(std::function<void()> backward) {
  if (consumed_) throw std::logic_error("Tape::record on a tape whose backward pass already ran");
  entries_.push_back(std::move(backward));
}

void Tape::backward(Tensor& loss) {
  if (consumed_) throw std::logic_error("Tape::backward called twice; re-run the forward pass");
  if (mode_ != Mode::kRecord) throw std::logic_error("Tape::backward on an inference tape");
  if (loss.size() != 1) throw ShapeError("backward requires a scalar loss, got " + shape_string(loss.shape()));
  if (!loss.requires_grad()) throw std::logic_error("backward: loss does not depend on any parameter");
  consumed_ = true;
  loss.grad()[0] += 1.0;
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
  entries_.clear();
}

}  // namespace vmap::numerics
