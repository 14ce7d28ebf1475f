#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vmap::numerics {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Dense row-major tensor of doubles. Copies share storage, as with the handles
// of most autodiff libraries; use clone() for an independent copy.
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return storage_ != nullptr; }
  const Shape& shape() const { return storage_->shape; }
  std::size_t rank() const { return storage_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return storage_->shape.at(axis); }
  std::size_t size() const { return storage_->data.size(); }

  std::span<double> data() { return storage_->data; }
  std::span<const double> data() const { return storage_->data; }
  double& operator[](std::size_t i) { return storage_->data[i]; }
  double operator[](std::size_t i) const { return storage_->data[i]; }
  double item() const;

  bool requires_grad() const { return storage_->requires_grad; }
  // Empty span when the tensor does not track gradients. The gradient buffer is
  // writable through const handles so backward closures can accumulate into it.
  std::span<double> grad() const { return storage_->grad; }
  void zero_grad() const;

  Tensor clone() const;
  bool same_storage(const Tensor& other) const { return storage_ == other.storage_; }

 private:
  struct Storage {
    Shape shape;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
  };

  std::shared_ptr<Storage> storage_;
};

// Records the backward closures of executed operations. A tape is single-use:
// backward() runs once, in strict reverse order, and a second call throws.
class Tape {
 public:
  enum class Mode { kRecord, kInference };

  explicit Tape(Mode mode = Mode::kRecord) : mode_(mode) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return mode_ == Mode::kRecord && !consumed_; }
  std::size_t size() const { return entries_.size(); }

  // True when an op over these inputs must produce a gradient-tracking output.
  bool tracks(std::initializer_list<const Tensor*> inputs) const;

  void record(std::function<void()> backward);

  // Seeds d(loss)/d(loss) = 1 and propagates to every reachable tensor.
  void backward(Tensor& loss);

 private:
  Mode mode_;
  bool consumed_ = false;
  std::vector<std::function<void()>> entries_;
};

}  // namespace vmap::numerics
