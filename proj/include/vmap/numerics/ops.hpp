#pragma once

#include <span>

#include "vmap/numerics/tensor.hpp"

// Differentiable tensor operations. Each op computes its output eagerly and,
// when the tape is recording and an input tracks gradients, records a backward
// closure that accumulates into the inputs' gradient buffers.
namespace vmap::numerics {

// [m x k] x [k x n] -> [m x n]
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);

// Elementwise over equal shapes.
Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);

// Adds bias[n] to each row of [m x n], or bias[C] to each channel of [C x H x W].
Tensor add_bias(Tape& tape, const Tensor& x, const Tensor& bias);

Tensor relu(Tape& tape, const Tensor& x);
Tensor sigmoid(Tape& tape, const Tensor& x);
Tensor tanh(Tape& tape, const Tensor& x);

// Concatenates along the leading axis; trailing dimensions must agree.
Tensor concat(Tape& tape, std::span<const Tensor> parts);

Tensor reshape(Tape& tape, const Tensor& x, Shape shape);

// Flat slice [offset, offset + count) returned with shape [count].
Tensor slice(Tape& tape, const Tensor& x, std::size_t offset, std::size_t count);

// Row lookup: table [rows x d], ids in [0, rows) -> [ids.size() x d].
Tensor embedding(Tape& tape, const Tensor& table, std::span<const int> ids);

// Per-cell symbol lookup laid out channel-first: table [symbols x d] and
// height*width ids -> [d x height x width].
Tensor embed_grid(Tape& tape, const Tensor& table, std::span<const int> ids, std::size_t height,
                  std::size_t width);

// 3x3 cross-correlation with zero padding 1: input [C_in x H x W],
// kernel [C_out x C_in x 3 x 3] -> [C_out x H x W].
Tensor conv2d(Tape& tape, const Tensor& input, const Tensor& kernel);

// Flat gather -> [indices.size()].
Tensor gather(Tape& tape, const Tensor& x, std::span<const std::size_t> indices);

Tensor sum(Tape& tape, const Tensor& x);

// Mean of (x - target)^2 over all elements; target is a constant.
Tensor mse(Tape& tape, const Tensor& x, std::span<const double> target);

}  // namespace vmap::numerics
