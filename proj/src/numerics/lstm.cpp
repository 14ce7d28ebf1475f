#include "vmap/numerics/lstm.hpp"

#include <cmath>

namespace vmap::numerics {

LstmWeights add_lstm(ParamStore& params, const std::string& prefix, std::size_t vocab_size, Rng& rng,
                     std::size_t embed_dim, std::size_t hidden_dim) {
  LstmWeights w;
  w.embedding = params.add(prefix + ".embedding", {vocab_size, embed_dim});
  w.w_input = params.add(prefix + ".w_input", {embed_dim, 4 * hidden_dim});
  w.w_hidden = params.add(prefix + ".w_hidden", {hidden_dim, 4 * hidden_dim});
  w.bias = params.add(prefix + ".bias", {4 * hidden_dim});
  init_uniform(w.embedding, 1.0, rng);
  init_uniform(w.w_input, 1.0 / std::sqrt(static_cast<double>(embed_dim)), rng);
  init_uniform(w.w_hidden, 1.0 / std::sqrt(static_cast<double>(hidden_dim)), rng);
  for (std::size_t j = hidden_dim; j < 2 * hidden_dim; ++j) w.bias[j] = 1.0;
  return w;
}

LstmWeights lstm_view(const ParamStore& params, const std::string& prefix) {
  return {params.get(prefix + ".embedding"), params.get(prefix + ".w_input"), params.get(prefix + ".w_hidden"),
          params.get(prefix + ".bias")};
}

Tensor lstm_encode(Tape& tape, std::span<const int> tokens, const LstmWeights& weights) {
  if (tokens.empty()) throw std::invalid_argument("lstm_encode: empty token sequence");
  const std::size_t hidden = weights.hidden_dim();
  const std::size_t embed = weights.embedding.dim(1);
  if (weights.w_input.shape() != Shape{embed, 4 * hidden} || weights.bias.shape() != Shape{4 * hidden}) {
    throw ShapeError("lstm_encode: inconsistent weight shapes");
  }
  for (int id : tokens) {
    if (id < 0 || static_cast<std::size_t>(id) >= weights.vocab_size()) {
      throw std::out_of_range("lstm_encode: token id " + std::to_string(id) + " outside vocabulary of size " +
                              std::to_string(weights.vocab_size()));
    }
  }

  Tensor inputs = embedding(tape, weights.embedding, tokens);               // [T x embed]
  Tensor projected = matmul(tape, inputs, weights.w_input);                 // [T x 4h]
  projected = add_bias(tape, projected, weights.bias);
  Tensor h = Tensor::zeros({hidden});
  Tensor c = Tensor::zeros({hidden});
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    Tensor x_part = slice(tape, projected, t * 4 * hidden, 4 * hidden);
    Tensor h_row = reshape(tape, h, {1, hidden});
    Tensor gates = add(tape, x_part, reshape(tape, matmul(tape, h_row, weights.w_hidden), {4 * hidden}));
    Tensor i = sigmoid(tape, slice(tape, gates, 0, hidden));
    Tensor f = sigmoid(tape, slice(tape, gates, hidden, hidden));
    Tensor g = tanh(tape, slice(tape, gates, 2 * hidden, hidden));
    Tensor o = sigmoid(tape, slice(tape, gates, 3 * hidden, hidden));
    c = add(tape, mul(tape, f, c), mul(tape, i, g));
    h = mul(tape, o, tanh(tape, c));
  }
  return h;
}

}  // namespace vmap::numerics
