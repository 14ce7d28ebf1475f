#pragma once

#include <span>

#include "vmap/core/rng.hpp"
#include "vmap/numerics/ops.hpp"
#include "vmap/numerics/params.hpp"

namespace vmap::numerics {

inline constexpr std::size_t kWordEmbeddingDim = 15;
inline constexpr std::size_t kLstmHiddenDim = 30;

// Single-layer LSTM over learned word embeddings. Gate blocks in the packed
// weights are ordered input, forget, candidate, output.
struct LstmWeights {
  Tensor embedding;  // [vocab x embed]
  Tensor w_input;    // [embed x 4*hidden]
  Tensor w_hidden;   // [hidden x 4*hidden]
  Tensor bias;       // [4*hidden]

  std::size_t vocab_size() const { return embedding.dim(0); }
  std::size_t hidden_dim() const { return w_hidden.dim(0); }
};

// Registers "<prefix>.embedding", ".w_input", ".w_hidden", ".bias" and
// initializes them (forget-gate bias 1).
LstmWeights add_lstm(ParamStore& params, const std::string& prefix, std::size_t vocab_size, Rng& rng,
                     std::size_t embed_dim = kWordEmbeddingDim, std::size_t hidden_dim = kLstmHiddenDim);
LstmWeights lstm_view(const ParamStore& params, const std::string& prefix);

// Final hidden state, shape [hidden].
Tensor lstm_encode(Tape& tape, std::span<const int> tokens, const LstmWeights& weights);

}  // namespace vmap::numerics
