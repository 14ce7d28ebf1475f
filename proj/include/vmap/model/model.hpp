#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vmap/gridworld/encoding.hpp"
#include "vmap/numerics/lstm.hpp"
#include "vmap/numerics/params.hpp"

namespace vmap::model {

using gridworld::Cell;
using gridworld::Grid;
using gridworld::WorldMap;
using numerics::ParamStore;
using numerics::Tape;
using numerics::Tensor;

enum class Arch { Spatial, SpatialNoGrad, UvfaText, UvfaPos, CnnLstm };
inline constexpr std::array<Arch, 5> kArchs = {Arch::Spatial, Arch::SpatialNoGrad, Arch::UvfaText, Arch::UvfaPos,
                                               Arch::CnnLstm};

std::string_view arch_name(Arch arch);
std::optional<Arch> arch_from_name(std::string_view name);

inline constexpr std::size_t kCellEmbeddingDim = 8;
inline constexpr std::size_t kTextCodeDim = 75;  // 3 global + 8*3*3 kernel
inline constexpr std::array<std::size_t, 6> kValueCnnChannels = {3, 6, 12, 6, 3, 1};
inline constexpr std::size_t kMlpHidden = 128;
inline constexpr std::size_t kUvfaDim = 30;
inline constexpr std::array<std::size_t, 2> kCnnLstmChannels = {6, 2};

// What a forward pass conditions on besides the map. UVFA-pos reads only the
// goal; every other architecture reads only the tokens.
struct Query {
  std::span<const int> tokens;
  Cell goal;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// [3 x 100]: rows G1 (row / 9), G2 (col / 9) and J (ones).
Tensor gradient_basis();

// z1 = conv(phi(symbols), h2 as a 1x8x3x3 kernel), shape [1 x 10 x 10].
Tensor local_map(Tape& tape, const gridworld::SymbolGrid& symbols, const Tensor& h2, const Tensor& phi);
// z2 = h1[0] G1 + h1[1] G2 + h1[2] J, shape [1 x 10 x 10].
Tensor global_map(Tape& tape, const Tensor& h1, const Tensor& basis);

struct TextCode {
  Tensor h1;  // [3]
  Tensor h2;  // [72]
};

class Model {
 public:
  // Deterministic in (arch, vocab_size, seed).
  static Model create(Arch arch, std::size_t vocab_size, std::uint64_t seed);

  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  Arch arch() const { return arch_; }
  std::size_t vocab_size() const { return vocab_size_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }

  // Value map prediction, shape [1 x 10 x 10].
  Tensor forward(Tape& tape, const WorldMap& map, const Query& query) const;
  // Inference-only convenience.
  Grid predict(const WorldMap& map, const Query& query) const;

  // Spatial architectures only.
  TextCode encode_text(Tape& tape, std::span<const int> tokens) const;

  Model clone() const;

  std::map<std::string, std::string> metadata() const;
  void save(const std::filesystem::path& path, std::map<std::string, std::string> extra = {}) const;
  // Rebuilds the architecture named in the checkpoint header and checks the
  // parameter layout against it.
  static Model load(const std::filesystem::path& path, std::map<std::string, std::string>* metadata = nullptr);

 private:
  Model(Arch arch, std::size_t vocab_size);

  Tensor forward_spatial(Tape& tape, const WorldMap& map, std::span<const int> tokens, bool with_gradient) const;
  Tensor forward_uvfa(Tape& tape, const WorldMap& map, const Query& query) const;
  Tensor forward_cnn_lstm(Tape& tape, const WorldMap& map, std::span<const int> tokens) const;

  Arch arch_;
  std::size_t vocab_size_;
  ParamStore params_;
  Tensor basis_;
};

// Parameter counts for every architecture at one vocabulary size.
std::map<std::string, std::size_t> parameter_counts(std::size_t vocab_size);

}  // namespace vmap::model
