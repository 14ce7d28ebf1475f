#include "vmap/model/model.hpp"

#include <cmath>

#include "vmap/numerics/checkpoint.hpp"
#include "vmap/numerics/ops.hpp"

namespace vmap::model {
namespace {

namespace nx = vmap::numerics;
using gridworld::kCellCount;
using gridworld::kGridSize;
using gridworld::kSymbolCount;

constexpr std::size_t kStateInputDim = kSymbolCount * kCellCount + kCellCount;

// Layers feeding a rectifier use He-uniform bounds so activations keep their
// scale through depth; linear read-outs use 1/sqrt(fan_in).
enum class Init { Relu, Linear };

double init_bound(Init init, std::size_t fan_in) {
  const double n = static_cast<double>(fan_in);
  return init == Init::Relu ? std::sqrt(6.0 / n) : 1.0 / std::sqrt(n);
}

void add_linear(ParamStore& p, const std::string& name, std::size_t in, std::size_t out, Init init, Rng& rng) {
  Tensor w = p.add(name + ".w", {in, out});
  nx::init_uniform(w, init_bound(init, in), rng);
  p.add(name + ".b", {out});
}

void add_conv(ParamStore& p, const std::string& name, std::size_t in, std::size_t out, Init init, Rng& rng) {
  Tensor k = p.add(name + ".k", {out, in, 3, 3});
  nx::init_uniform(k, init_bound(init, in * 9), rng);
  p.add(name + ".b", {out});
}

// x: [m x in] -> [m x out]
Tensor linear(Tape& tape, const ParamStore& p, const std::string& name, const Tensor& x) {
  return nx::add_bias(tape, nx::matmul(tape, x, p.get(name + ".w")), p.get(name + ".b"));
}

Tensor conv(Tape& tape, const ParamStore& p, const std::string& name, const Tensor& x) {
  return nx::add_bias(tape, nx::conv2d(tape, x, p.get(name + ".k")), p.get(name + ".b"));
}

Tensor row_vector(Tape& tape, const Tensor& v) { return nx::reshape(tape, v, {1, v.size()}); }

void require_tokens(std::span<const int> tokens) {
  if (tokens.empty()) throw ModelError("instruction has no tokens");
}

bool uses_text(Arch a) { return a != Arch::UvfaPos; }
bool is_spatial(Arch a) { return a == Arch::Spatial || a == Arch::SpatialNoGrad; }

}  // namespace

std::string_view arch_name(Arch arch) {
  switch (arch) {
    case Arch::Spatial: return "spatial";
    case Arch::SpatialNoGrad: return "spatial-nograd";
    case Arch::UvfaText: return "uvfa-text";
    case Arch::UvfaPos: return "uvfa-pos";
    case Arch::CnnLstm: return "cnn-lstm";
  }
  return "?";
}

std::optional<Arch> arch_from_name(std::string_view name) {
  for (Arch a : kArchs) {
    if (arch_name(a) == name) return a;
  }
  return std::nullopt;
}

Tensor gradient_basis() {
  std::vector<double> v(3 * kCellCount);
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    v[i] = c.row / 9.0;
    v[kCellCount + i] = c.col / 9.0;
    v[2 * kCellCount + i] = 1.0;
  }
  return Tensor::from({3, kCellCount}, std::move(v));
}

Tensor local_map(Tape& tape, const gridworld::SymbolGrid& symbols, const Tensor& h2, const Tensor& phi) {
  if (h2.size() != kCellEmbeddingDim * 9) throw ModelError("h2 must hold 72 values");
  const Tensor grid = nx::embed_grid(tape, phi, symbols, kGridSize, kGridSize);
  const Tensor kernel = nx::reshape(tape, h2, {1, kCellEmbeddingDim, 3, 3});
  return nx::conv2d(tape, grid, kernel);
}

Tensor global_map(Tape& tape, const Tensor& h1, const Tensor& basis) {
  if (h1.size() != 3) throw ModelError("h1 must hold 3 values");
  const Tensor plane = nx::matmul(tape, row_vector(tape, h1), basis);
  return nx::reshape(tape, plane, {1, kGridSize, kGridSize});
}

Model::Model(Arch arch, std::size_t vocab_size) : arch_(arch), vocab_size_(vocab_size), basis_(gradient_basis()) {}

Model Model::create(Arch arch, std::size_t vocab_size, std::uint64_t seed) {
  if (uses_text(arch) && vocab_size == 0) throw ModelError("text architectures need a nonempty vocabulary");
  Model m(arch, vocab_size);
  Rng rng = Rng(seed).split(arch_name(arch));
  ParamStore& p = m.params_;
  switch (arch) {
    case Arch::Spatial:
    case Arch::SpatialNoGrad: {
      nx::add_lstm(p, "text", vocab_size, rng);
      add_linear(p, "text.proj", nx::kLstmHiddenDim, kTextCodeDim, Init::Linear, rng);
      Tensor phi = p.add("phi", {kSymbolCount, kCellEmbeddingDim});
      nx::init_uniform(phi, 1.0, rng);
      std::size_t in = 2;
      for (std::size_t i = 0; i < kValueCnnChannels.size(); ++i) {
        const bool last = i + 1 == kValueCnnChannels.size();
        add_conv(p, "cnn." + std::to_string(i), in, kValueCnnChannels[i], last ? Init::Linear : Init::Relu, rng);
        in = kValueCnnChannels[i];
      }
      break;
    }
    case Arch::UvfaText:
    case Arch::UvfaPos:
      add_linear(p, "state.0", kStateInputDim, kMlpHidden, Init::Relu, rng);
      add_linear(p, "state.1", kMlpHidden, kMlpHidden, Init::Relu, rng);
      add_linear(p, "state.2", kMlpHidden, kUvfaDim, Init::Linear, rng);
      if (arch == Arch::UvfaText) {
        nx::add_lstm(p, "text", vocab_size, rng);
        add_linear(p, "goal.0", nx::kLstmHiddenDim, kUvfaDim, Init::Linear, rng);
      } else {
        add_linear(p, "goal.0", 2, kMlpHidden, Init::Relu, rng);
        add_linear(p, "goal.1", kMlpHidden, kUvfaDim, Init::Linear, rng);
      }
      break;
    case Arch::CnnLstm: {
      // The first convolution reads 13 planes: 12 map planes plus the agent
      // indicator. Its kernel is stored as the map part and the agent part.
      const double bound = init_bound(Init::Relu, (kSymbolCount + 1) * 9);
      Tensor k = p.add("map.0.k", {kCnnLstmChannels[0], kSymbolCount, 3, 3});
      Tensor agent = p.add("map.0.agent", {kCnnLstmChannels[0], 1, 3, 3});
      nx::init_uniform(k, bound, rng);
      nx::init_uniform(agent, bound, rng);
      p.add("map.0.b", {kCnnLstmChannels[0]});
      add_conv(p, "map.1", kCnnLstmChannels[0], kCnnLstmChannels[1], Init::Relu, rng);
      nx::add_lstm(p, "text", vocab_size, rng);
      add_linear(p, "head.0", kCnnLstmChannels[1] * kCellCount + nx::kLstmHiddenDim, kMlpHidden, Init::Relu, rng);
      add_linear(p, "head.1", kMlpHidden, 1, Init::Linear, rng);
      break;
    }
  }
  return m;
}

TextCode Model::encode_text(Tape& tape, std::span<const int> tokens) const {
  if (!is_spatial(arch_)) throw ModelError("encode_text applies to the spatial architectures");
  require_tokens(tokens);
  const Tensor h = nx::lstm_encode(tape, tokens, nx::lstm_view(params_, "text"));
  const Tensor code = nx::reshape(tape, linear(tape, params_, "text.proj", row_vector(tape, h)), {kTextCodeDim});
  return {nx::slice(tape, code, 0, 3), nx::slice(tape, code, 3, kTextCodeDim - 3)};
}

Tensor Model::forward_spatial(Tape& tape, const WorldMap& map, std::span<const int> tokens, bool with_gradient) const {
  const TextCode code = encode_text(tape, tokens);
  const Tensor z1 = local_map(tape, gridworld::encode_categorical(map), code.h2, params_.get("phi"));
  const Tensor z2 = with_gradient ? global_map(tape, code.h1, basis_) : Tensor::zeros({1, kGridSize, kGridSize});
  const Tensor parts[] = {z1, z2};
  Tensor x = nx::concat(tape, parts);
  for (std::size_t i = 0; i < kValueCnnChannels.size(); ++i) {
    x = conv(tape, params_, "cnn." + std::to_string(i), x);
    if (i + 1 < kValueCnnChannels.size()) x = nx::relu(tape, x);
  }
  return x;
}

Tensor Model::forward_uvfa(Tape& tape, const WorldMap& map, const Query& query) const {
  // The first layer sees [map planes; one-hot agent cell] for each of the
  // 100 candidate cells. The map half is shared, so it is computed once and
  // broadcast onto the agent half's per-cell weight rows.
  const Tensor& w0 = params_.get("state.0.w");
  const std::size_t map_in = kSymbolCount * kCellCount;
  const Tensor w_map = nx::reshape(tape, nx::slice(tape, w0, 0, map_in * kMlpHidden), {map_in, kMlpHidden});
  const Tensor w_agent =
      nx::reshape(tape, nx::slice(tape, w0, map_in * kMlpHidden, kCellCount * kMlpHidden), {kCellCount, kMlpHidden});
  const Tensor planes = gridworld::encode_binary(map);
  const Tensor x_map = Tensor::from({1, map_in}, std::vector<double>(planes.data().begin(), planes.data().end()));
  Tensor shared = nx::reshape(tape, nx::matmul(tape, x_map, w_map), {kMlpHidden});
  shared = nx::add(tape, shared, params_.get("state.0.b"));
  Tensor h = nx::relu(tape, nx::add_bias(tape, w_agent, shared));
  h = nx::relu(tape, linear(tape, params_, "state.1", h));
  const Tensor state = linear(tape, params_, "state.2", h);  // [100 x d]

  Tensor goal;
  if (arch_ == Arch::UvfaText) {
    require_tokens(query.tokens);
    const Tensor t = nx::lstm_encode(tape, query.tokens, nx::lstm_view(params_, "text"));
    goal = linear(tape, params_, "goal.0", row_vector(tape, t));
  } else {
    if (!query.goal.on_grid()) throw ModelError("goal coordinate off the grid");
    const Tensor xy = Tensor::from({1, 2}, {query.goal.row / 9.0, query.goal.col / 9.0});
    goal = linear(tape, params_, "goal.1", nx::relu(tape, linear(tape, params_, "goal.0", xy)));
  }
  const Tensor values = nx::matmul(tape, state, nx::reshape(tape, goal, {kUvfaDim, 1}));
  return nx::reshape(tape, values, {1, kGridSize, kGridSize});
}

Tensor Model::forward_cnn_lstm(Tape& tape, const WorldMap& map, std::span<const int> tokens) const {
  require_tokens(tokens);
  // conv([map; agent]) = conv(map) + conv(agent): the map half is shared by
  // all candidate cells.
  const Tensor shared = nx::conv2d(tape, gridworld::encode_binary(map), params_.get("map.0.k"));
  const Tensor& agent_kernel = params_.get("map.0.agent");
  const std::size_t code_dim = kCnnLstmChannels[1] * kCellCount;
  std::vector<Tensor> codes;
  codes.reserve(kCellCount);
  for (std::size_t cell = 0; cell < kCellCount; ++cell) {
    Tensor agent = Tensor::zeros({1, kGridSize, kGridSize});
    agent[cell] = 1.0;
    Tensor x = nx::add(tape, shared, nx::conv2d(tape, agent, agent_kernel));
    x = nx::relu(tape, nx::add_bias(tape, x, params_.get("map.0.b")));
    x = nx::relu(tape, conv(tape, params_, "map.1", x));
    codes.push_back(nx::reshape(tape, x, {1, code_dim}));
  }
  const Tensor state = nx::concat(tape, codes);  // [100 x 200]

  // The head's first layer splits into state rows and instruction rows; the
  // instruction part is the same for every cell and acts as a shared bias.
  const Tensor& w0 = params_.get("head.0.w");
  const Tensor w_state = nx::reshape(tape, nx::slice(tape, w0, 0, code_dim * kMlpHidden), {code_dim, kMlpHidden});
  const Tensor w_text = nx::reshape(tape, nx::slice(tape, w0, code_dim * kMlpHidden, nx::kLstmHiddenDim * kMlpHidden),
                                    {nx::kLstmHiddenDim, kMlpHidden});
  const Tensor text = nx::lstm_encode(tape, tokens, nx::lstm_view(params_, "text"));
  Tensor bias = nx::reshape(tape, nx::matmul(tape, row_vector(tape, text), w_text), {kMlpHidden});
  bias = nx::add(tape, bias, params_.get("head.0.b"));
  const Tensor h = nx::relu(tape, nx::add_bias(tape, nx::matmul(tape, state, w_state), bias));
  return nx::reshape(tape, linear(tape, params_, "head.1", h), {1, kGridSize, kGridSize});
}

Tensor Model::forward(Tape& tape, const WorldMap& map, const Query& query) const {
  for (int t : uses_text(arch_) ? query.tokens : std::span<const int>{}) {
    if (t < 0 || static_cast<std::size_t>(t) >= vocab_size_) throw ModelError("token id out of vocabulary range");
  }
  switch (arch_) {
    case Arch::Spatial: return forward_spatial(tape, map, query.tokens, true);
    case Arch::SpatialNoGrad: return forward_spatial(tape, map, query.tokens, false);
    case Arch::UvfaText:
    case Arch::UvfaPos: return forward_uvfa(tape, map, query);
    case Arch::CnnLstm: return forward_cnn_lstm(tape, map, query.tokens);
  }
  throw ModelError("unknown architecture");
}

Grid Model::predict(const WorldMap& map, const Query& query) const {
  Tape tape(Tape::Mode::kInference);
  const Tensor out = forward(tape, map, query);
  Grid g{};
  for (std::size_t i = 0; i < kCellCount; ++i) g[i] = out[i];
  return g;
}

Model Model::clone() const {
  Model m(arch_, vocab_size_);
  m.params_ = params_.clone();
  return m;
}

std::map<std::string, std::string> Model::metadata() const {
  return {{"arch", std::string(arch_name(arch_))},
          {"vocab_size", std::to_string(vocab_size_)},
          {"parameter_count", std::to_string(params_.parameter_count())}};
}

void Model::save(const std::filesystem::path& path, std::map<std::string, std::string> extra) const {
  for (auto& [k, v] : metadata()) extra[k] = v;
  nx::save_checkpoint(path, extra, params_);
}

Model Model::load(const std::filesystem::path& path, std::map<std::string, std::string>* metadata) {
  nx::Checkpoint ck = nx::load_checkpoint(path);
  const auto field = [&](const std::string& key) {
    const auto it = ck.metadata.find(key);
    if (it == ck.metadata.end()) throw ModelError(path.string() + ": checkpoint lacks '" + key + "'");
    return it->second;
  };
  const auto arch = arch_from_name(field("arch"));
  if (!arch) throw ModelError(path.string() + ": unknown architecture '" + field("arch") + "'");
  std::size_t vocab = 0;
  try {
    vocab = std::stoul(field("vocab_size"));
  } catch (const std::logic_error&) {
    throw ModelError(path.string() + ": bad vocab_size");
  }
  Model m = create(*arch, vocab, 0);
  const auto& want = m.params_.entries();
  const auto& got = ck.params.entries();
  if (want.size() != got.size()) throw ModelError(path.string() + ": parameter layout does not match " + field("arch"));
  for (std::size_t i = 0; i < want.size(); ++i) {
    if (want[i].first != got[i].first || want[i].second.shape() != got[i].second.shape())
      throw ModelError(path.string() + ": parameter '" + got[i].first + "' does not match " + field("arch"));
  }
  m.params_.copy_values_from(ck.params);
  if (metadata) *metadata = std::move(ck.metadata);
  return m;
}

std::map<std::string, std::size_t> parameter_counts(std::size_t vocab_size) {
  std::map<std::string, std::size_t> out;
  for (Arch a : kArchs) out[std::string(arch_name(a))] = Model::create(a, vocab_size, 0).params().parameter_count();
  return out;
}

}  // namespace vmap::model
