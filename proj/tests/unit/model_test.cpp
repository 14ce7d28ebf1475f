#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "vmap/model/model.hpp"
#include "vmap/numerics/checkpoint.hpp"
#include "vmap/numerics/gradcheck.hpp"
#include "vmap/numerics/ops.hpp"

namespace vmap::model {
namespace {

namespace nx = vmap::numerics;
using gridworld::generate_map;
using gridworld::kCellCount;
using gridworld::ObjectKind;
using gridworld::SymbolGrid;

constexpr std::size_t kVocab = 40;

std::vector<int> random_tokens(Rng& rng, std::size_t n) {
  std::vector<int> t(n);
  for (int& x : t) x = static_cast<int>(rng.index(kVocab));
  return t;
}

// Sum of squared error against a fixed random target; smooth in the output.
Tensor regression_loss(Tape& tape, const Tensor& out, const std::vector<double>& target) {
  return nx::mse(tape, out, target);
}

TEST(Arch, NamesRoundTrip) {
  for (Arch a : kArchs) EXPECT_EQ(arch_from_name(arch_name(a)), a);
  EXPECT_FALSE(arch_from_name("transformer"));
}

TEST(Shapes, EveryArchitectureEmitsOneHundredFiniteValues) {
  Rng rng(1);
  for (Arch a : kArchs) {
    const Model m = Model::create(a, kVocab, 3);
    for (int trial = 0; trial < 5; ++trial) {
      const auto map = generate_map(static_cast<std::uint64_t>(trial));
      const auto tokens = random_tokens(rng, 1 + rng.index(12));
      Tape tape(Tape::Mode::kInference);
      const Tensor out = m.forward(tape, map, {tokens, gridworld::sample_goal(map, rng)});
      ASSERT_EQ(out.shape(), (nx::Shape{1, 10, 10})) << arch_name(a);
      for (double v : out.data()) ASSERT_TRUE(std::isfinite(v));
    }
  }
}

TEST(Shapes, ForwardIsDeterministicAndSeedDependent) {
  const auto map = generate_map(4);
  const std::vector<int> tokens = {1, 5, 9, 2};
  for (Arch a : kArchs) {
    const Model m = Model::create(a, kVocab, 11);
    EXPECT_EQ(m.predict(map, {tokens, {3, 3}}), m.predict(map, {tokens, {3, 3}}));
    EXPECT_EQ(Model::create(a, kVocab, 11).predict(map, {tokens, {3, 3}}), m.predict(map, {tokens, {3, 3}}));
    EXPECT_NE(Model::create(a, kVocab, 12).predict(map, {tokens, {3, 3}}), m.predict(map, {tokens, {3, 3}}));
  }
}

TEST(Shapes, BadTokensRejected) {
  const Model m = Model::create(Arch::Spatial, kVocab, 1);
  const auto map = generate_map(1);
  const std::vector<int> none;
  const std::vector<int> outside = {static_cast<int>(kVocab)};
  EXPECT_THROW(m.predict(map, {none, {}}), ModelError);
  EXPECT_THROW(m.predict(map, {outside, {}}), ModelError);
  EXPECT_NO_THROW(Model::create(Arch::UvfaPos, 0, 1).predict(map, {none, {2, 2}}));
}

TEST(EncodeText, ZeroWeightsGiveZeroCode) {
  Model m = Model::create(Arch::Spatial, kVocab, 2);
  for (auto& [name, t] : m.params().entries()) {
    if (name.rfind("text", 0) == 0) std::fill(t.data().begin(), t.data().end(), 0.0);
  }
  Tape tape(Tape::Mode::kInference);
  const std::vector<int> tokens = {3, 4, 5};
  const TextCode code = m.encode_text(tape, tokens);
  for (double v : code.h1.data()) EXPECT_EQ(v, 0.0);
  for (double v : code.h2.data()) EXPECT_EQ(v, 0.0);
}

TEST(EncodeText, DimensionsFixedAndInstructionsDistinct) {
  const Model m = Model::create(Arch::Spatial, kVocab, 2);
  Rng rng(3);
  std::vector<std::vector<double>> codes;
  for (std::size_t n = 1; n <= 10; ++n) {
    Tape tape(Tape::Mode::kInference);
    const TextCode code = m.encode_text(tape, random_tokens(rng, n));
    ASSERT_EQ(code.h1.size(), 3u);
    ASSERT_EQ(code.h2.size(), 72u);
    std::vector<double> flat(code.h1.data().begin(), code.h1.data().end());
    flat.insert(flat.end(), code.h2.data().begin(), code.h2.data().end());
    for (const auto& previous : codes) EXPECT_NE(previous, flat);
    codes.push_back(flat);
  }
}

TEST(LocalMap, ZeroKernelGivesZeroPlane) {
  Rng rng(4);
  const auto symbols = gridworld::encode_categorical(generate_map(5));
  Tensor phi = Tensor::zeros({12, 8});
  nx::init_uniform(phi, 1.0, rng);
  Tape tape(Tape::Mode::kInference);
  const Tensor z1 = local_map(tape, symbols, Tensor::zeros({72}), phi);
  ASSERT_EQ(z1.shape(), (nx::Shape{1, 10, 10}));
  for (double v : z1.data()) EXPECT_EQ(v, 0.0);
}

TEST(LocalMap, CenterTapOnCircleChannelDetectsTheCircle) {
  const auto map = generate_map(6);
  const auto symbols = gridworld::encode_categorical(map);
  Tensor phi = Tensor::zeros({12, 8});
  phi[static_cast<std::size_t>(ObjectKind::Circle) * 8 + 0] = 1.0;
  Tensor h2 = Tensor::zeros({72});
  h2[0 * 9 + 4] = 1.0;  // channel 0, center tap
  Tape tape(Tape::Mode::kInference);
  const Tensor z1 = local_map(tape, symbols, h2, phi);
  const Cell circle = map.cells_of(ObjectKind::Circle).front();
  for (std::size_t i = 0; i < kCellCount; ++i) EXPECT_EQ(z1[i], i == circle.index() ? 1.0 : 0.0);
}

// Random symbols in a window on a grass background, shifted by (dr, dc).
SymbolGrid window(Rng& rng, std::vector<int>& pattern, int dr, int dc) {
  SymbolGrid g;
  g.fill(gridworld::kGrassSymbol);
  if (pattern.empty()) {
    for (int i = 0; i < 25; ++i) pattern.push_back(static_cast<int>(rng.index(12)));
  }
  for (int r = 0; r < 5; ++r) {
    for (int c = 0; c < 5; ++c) g[static_cast<std::size_t>((r + 2 + dr) * 10 + c + 2 + dc)] = pattern[static_cast<std::size_t>(r * 5 + c)];
  }
  return g;
}

TEST(LocalMap, TranslationEquivariantOnInterior) {
  Rng rng(7);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Tensor phi = Tensor::zeros({12, 8});
    Tensor h2 = Tensor::zeros({72});
    nx::init_uniform(phi, 1.0, rng);
    nx::init_uniform(h2, 1.0, rng);
    const int dr = static_cast<int>(rng.uniform_int(-1, 1));
    const int dc = static_cast<int>(rng.uniform_int(-1, 1));
    std::vector<int> pattern;
    const auto base = window(rng, pattern, 0, 0);
    const auto moved = window(rng, pattern, dr, dc);
    Tape tape(Tape::Mode::kInference);
    const Tensor a = local_map(tape, base, h2, phi);
    const Tensor b = local_map(tape, moved, h2, phi);
    for (int r = 1; r <= 8; ++r) {
      for (int c = 1; c <= 8; ++c) {
        const int r2 = r + dr, c2 = c + dc;
        if (r2 < 1 || r2 > 8 || c2 < 1 || c2 > 8) continue;
        worst = std::max(worst, std::abs(a[static_cast<std::size_t>(r * 10 + c)] - b[static_cast<std::size_t>(r2 * 10 + c2)]));
      }
    }
  }
  EXPECT_LT(worst, 1e-12);
}

TEST(GlobalMap, BasisPlanes) {
  const Tensor basis = gradient_basis();
  Tape tape(Tape::Mode::kInference);
  const Tensor constant = global_map(tape, Tensor::from({3}, {0, 0, 2.5}), basis);
  const Tensor rows = global_map(tape, Tensor::from({3}, {1, 0, 0}), basis);
  const Tensor corner = global_map(tape, Tensor::from({3}, {1, 1, 0}), basis);
  std::size_t best = 0;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    EXPECT_EQ(constant[i], 2.5);
    EXPECT_EQ(rows[i], basis[i]);
    EXPECT_EQ(rows[i], c.row / 9.0);
    EXPECT_EQ(basis[kCellCount + i], c.col / 9.0);
    EXPECT_GE(basis[i], 0.0);
    EXPECT_LE(basis[kCellCount + i], 1.0);
    if (corner[i] > corner[best]) best = i;
  }
  EXPECT_EQ(Cell::from_index(best), (Cell{9, 9}));
}

TEST(Ablation, MatchesFullModelWhenGlobalCodeIsZero) {
  Model full = Model::create(Arch::Spatial, kVocab, 5);
  // Identical parameters under the ablation architecture.
  Model ablation = Model::create(Arch::SpatialNoGrad, kVocab, 5);
  ablation.params().copy_values_from(full.params());
  const auto map = generate_map(8);
  const std::vector<int> tokens = {2, 7, 1, 8};
  EXPECT_NE(full.predict(map, {tokens, {}}), ablation.predict(map, {tokens, {}}));
  for (Model* m : {&full, &ablation}) {
    Tensor w = m->params().get("text.proj.w");
    Tensor b = m->params().get("text.proj.b");
    for (std::size_t r = 0; r < w.dim(0); ++r) {
      for (std::size_t c = 0; c < 3; ++c) w[r * w.dim(1) + c] = 0.0;
    }
    for (std::size_t c = 0; c < 3; ++c) b[c] = 0.0;
  }
  EXPECT_EQ(full.predict(map, {tokens, {}}), ablation.predict(map, {tokens, {}}));
}

TEST(ParameterCounts, SpatialAndAblationMatch) {
  const auto counts = parameter_counts(kVocab);
  ASSERT_EQ(counts.size(), 5u);
  EXPECT_EQ(counts.at("spatial"), counts.at("spatial-nograd"));
  // LSTM 40*15 + 15*120 + 30*120 + 120, projection 30*75 + 75, phi 96, and
  // the value CNN 2->3->6->12->6->3->1 with 3x3 kernels and biases.
  const std::size_t lstm = 40 * 15 + 15 * 120 + 30 * 120 + 120;
  const std::size_t cnn = (2 * 3 + 3 * 6 + 6 * 12 + 12 * 6 + 6 * 3 + 3 * 1) * 9 + (3 + 6 + 12 + 6 + 3 + 1);
  EXPECT_EQ(counts.at("spatial"), lstm + 30 * 75 + 75 + 96 + cnn);
  const std::size_t state = 1300 * 128 + 128 + 128 * 128 + 128 + 128 * 30 + 30;
  EXPECT_EQ(counts.at("uvfa-text"), state + lstm + 30 * 30 + 30);
  EXPECT_EQ(counts.at("uvfa-pos"), state + 2 * 128 + 128 + 128 * 30 + 30);
  EXPECT_EQ(counts.at("cnn-lstm"), 13 * 6 * 9 + 6 + 6 * 2 * 9 + 2 + lstm + 230 * 128 + 128 + 128 + 1);
}

// The per-cell UVFA value computed the slow way: a 1300-dimensional input
// vector for each candidate cell through an explicit MLP.
TEST(Uvfa, MatchesExplicitPerCellEvaluation) {
  for (Arch a : {Arch::UvfaText, Arch::UvfaPos}) {
    const Model m = Model::create(a, kVocab, 9);
    const auto map = generate_map(10);
    const std::vector<int> tokens = {4, 4, 19};
    const Cell goal{6, 2};
    const Grid fast = m.predict(map, {tokens, goal});

    const auto& p = m.params();
    const auto dense = [&](const std::vector<double>& x, const std::string& name, bool rectify) {
      const Tensor& w = p.get(name + ".w");
      const Tensor& b = p.get(name + ".b");
      std::vector<double> y(w.dim(1));
      for (std::size_t j = 0; j < y.size(); ++j) {
        double acc = b[j];
        for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * w[i * w.dim(1) + j];
        y[j] = rectify ? std::max(0.0, acc) : acc;
      }
      return y;
    };
    std::vector<double> g;
    if (a == Arch::UvfaText) {
      Tape tape(Tape::Mode::kInference);
      const Tensor h = nx::lstm_encode(tape, tokens, nx::lstm_view(p, "text"));
      g = dense(std::vector<double>(h.data().begin(), h.data().end()), "goal.0", false);
    } else {
      g = dense(dense({goal.row / 9.0, goal.col / 9.0}, "goal.0", true), "goal.1", false);
    }
    const Tensor planes = gridworld::encode_binary(map);
    for (std::size_t cell = 0; cell < kCellCount; ++cell) {
      std::vector<double> x(planes.data().begin(), planes.data().end());
      x.resize(1300, 0.0);
      x[1200 + cell] = 1.0;
      const auto s = dense(dense(dense(x, "state.0", true), "state.1", true), "state.2", false);
      double v = 0.0;
      for (std::size_t k = 0; k < s.size(); ++k) v += s[k] * g[k];
      ASSERT_NEAR(fast[cell], v, 1e-10) << arch_name(a);
    }
  }
}

TEST(Uvfa, ZeroGoalArmGivesZeroValues) {
  Model m = Model::create(Arch::UvfaPos, 0, 3);
  for (const char* n : {"goal.1.w", "goal.1.b"}) {
    Tensor t = m.params().get(n);
    std::fill(t.data().begin(), t.data().end(), 0.0);
  }
  for (double v : m.predict(generate_map(2), {{}, {1, 1}})) EXPECT_EQ(v, 0.0);
}

TEST(Uvfa, PositionGoalChangesOutput) {
  const Model m = Model::create(Arch::UvfaPos, 0, 3);
  const auto map = generate_map(2);
  EXPECT_NE(m.predict(map, {{}, {1, 1}}), m.predict(map, {{}, {7, 4}}));
}

TEST(CnnLstm, FarCellChangesEveryOutputButNotLocalMap) {
  const Model m = Model::create(Arch::CnnLstm, kVocab, 4);
  const auto base = generate_map(3);
  // Flip one water cell far from the bottom-right corner to grass, if any;
  // otherwise move an object.
  auto terrain = base.terrain();
  auto objects = base.objects();
  std::optional<Cell> flipped;
  for (std::size_t i = 0; i < kCellCount && !flipped; ++i) {
    if (terrain[i] == gridworld::Terrain::Water) {
      terrain[i] = gridworld::Terrain::Grass;
      flipped = Cell::from_index(i);
    }
  }
  ASSERT_TRUE(flipped);
  const WorldMap other(base.map_id(), base.seed(), terrain, objects);
  const std::vector<int> tokens = {1, 2, 3};
  const Grid a = m.predict(base, {tokens, {}});
  const Grid b = m.predict(other, {tokens, {}});
  for (std::size_t i = 0; i < kCellCount; ++i) EXPECT_NE(a[i], b[i]) << i;

  // local_map's response is confined to the 3x3 neighbourhood.
  Rng rng(5);
  Tensor phi = Tensor::zeros({12, 8});
  Tensor h2 = Tensor::zeros({72});
  nx::init_uniform(phi, 1.0, rng);
  nx::init_uniform(h2, 1.0, rng);
  Tape tape(Tape::Mode::kInference);
  const Tensor za = local_map(tape, gridworld::encode_categorical(base), h2, phi);
  const Tensor zb = local_map(tape, gridworld::encode_categorical(other), h2, phi);
  for (std::size_t i = 0; i < kCellCount; ++i) {
    const Cell c = Cell::from_index(i);
    if (std::max(std::abs(c.row - flipped->row), std::abs(c.col - flipped->col)) > 1) {
      EXPECT_EQ(za[i], zb[i]);
    }
  }
}

TEST(CnnLstm, ZeroHeadWeightsGiveTheBias) {
  Model m = Model::create(Arch::CnnLstm, kVocab, 4);
  Tensor w = m.params().get("head.1.w");
  std::fill(w.data().begin(), w.data().end(), 0.0);
  m.params().get("head.1.b")[0] = 0.37;
  const std::vector<int> tokens = {5};
  for (double v : m.predict(generate_map(1), {tokens, {}})) EXPECT_EQ(v, 0.37);
}

// Each cell's value from a 13-plane input (map planes plus that cell's agent
// indicator) through one concatenated kernel and explicit dense layers.
TEST(CnnLstm, MatchesExplicitPerCellEvaluation) {
  const Model m = Model::create(Arch::CnnLstm, kVocab, 8);
  const auto map = generate_map(11);
  const std::vector<int> tokens = {7, 1, 30};
  const Grid fast = m.predict(map, {tokens, {}});
  const auto& p = m.params();
  Tensor kernel = Tensor::zeros({6, 13, 3, 3});
  for (std::size_t o = 0; o < 6; ++o) {
    for (std::size_t i = 0; i < 13; ++i) {
      for (std::size_t t = 0; t < 9; ++t) {
        kernel[(o * 13 + i) * 9 + t] =
            i < 12 ? p.get("map.0.k")[(o * 12 + i) * 9 + t] : p.get("map.0.agent")[o * 9 + t];
      }
    }
  }
  Tape tape(Tape::Mode::kInference);
  const Tensor text = nx::lstm_encode(tape, tokens, nx::lstm_view(p, "text"));
  const Tensor planes = gridworld::encode_binary(map);
  for (std::size_t cell = 0; cell < kCellCount; ++cell) {
    Tensor input = Tensor::zeros({13, 10, 10});
    std::copy(planes.data().begin(), planes.data().end(), input.data().begin());
    input[12 * kCellCount + cell] = 1.0;
    Tensor x = nx::relu(tape, nx::add_bias(tape, nx::conv2d(tape, input, kernel), p.get("map.0.b")));
    x = nx::relu(tape, nx::add_bias(tape, nx::conv2d(tape, x, p.get("map.1.k")), p.get("map.1.b")));
    std::vector<double> joint(x.data().begin(), x.data().end());
    joint.insert(joint.end(), text.data().begin(), text.data().end());
    const Tensor& w0 = p.get("head.0.w");
    double v = p.get("head.1.b")[0];
    for (std::size_t j = 0; j < 128; ++j) {
      double acc = p.get("head.0.b")[j];
      for (std::size_t i = 0; i < joint.size(); ++i) acc += joint[i] * w0[i * 128 + j];
      v += std::max(0.0, acc) * p.get("head.1.w")[j];
    }
    ASSERT_NEAR(fast[cell], v, 1e-10) << cell;
  }
}

TEST(Gradients, WordEmbeddingGradientNonzeroExactlyForPresentTokens) {
  const Model m = Model::create(Arch::Spatial, kVocab, 6);
  const auto map = generate_map(4);
  const std::vector<int> tokens = {3, 17, 3, 22};
  std::vector<double> target(kCellCount, 1.0);
  Tape tape;
  Tensor loss = regression_loss(tape, m.forward(tape, map, {tokens, {}}), target);
  tape.backward(loss);
  const Tensor& emb = m.params().get("text.embedding");
  for (std::size_t w = 0; w < kVocab; ++w) {
    double norm = 0.0;
    for (std::size_t d = 0; d < emb.dim(1); ++d) norm += std::abs(emb.grad()[w * emb.dim(1) + d]);
    const bool present = w == 3 || w == 17 || w == 22;
    EXPECT_EQ(norm > 0.0, present) << "word " << w;
  }
  const_cast<Model&>(m).params().zero_grad();
}

class FullModelGradCheck : public ::testing::TestWithParam<Arch> {};

TEST_P(FullModelGradCheck, CentralDifferencesAgree) {
  Model m = Model::create(GetParam(), kVocab, 21);
  Rng rng(22);
  // Zero biases leave dead-input pre-activations exactly on the ReLU kink;
  // move off it so central differences see a smooth function.
  for (auto& [name, t] : m.params().entries()) {
    if (name.size() > 2 && name.ends_with(".b") && name.rfind("text", 0) != 0) nx::init_uniform(t, 0.1, rng);
  }
  const auto map = generate_map(13);
  const auto tokens = random_tokens(rng, 8);
  Tensor weights = Tensor::zeros({1, 10, 10});
  nx::init_uniform(weights, 1.0, rng);
  nx::GradCheckOptions opts;
  opts.max_coordinates = 150;
  opts.seed = 23;
  // Shifting one bias moves thousands of ReLU inputs; now and then one crosses
  // zero inside the step. Those coordinates are counted, not compared.
  opts.kink_tolerance = 1e-4;
  const auto report = nx::finite_diff_check(
      [&](Tape& tape) { return nx::sum(tape, nx::mul(tape, m.forward(tape, map, {tokens, {4, 6}}), weights)); }, m.params(),
      opts);
  EXPECT_GE(report.coordinates, 100u);
  EXPECT_LE(report.kinks, 3u);
  for (const auto& e : report.entries) {
    EXPECT_LT(e.max_relative_error, 1e-4) << arch_name(GetParam()) << " " << e.name;
  }
  EXPECT_LT(report.max_relative_error, 1e-4) << arch_name(GetParam());
}

INSTANTIATE_TEST_SUITE_P(AllArchitectures, FullModelGradCheck, ::testing::ValuesIn(kArchs),
                         [](const ::testing::TestParamInfo<Arch>& info) {
                           std::string n(arch_name(info.param));
                           std::replace(n.begin(), n.end(), '-', '_');
                           return n;
                         });

TEST(Checkpointing, SaveLoadReproducesPredictions) {
  const auto dir = std::filesystem::temp_directory_path() / "vmap_model_ckpt";
  std::filesystem::create_directories(dir);
  const auto map = generate_map(14);
  const std::vector<int> tokens = {0, 1, 2};
  for (Arch a : kArchs) {
    const Model m = Model::create(a, kVocab, 30);
    const auto path = dir / (std::string(arch_name(a)) + ".ckpt");
    m.save(path, {{"note", "x"}});
    std::map<std::string, std::string> meta;
    const Model back = Model::load(path, &meta);
    EXPECT_EQ(back.arch(), a);
    EXPECT_EQ(meta.at("arch"), arch_name(a));
    EXPECT_EQ(meta.at("note"), "x");
    EXPECT_EQ(back.predict(map, {tokens, {2, 2}}), m.predict(map, {tokens, {2, 2}}));
  }
  // A spatial payload under a UVFA header does not load.
  Model::create(Arch::Spatial, kVocab, 1).save(dir / "bad.ckpt", {});
  auto ck = nx::load_checkpoint(dir / "bad.ckpt");
  ck.metadata["arch"] = "uvfa-text";
  nx::save_checkpoint(dir / "bad.ckpt", ck.metadata, ck.params);
  EXPECT_THROW(Model::load(dir / "bad.ckpt"), ModelError);
  std::filesystem::remove_all(dir);
}

TEST(Cloning, CloneIsIndependent) {
  Model m = Model::create(Arch::Spatial, kVocab, 3);
  Model c = m.clone();
  EXPECT_TRUE(c.params().values_equal(m.params()));
  c.params().get("phi")[0] += 1.0;
  EXPECT_FALSE(c.params().values_equal(m.params()));
}

}  // namespace
}  // namespace vmap::model
