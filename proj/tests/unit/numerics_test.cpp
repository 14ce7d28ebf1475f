#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "vmap/numerics/adam.hpp"
#include "vmap/numerics/checkpoint.hpp"
#include "vmap/numerics/gradcheck.hpp"
#include "vmap/numerics/lstm.hpp"
#include "vmap/numerics/ops.hpp"

namespace vmap::numerics {
namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool requires_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), requires_grad);
  for (double& v : t.data()) v = rng.uniform(-1.0, 1.0);
  return t;
}

Tensor add_random(ParamStore& params, const std::string& name, Shape shape, Rng& rng) {
  Tensor t = params.add(name, std::move(shape));
  init_uniform(t, 1.0, rng);
  return t;
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  Tape tape(Tape::Mode::kInference);
  Tensor eye = Tensor::from({2, 2}, {1, 0, 0, 1});
  Tensor b = Tensor::from({2, 2}, {5, 6, 7, 8});
  Tensor c = matmul(tape, eye, b);
  EXPECT_EQ(c.shape(), (Shape{2, 2}));
  EXPECT_EQ(std::vector<double>(c.data().begin(), c.data().end()), (std::vector<double>{5, 6, 7, 8}));
}

TEST(Matmul, RowTimesColumn) {
  Tape tape(Tape::Mode::kInference);
  Tensor c = matmul(tape, Tensor::from({1, 2}, {1, 2}), Tensor::from({2, 1}, {3, 4}));
  EXPECT_EQ(c.shape(), (Shape{1, 1}));
  EXPECT_DOUBLE_EQ(c.item(), 11.0);
}

TEST(Matmul, GradientOfSumIsOnesTimesBTransposed) {
  Rng rng(7);
  Tensor a = random_tensor({3, 4}, rng, true);
  Tensor b = random_tensor({4, 2}, rng);
  Tape tape;
  Tensor loss = sum(tape, matmul(tape, a, b));
  tape.backward(loss);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t p = 0; p < 4; ++p) {
      EXPECT_NEAR(a.grad()[i * 4 + p], b[p * 2] + b[p * 2 + 1], 1e-14);
    }
  }
}

TEST(Matmul, MatchesFiniteDifferences) {
  Rng rng(11);
  ParamStore params;
  Tensor a = add_random(params, "a", {3, 4}, rng);
  Tensor b = add_random(params, "b", {4, 2}, rng);
  Tensor weights = random_tensor({3, 2}, rng);
  auto report = finite_diff_check(
      [&](Tape& tape) { return sum(tape, mul(tape, matmul(tape, a, b), weights)); }, params);
  EXPECT_EQ(report.coordinates, 20u);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(Matmul, ShapeMismatchReportsDimensions) {
  Tape tape;
  try {
    matmul(tape, Tensor::zeros({2, 3}), Tensor::zeros({2, 3}));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("[2x3]"), std::string::npos);
  }
}

TEST(Conv2d, DeltaKernelIsIdentity) {
  Rng rng(3);
  Tensor input = random_tensor({1, 5, 6}, rng);
  Tensor kernel = Tensor::zeros({1, 1, 3, 3});
  kernel[4] = 1.0;
  Tape tape(Tape::Mode::kInference);
  Tensor out = conv2d(tape, input, kernel);
  ASSERT_EQ(out.shape(), input.shape());
  for (std::size_t i = 0; i < input.size(); ++i) EXPECT_DOUBLE_EQ(out[i], input[i]);
}

TEST(Conv2d, OnesKernelCountsPaddedSupport) {
  Tensor input = Tensor::from({1, 4, 4}, std::vector<double>(16, 1.0));
  Tensor kernel = Tensor::from({1, 1, 3, 3}, std::vector<double>(9, 1.0));
  Tape tape(Tape::Mode::kInference);
  Tensor out = conv2d(tape, input, kernel);
  const double expected[16] = {4, 6, 6, 4, 6, 9, 9, 6, 6, 9, 9, 6, 4, 6, 6, 4};
  for (std::size_t i = 0; i < 16; ++i) EXPECT_DOUBLE_EQ(out[i], expected[i]) << "cell " << i;
}

TEST(Conv2d, KernelIsNotFlipped) {
  // A single tap at the top-left reads the north-west neighbour.
  Tensor input = Tensor::zeros({1, 3, 3});
  input[0] = 1.0;
  Tensor kernel = Tensor::zeros({1, 1, 3, 3});
  kernel[0] = 1.0;
  Tape tape(Tape::Mode::kInference);
  Tensor out = conv2d(tape, input, kernel);
  EXPECT_DOUBLE_EQ(out[4], 1.0);
  EXPECT_DOUBLE_EQ(out[0], 0.0);
}

TEST(Conv2d, MatchesFiniteDifferences) {
  Rng rng(5);
  ParamStore params;
  Tensor input = add_random(params, "input", {2, 5, 5}, rng);
  Tensor kernel = add_random(params, "kernel", {3, 2, 3, 3}, rng);
  Tensor weights = random_tensor({3, 5, 5}, rng);
  auto report = finite_diff_check(
      [&](Tape& tape) { return sum(tape, mul(tape, conv2d(tape, input, kernel), weights)); }, params);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(Conv2d, ChannelMismatchRejected) {
  Tape tape;
  EXPECT_THROW(conv2d(tape, Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 3, 3, 3})), ShapeError);
  EXPECT_THROW(conv2d(tape, Tensor::zeros({2, 4, 4}), Tensor::zeros({1, 2, 5, 5})), ShapeError);
}

TEST(Conv2d, OutputSpatialShapeEqualsInputForAllSizes) {
  Rng rng(9);
  for (std::size_t h = 1; h <= 7; ++h) {
    for (std::size_t w = 1; w <= 7; ++w) {
      Tape tape(Tape::Mode::kInference);
      Tensor out = conv2d(tape, random_tensor({2, h, w}, rng), random_tensor({3, 2, 3, 3}, rng));
      EXPECT_EQ(out.shape(), (Shape{3, h, w}));
    }
  }
}

// Every differentiable op against central differences on random inputs.
TEST(OpGradients, AllOpsMatchFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(100 + seed);
    ParamStore params;
    Tensor x = add_random(params, "x", {3, 4}, rng);
    Tensor y = add_random(params, "y", {3, 4}, rng);
    Tensor bias = add_random(params, "bias", {4}, rng);
    Tensor channel_bias = add_random(params, "channel_bias", {2}, rng);
    Tensor table = add_random(params, "table", {5, 2}, rng);
    const std::vector<int> ids = {4, 0, 2, 2, 1, 3};
    const std::vector<std::size_t> picks = {0, 5, 5, 11};
    std::vector<double> target(12);
    for (double& t : target) t = rng.uniform(-1.0, 1.0);

    auto loss_fn = [&](Tape& tape) {
      Tensor a = add_bias(tape, mul(tape, x, y), bias);
      Tensor b = sub(tape, tanh(tape, a), scale(tape, sigmoid(tape, x), 0.7));
      Tensor c = relu(tape, add(tape, b, y));
      Tensor grid = embed_grid(tape, table, ids, 2, 3);                         // [2 x 2 x 3]
      Tensor grid_b = add_bias(tape, grid, channel_bias);
      Tensor rows = embedding(tape, table, ids);                                // [6 x 2]
      Tensor flat = concat(tape, std::vector<Tensor>{reshape(tape, c, {12}), reshape(tape, grid_b, {12}),
                                                     reshape(tape, rows, {12})});
      Tensor part = slice(tape, flat, 6, 20);
      Tensor picked = gather(tape, part, picks);
      return add(tape, mse(tape, slice(tape, flat, 12, 12), target), sum(tape, mul(tape, picked, picked)));
    };
    auto report = finite_diff_check(loss_fn, params);
    EXPECT_LT(report.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(TapeTest, SecondBackwardIsRejected) {
  Tensor a = Tensor::from({1}, {2.0}, true);
  Tape tape;
  Tensor loss = mul(tape, a, a);
  tape.backward(loss);
  EXPECT_DOUBLE_EQ(a.grad()[0], 4.0);
  EXPECT_THROW(tape.backward(loss), std::logic_error);
  EXPECT_DOUBLE_EQ(a.grad()[0], 4.0);
}

TEST(TapeTest, InferenceTapeRecordsNothing) {
  Tensor a = Tensor::from({1}, {2.0}, true);
  Tape tape(Tape::Mode::kInference);
  Tensor out = mul(tape, a, a);
  EXPECT_FALSE(out.requires_grad());
  EXPECT_EQ(tape.size(), 0u);
}

TEST(TapeTest, BackwardVisitsOperationsInReverseOrder) {
  std::vector<int> order;
  Tensor a = Tensor::from({1}, {1.0}, true);
  Tape tape;
  tape.record([&] { order.push_back(1); });
  tape.record([&] { order.push_back(2); });
  Tensor loss = scale(tape, a, 3.0);
  tape.backward(loss);
  EXPECT_EQ(order, (std::vector<int>{2, 1}));
}

LstmWeights tiny_lstm(ParamStore& params, std::size_t vocab, Rng& rng) {
  return add_lstm(params, "lstm", vocab, rng, 3, 2);
}

TEST(Lstm, ZeroWeightsGiveZeroHiddenState) {
  Rng rng(1);
  ParamStore params;
  LstmWeights w = add_lstm(params, "lstm", 6, rng);
  for (auto& [name, t] : params.entries()) {
    for (double& v : t.data()) v = 0.0;
  }
  Tape tape(Tape::Mode::kInference);
  const std::vector<int> tokens = {1, 3, 5, 0};
  Tensor h = lstm_encode(tape, tokens, w);
  ASSERT_EQ(h.shape(), (Shape{kLstmHiddenDim}));
  for (double v : h.data()) EXPECT_EQ(v, 0.0);
}

TEST(Lstm, SingleTokenMatchesHandCellStep) {
  Rng rng(2);
  ParamStore params;
  LstmWeights w = tiny_lstm(params, 4, rng);
  for (double& v : w.bias.data()) v = rng.uniform(-1.0, 1.0);
  const int token = 2;
  Tape tape(Tape::Mode::kInference);
  Tensor h = lstm_encode(tape, std::vector<int>{token}, w);

  // Independent scalar evaluation of one cell step with zero initial state.
  const std::size_t hidden = 2, embed = 3;
  auto sigma = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t j = 0; j < hidden; ++j) {
    double pre[4];
    for (std::size_t gate = 0; gate < 4; ++gate) {
      const std::size_t col = gate * hidden + j;
      double s = w.bias[col];
      for (std::size_t e = 0; e < embed; ++e) s += w.embedding[token * embed + e] * w.w_input[e * 4 * hidden + col];
      pre[gate] = s;
    }
    const double c = sigma(pre[0]) * std::tanh(pre[2]);
    const double expected = sigma(pre[3]) * std::tanh(c);
    EXPECT_NEAR(h[j], expected, 1e-15);
  }
}

TEST(Lstm, OrderSensitive) {
  Rng rng(3);
  ParamStore params;
  LstmWeights w = add_lstm(params, "lstm", 8, rng);
  Tape tape(Tape::Mode::kInference);
  Tensor forward = lstm_encode(tape, std::vector<int>{1, 4, 6}, w);
  Tensor swapped = lstm_encode(tape, std::vector<int>{4, 1, 6}, w);
  double diff = 0.0;
  for (std::size_t i = 0; i < forward.size(); ++i) diff = std::max(diff, std::abs(forward[i] - swapped[i]));
  EXPECT_GT(diff, 1e-6);
}

TEST(Lstm, RejectsEmptyAndOutOfRangeTokens) {
  Rng rng(4);
  ParamStore params;
  LstmWeights w = add_lstm(params, "lstm", 5, rng);
  Tape tape;
  EXPECT_THROW(lstm_encode(tape, std::vector<int>{}, w), std::invalid_argument);
  EXPECT_THROW(lstm_encode(tape, std::vector<int>{1, 5}, w), std::out_of_range);
  EXPECT_THROW(lstm_encode(tape, std::vector<int>{-1}, w), std::out_of_range);
}

TEST(Lstm, MatchesFiniteDifferences) {
  Rng rng(5);
  ParamStore params;
  LstmWeights w = tiny_lstm(params, 5, rng);
  Tensor readout = random_tensor({2}, rng);
  const std::vector<int> tokens = {3, 1, 4, 1, 0};
  auto report = finite_diff_check(
      [&](Tape& tape) { return sum(tape, mul(tape, lstm_encode(tape, tokens, w), readout)); }, params);
  EXPECT_LT(report.max_relative_error, 1e-4);
}

TEST(Lstm, ForgetGateBiasStartsAtOne) {
  Rng rng(6);
  ParamStore params;
  LstmWeights w = add_lstm(params, "lstm", 3, rng);
  for (std::size_t j = 0; j < 4 * kLstmHiddenDim; ++j) {
    const bool forget = j >= kLstmHiddenDim && j < 2 * kLstmHiddenDim;
    EXPECT_EQ(w.bias[j], forget ? 1.0 : 0.0);
  }
}

TEST(Adam, ZeroGradientIsNoOpAndCountsSteps) {
  Rng rng(1);
  ParamStore params;
  add_random(params, "w", {4, 3}, rng);
  ParamStore before = params.clone();
  AdamState state(params, {});
  for (int t = 1; t <= 50; ++t) {
    adam_step(params, state);
    EXPECT_EQ(state.step_count, t);
  }
  EXPECT_TRUE(params.values_equal(before));
}

TEST(Adam, FirstStepMovesByLearningRate) {
  ParamStore params;
  Tensor p = params.add("p", {1});
  AdamState state(params, AdamConfig{.learning_rate = 0.1});
  p.grad()[0] = 1.0;
  adam_step(params, state);
  // m_hat = 1, v_hat = 1 at t = 1, so the update is lr / (1 + eps).
  EXPECT_NEAR(p[0], -0.1 / (1.0 + 1e-8), 1e-15);
  EXPECT_EQ(p.grad()[0], 0.0);
}

TEST(Adam, NonFiniteGradientAbortsAndNamesParameter) {
  ParamStore params;
  Tensor a = params.add("first", {2});
  Tensor b = params.add("second", {2});
  a.grad()[0] = 1.0;
  b.grad()[1] = std::numeric_limits<double>::quiet_NaN();
  AdamState state(params, {});
  try {
    adam_step(params, state);
    FAIL() << "expected NonFiniteGradient";
  } catch (const NonFiniteGradient& e) {
    EXPECT_EQ(e.parameter(), "second");
  }
  EXPECT_EQ(state.step_count, 0);
  EXPECT_EQ(a[0], 0.0);
}

TEST(Adam, IdenticalSeedsGiveIdenticalTrajectories) {
  auto run = [] {
    Rng rng(42);
    ParamStore params;
    Tensor w = add_random(params, "w", {3, 3}, rng);
    Tensor x = random_tensor({3, 3}, rng);
    AdamState state(params, {});
    for (int step = 0; step < 25; ++step) {
      Tape tape;
      Tensor loss = sum(tape, mul(tape, matmul(tape, w, x), matmul(tape, x, w)));
      tape.backward(loss);
      adam_step(params, state);
    }
    return params.clone();
  };
  EXPECT_TRUE(run().values_equal(run()));
}

TEST(GradCheck, QuadraticLossIsExact) {
  Rng rng(8);
  ParamStore params;
  Tensor p = add_random(params, "p", {10}, rng);
  auto report = finite_diff_check([&](Tape& tape) { return scale(tape, sum(tape, mul(tape, p, p)), 0.5); }, params);
  EXPECT_LT(report.max_relative_error, 1e-8);
  EXPECT_EQ(report.entries.at(0).coordinates, 10u);
}

// conv2d forward with a backward that drops the kernel-gradient of one tap.
Tensor corrupted_conv2d(Tape& tape, const Tensor& input, const Tensor& kernel) {
  Tape scratch(Tape::Mode::kInference);
  Tensor clean = conv2d(scratch, input, kernel);
  Tensor out = Tensor::from(clean.shape(), std::vector<double>(clean.data().begin(), clean.data().end()),
                            tape.tracks({&input, &kernel}));
  if (out.requires_grad()) {
    tape.record([input, kernel, out] {
      Tape inner;
      Tensor in_copy = Tensor::from(input.shape(), {input.data().begin(), input.data().end()}, true);
      Tensor k_copy = Tensor::from(kernel.shape(), {kernel.data().begin(), kernel.data().end()}, true);
      Tensor weights = Tensor::from(out.shape(), {out.grad().begin(), out.grad().end()});
      Tensor loss = sum(inner, mul(inner, conv2d(inner, in_copy, k_copy), weights));
      inner.backward(loss);
      for (std::size_t i = 0; i < input.size(); ++i) input.grad()[i] += in_copy.grad()[i];
      for (std::size_t i = 1; i < kernel.size(); ++i) kernel.grad()[i] += k_copy.grad()[i];
    });
  }
  return out;
}

TEST(GradCheck, DetectsCorruptedConvBackward) {
  Rng rng(12);
  ParamStore params;
  Tensor input = add_random(params, "input", {2, 4, 4}, rng);
  Tensor kernel = add_random(params, "kernel", {1, 2, 3, 3}, rng);
  auto make = [&](bool corrupt) {
    return [&, corrupt](Tape& tape) {
      Tensor out = corrupt ? corrupted_conv2d(tape, input, kernel) : conv2d(tape, input, kernel);
      return sum(tape, mul(tape, out, out));
    };
  };
  EXPECT_TRUE(finite_diff_check(make(false), params).passed(1e-4));
  auto bad = finite_diff_check(make(true), params);
  EXPECT_FALSE(bad.passed(1e-4));
  EXPECT_GT(bad.entries.at(1).max_relative_error, 1e-2);
  EXPECT_LT(bad.entries.at(0).max_relative_error, 1e-4);
}

TEST(GradCheck, KinkInsideStepIsClassifiedNotCompared) {
  ParamStore params;
  Tensor x = params.add("x", {1});
  x[0] = -0.5e-5;  // relu kink half a step to the right
  auto loss = [&](Tape& tape) { return sum(tape, relu(tape, x)); };
  EXPECT_FALSE(finite_diff_check(loss, params).passed(1e-4));
  GradCheckOptions options;
  options.kink_tolerance = 1e-4;
  auto report = finite_diff_check(loss, params, options);
  EXPECT_EQ(report.kinks, 1u);
  EXPECT_EQ(report.coordinates, 0u);
}

TEST(GradCheck, KinkRuleDoesNotExcuseAWrongGradient) {
  Rng rng(12);
  ParamStore params;
  Tensor input = add_random(params, "input", {2, 4, 4}, rng);
  Tensor kernel = add_random(params, "kernel", {1, 2, 3, 3}, rng);
  GradCheckOptions options;
  options.kink_tolerance = 1e-4;
  auto bad = finite_diff_check(
      [&](Tape& tape) {
        Tensor out = corrupted_conv2d(tape, input, kernel);
        return sum(tape, mul(tape, out, out));
      },
      params, options);
  EXPECT_EQ(bad.kinks, 0u);
  EXPECT_GT(bad.entries.at(1).max_relative_error, 1e-2);
}

TEST(GradCheck, SampledCoordinatesCoverEveryTensor) {
  Rng rng(13);
  ParamStore params;
  Tensor a = add_random(params, "a", {50}, rng);
  Tensor b = add_random(params, "b", {3}, rng);
  GradCheckOptions options;
  options.max_coordinates = 10;
  options.seed = 4;
  auto report = finite_diff_check(
      [&](Tape& tape) { return add(tape, sum(tape, mul(tape, a, a)), sum(tape, b)); }, params, options);
  EXPECT_EQ(report.coordinates, 10u);
  EXPECT_GE(report.entries[1].coordinates, 1u);
}

TEST(CheckpointTest, RoundTripIsValueExact) {
  Rng rng(21);
  ParamStore params;
  add_random(params, "layer.0.kernel", {3, 2, 3, 3}, rng);
  Tensor odd = params.add("odd", {4});
  odd[0] = 1e-310;
  odd[1] = -0.0;
  odd[2] = 123456789.123456789;
  odd[3] = std::nextafter(1.0, 2.0);
  const auto path = std::filesystem::temp_directory_path() / "vmap_ckpt_roundtrip.txt";
  save_checkpoint(path, {{"arch", "spatial"}, {"vocab_size", "12"}}, params);
  Checkpoint loaded = load_checkpoint(path);
  EXPECT_EQ(loaded.metadata.at("arch"), "spatial");
  EXPECT_TRUE(loaded.params.values_equal(params));
  EXPECT_TRUE(std::signbit(loaded.params.get("odd")[1]));
  std::filesystem::remove(path);
}

TEST(CheckpointTest, RejectsUnknownVersionAndTruncation) {
  const auto path = std::filesystem::temp_directory_path() / "vmap_ckpt_bad.txt";
  {
    std::ofstream(path) << "vmap-checkpoint 99\nend\n";
  }
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  {
    std::ofstream(path) << "vmap-checkpoint 1\nparam w 1 2\n1.0 2.0\n";
  }
  EXPECT_THROW(load_checkpoint(path), CheckpointError);
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace vmap::numerics
