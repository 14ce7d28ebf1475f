#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vmap/gridworld/render.hpp"
#include "vmap/instructions/dataset.hpp"
#include "vmap/model/model.hpp"
#include "vmap/oracle/supervision.hpp"
#include "vmap/training/training.hpp"

namespace vmap::evaluation {

using gridworld::Cell;
using gridworld::Grid;
using gridworld::MdpConfig;
using gridworld::WorldMap;
using training::Example;

// Value map to score for one example.
using Predictor = std::function<Grid(const Example&)>;

Predictor model_predictor(const model::Model& model);
// The example's own oracle map, for calibration rows.
Predictor oracle_predictor();

struct PolicyScore {
  double policy_quality = 0.0;  // (V_pi - V_rand) / (V_ref - V_rand)
  double optimal_ratio = 0.0;   // (V_pi - V_rand) / (V_opt - V_rand)
  std::size_t starts = 0;
  std::size_t excluded_starts = 0;
};

// Exact expected discounted returns of the softmax policy over `values`, the
// same softmax over the oracle values (the reference), the greedy oracle
// policy and the uniform policy, each averaged over every grass start except
// the goal. Starts where the reference and the uniform policy tie are left
// out. With no usable start both scores are 0.
PolicyScore score_policy(const Grid& values, const WorldMap& map, Cell goal, const Grid& oracle, double temperature,
                         const MdpConfig& mdp = {});

// |argmax(values) - goal| in L1, argmax row-major first.
int goal_distance(const Grid& values, Cell goal);

// Mean over cells of (values - oracle)^2.
double value_mse(const Grid& values, const Grid& oracle);

struct RecordScore {
  std::size_t record = 0;
  std::string map_id;
  instructions::Split split = instructions::Split::Train;
  instructions::Mode mode = instructions::Mode::Local;
  double policy_quality = 0.0;
  double optimal_ratio = 0.0;
  int distance = 0;
  double mse = 0.0;
  std::size_t excluded_starts = 0;
};

struct Aggregate {
  std::size_t count = 0;
  double policy_quality = 0.0;
  double optimal_ratio = 0.0;
  double mean_distance = 0.0;
  double mse = 0.0;
};

struct EvalReport {
  std::vector<RecordScore> records;
  Aggregate local;
  Aggregate global;
  Aggregate combined;
  double temperature = 1.0;

  const Aggregate& aggregate(std::optional<instructions::Mode> mode) const;
};

struct EvalConfig {
  double temperature = 1.0;
  MdpConfig mdp;
};

// Examples must carry oracle maps. Aggregates are Kahan means of the rows.
EvalReport evaluate(const Predictor& predict, const instructions::Dataset& dataset, std::span<const Example> examples,
                    const EvalConfig& config = {});

// Aligned text table with local, global and combined columns.
std::string format_report_table(const EvalReport& report, const std::string& title);
// Tab-separated key=value lines: one per aggregate, then one per record.
std::string format_report_lines(const EvalReport& report);

// Word-level edit distance.
std::size_t levenshtein(std::span<const std::string> a, std::span<const std::string> b);

struct Neighbor {
  std::size_t train_record = 0;
  double edit = 0.0;  // edit distance / test length
  int goal_distance = 0;
};

struct DiversityHistogram {
  static constexpr std::size_t kEditBins = 11;      // [0, 0.1), ... [0.9, 1.0), [1.0, inf)
  static constexpr std::size_t kDistanceBins = 19;  // 0 .. 18
  std::array<std::array<std::size_t, kDistanceBins>, kEditBins> counts{};
  std::size_t total = 0;
  std::vector<std::vector<Neighbor>> neighbors;  // per test record, in test order
  std::vector<std::size_t> test_records;

  static std::size_t edit_bin(double edit);
};

// For every test instruction, the five training instructions with the smallest
// normalized edit distance (ties to the lower record index), each paired with
// the Manhattan distance between the described goals.
DiversityHistogram diversity_analysis(const instructions::Dataset& dataset, std::size_t neighbors = 5);

std::string render_histogram_ascii(const DiversityHistogram& histogram);
gridworld::Image render_histogram_image(const DiversityHistogram& histogram, int scale);

}  // namespace vmap::evaluation
