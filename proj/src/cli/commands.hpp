#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmap/instructions/dataset.hpp"
#include "vmap/training/training.hpp"

namespace vmap::cli {

namespace fs = std::filesystem;

// Bad inputs that parse fine: maps out of range, mismatched checkpoints,
// unresolvable instructions. Maps to the validation exit code.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Everything a run needs besides its own options. The snapshot is written to
// the run directory before any work.
struct Context {
  std::ostream& out;
  std::ostream& err;
  std::string snapshot;
};

struct GenOptions {
  std::uint64_t seed = 1;
  int maps = 200;
  instructions::BuildConfig build;
  fs::path out;
};

struct TrainOptions {
  std::string mode = "supervised";
  std::string arch = "spatial";
  fs::path data;
  fs::path out;
  std::uint64_t seed = 1;
  std::string subset = "all";  // all, local or global training records
  int checkpoint_every = 10;
  training::RLConfig rl;
  training::SupervisedConfig supervised;
};

struct EvalOptions {
  fs::path checkpoint;
  bool oracle = false;
  std::string arch;  // optional; must match the checkpoint when given
  fs::path data;
  std::string split = "test";
  double temperature = 1.0;
  fs::path out;
};

struct RenderOptions {
  fs::path data;
  std::string map_id;
  std::optional<std::size_t> record;
  std::string instruction;
  std::string program;
  std::string start;  // "row,col"
  fs::path checkpoint;
  std::string format = "ascii";
  int scale = 24;
  fs::path out;
};

struct CurveOptions {
  std::string arch = "spatial";
  fs::path data;
  fs::path out;
  std::uint64_t seed = 1;
  std::vector<std::size_t> sizes = {100, 400, 1000};
  int seeds_per_size = 3;
  double temperature = 1.0;
  training::SupervisedConfig supervised;
};

struct DiversityOptions {
  fs::path data;
  std::string format = "ascii";
  int scale = 16;
  fs::path out;
};

int cmd_gen(const GenOptions& options, Context& ctx);
int cmd_train(const TrainOptions& options, Context& ctx);
int cmd_eval(const EvalOptions& options, Context& ctx);
int cmd_render(const RenderOptions& options, Context& ctx);
int cmd_learning_curve(const CurveOptions& options, Context& ctx);
int cmd_diversity(const DiversityOptions& options, Context& ctx);

}  // namespace vmap::cli
