#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "vmap/cli/cli.hpp"
#include "vmap/instructions/dataset.hpp"
#include "vmap/oracle/value_map.hpp"

namespace {

namespace fs = std::filesystem;
using namespace vmap;
using cli::run_cli;

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

// Relative path -> contents for every file under `dir`.
std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = slurp(e.path());
  }
  return files;
}

std::map<std::string, std::string> fields(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, '\t');) {
    if (const auto eq = f.find('='); eq != std::string::npos) kv[f.substr(0, eq)] = f.substr(eq + 1);
  }
  return kv;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "vmap_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    data_ = root_ / "data20";
    ASSERT_EQ(run({"gen", "--seed", "4", "--maps", "20", "--out", data_.string()}).code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  fs::path dir(const std::string& name) const {
    return root_ / (std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()) + "_" + name);
  }

  static fs::path root_;
  static fs::path data_;
};

fs::path CliTest::root_;
fs::path CliTest::data_;

TEST_F(CliTest, MinimalGenerationValidates) {
  const auto r = run({"gen", "--seed", "1", "--maps", "2", "--out", dir("ds").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("train"), std::string::npos);
  const auto ds = instructions::read_dataset(dir("ds"));
  EXPECT_NO_THROW(instructions::validate_dataset(ds));
  EXPECT_EQ(ds.maps.size(), 2u);
  EXPECT_TRUE(fs::exists(dir("ds") / "config.toml"));
  EXPECT_FALSE(fs::is_empty(dir("ds") / "oracle"));
}

TEST_F(CliTest, DefaultGenerationMatchesTableScale) {
  ASSERT_EQ(run({"gen", "--out", dir("ds").string()}).code, 0);
  const auto ds = instructions::read_dataset(dir("ds"));
  EXPECT_EQ(ds.maps.size(), 200u);
  std::size_t train_maps = 0;
  std::map<std::string, bool> seen;
  for (const auto& r : ds.records) {
    if (!seen[r.map_id] && r.split == instructions::Split::Train) ++train_maps;
    seen[r.map_id] = true;
  }
  EXPECT_NEAR(static_cast<double>(train_maps) / 200.0, 0.8, 0.02);
  const double local = static_cast<double>(ds.select(std::nullopt, instructions::Mode::Local).size());
  const double global = static_cast<double>(ds.select(std::nullopt, instructions::Mode::Global).size());
  EXPECT_NEAR(local / global, 3.0, 0.3);
}

TEST_F(CliTest, GenerationIsByteIdentical) {
  for (const char* name : {"a", "b"}) {
    ASSERT_EQ(run({"gen", "--seed", "9", "--maps", "6", "--out", dir(name).string()}).code, 0);
  }
  const auto a = tree(dir("a"));
  EXPECT_GT(a.size(), 5u);
  EXPECT_EQ(a, tree(dir("b")));
}

TEST_F(CliTest, ExitCodesSeparateUsageValidationAndRuntime) {
  EXPECT_EQ(run({"gen", "--maps", "1", "--out", dir("one").string()}).code, cli::kExitValidation);
  EXPECT_EQ(run({"gen", "--bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(run({}).code, cli::kExitUsage);
  EXPECT_EQ(run({"train", "--arch", "transformer", "--data", data_.string(), "--out", dir("x").string()}).code,
            cli::kExitUsage);
  EXPECT_EQ(run({"train", "--data", dir("missing").string(), "--out", dir("x").string()}).code,
            cli::kExitValidation);
  EXPECT_EQ(run({"--help"}).code, cli::kExitOk);
  const auto diverged =
      run({"train", "--data", data_.string(), "--out", dir("div").string(), "--epochs", "3", "--lr", "1e4"});
  EXPECT_EQ(diverged.code, cli::kExitRuntime);
  EXPECT_TRUE(fs::exists(dir("div") / "diverged.ckpt"));
  EXPECT_NE(diverged.err.find("diverged"), std::string::npos);
}

TEST_F(CliTest, CorruptDatasetIsRejectedBeforeTraining) {
  fs::copy(data_, dir("ds"), fs::copy_options::recursive);
  std::ofstream(dir("ds") / "instructions.tsv", std::ios::app) << "map-9999\ttrain\tlocal\tA\tgo\tcircle\t0\t0\n";
  const auto r = run({"train", "--data", dir("ds").string(), "--out", dir("run").string()});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_FALSE(fs::exists(dir("run") / "model.ckpt"));
}

TEST_F(CliTest, SupervisedRunWritesLogsAndImprovesValidation) {
  const auto before = tree(data_);
  const auto r = run({"train", "--mode", "supervised", "--arch", "spatial", "--data", data_.string(), "--out",
                      dir("run").string(), "--epochs", "8", "--checkpoint-every", "4", "--patience", "100"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(tree(data_), before);
  for (const char* f : {"config.toml", "metadata.tsv", "epochs.tsv", "model.ckpt", "checkpoints/epoch-0004.ckpt",
                        "checkpoints/epoch-0008.ckpt"}) {
    EXPECT_TRUE(fs::exists(dir("run") / f)) << f;
  }
  std::istringstream log(slurp(dir("run") / "epochs.tsv"));
  std::string line;
  std::getline(log, line);
  std::vector<double> validation;
  while (std::getline(log, line)) {
    std::istringstream row(line);
    int epoch;
    double train, val;
    row >> epoch >> train >> val;
    validation.push_back(val);
  }
  ASSERT_EQ(validation.size(), 8u);
  // Trend, not strict monotonicity: the second half sits below the first.
  EXPECT_LT(validation[6] + validation[7], validation[0] + validation[1]);
  EXPECT_NE(slurp(dir("run") / "metadata.tsv").find("parameters.cnn-lstm"), std::string::npos);
}

TEST_F(CliTest, TrainingIsByteIdenticalInBothModes) {
  for (const char* mode : {"supervised", "rl"}) {
    for (const char* name : {"a", "b"}) {
      const auto r = run({"train", "--mode", mode, "--data", data_.string(), "--out", dir(std::string(mode) + name).string(),
                          "--epochs", "2", "--goals-per-epoch", "15", "--seed", "3"});
      ASSERT_EQ(r.code, 0) << r.err;
    }
    EXPECT_EQ(tree(dir(std::string(mode) + "a")), tree(dir(std::string(mode) + "b"))) << mode;
  }
}

TEST_F(CliTest, RlWithUvfaTextCompletesAndRecordsExploration) {
  fs::path small = dir("ds10");
  ASSERT_EQ(run({"gen", "--seed", "2", "--maps", "10", "--out", small.string()}).code, 0);
  const auto r = run({"train", "--mode", "rl", "--arch", "uvfa-text", "--data", small.string(), "--out",
                      dir("run").string(), "--epochs", "2", "--goals-per-epoch", "10", "--epsilon", "0.3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir("run") / "model.ckpt"));
  EXPECT_NE(slurp(dir("run") / "metadata.tsv").find("epsilon_start\t0.29999999999999999"), std::string::npos);
}

TEST_F(CliTest, SnapshotReproducesTheRun) {
  ASSERT_EQ(run({"train", "--data", data_.string(), "--out", dir("a").string(), "--epochs", "2", "--lr", "3e-3",
                 "--batch", "4"})
                .code,
            0);
  ASSERT_EQ(run({"train", "--config", (dir("a") / "config.toml").string(), "--out", dir("b").string()}).code, 0);
  EXPECT_EQ(tree(dir("a")), tree(dir("b")));
}

TEST_F(CliTest, OracleEvaluationIsTheCalibrationRow) {
  const auto r = run({"eval", "--oracle", "--data", data_.string(), "--out", dir("ev").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto ds = instructions::read_dataset(data_);
  std::istringstream lines(slurp(dir("ev") / "report.tsv"));
  std::size_t records = 0;
  for (std::string line; std::getline(lines, line);) {
    auto kv = fields(line);
    if (line.rfind("aggregate", 0) == 0 && kv["mode"] == "combined") {
      EXPECT_NEAR(std::stod(kv["policy_quality"]), 1.0, 1e-6);
      EXPECT_EQ(std::stod(kv["distance"]), 0.0);
      EXPECT_EQ(std::stod(kv["mse"]), 0.0);
      EXPECT_EQ(std::stoul(kv["count"]), ds.select(instructions::Split::Test).size());
    }
    if (line.rfind("record", 0) == 0) ++records;
  }
  EXPECT_EQ(records, ds.select(instructions::Split::Test).size());
}

TEST_F(CliTest, EvaluationIsRepeatableAndChecksArchitecture) {
  ASSERT_EQ(run({"train", "--data", data_.string(), "--out", dir("run").string(), "--epochs", "1"}).code, 0);
  const auto ckpt = (dir("run") / "model.ckpt").string();
  ASSERT_EQ(run({"eval", "--checkpoint", ckpt, "--data", data_.string(), "--out", dir("e1").string()}).code, 0);
  ASSERT_EQ(run({"eval", "--checkpoint", ckpt, "--data", data_.string(), "--out", dir("e2").string()}).code, 0);
  EXPECT_EQ(tree(dir("e1")), tree(dir("e2")));
  const auto train = run({"eval", "--checkpoint", ckpt, "--data", data_.string(), "--split", "train"});
  EXPECT_EQ(train.code, 0);
  const auto bad = run({"eval", "--checkpoint", ckpt, "--arch", "cnn-lstm", "--data", data_.string()});
  EXPECT_EQ(bad.code, cli::kExitValidation);
  EXPECT_NE(bad.err.find("spatial"), std::string::npos);
}

TEST_F(CliTest, RenderMarksTheGoalAndCapsThePath) {
  const auto ds = instructions::read_dataset(data_);
  const auto& rec = ds.records.at(5);
  const auto r = run({"render", "--data", data_.string(), "--record", "5"});
  ASSERT_EQ(r.code, 0) << r.err;
  // The starred maximum of the oracle grid is the goal.
  const auto pos = r.out.find("oracle values\n");
  ASSERT_NE(pos, std::string::npos);
  std::istringstream grid(r.out.substr(pos + 14));
  std::string line;
  for (int row = 0; row < 10; ++row) {
    std::getline(grid, line);
    std::istringstream cells(line);
    std::string cell;
    for (int col = 0; cell.clear(), cells >> cell; ++col) {
      if (cell.find('*') != std::string::npos) {
        EXPECT_EQ((gridworld::Cell{row, col}), rec.goal);
      }
    }
  }
  const auto cells_at = r.out.find(" cells,");
  ASSERT_NE(cells_at, std::string::npos);
  const auto colon = r.out.rfind(": ", cells_at);
  EXPECT_LE(std::stoi(r.out.substr(colon + 2, cells_at - colon - 2)), 76);
}

TEST_F(CliTest, RenderPixmapHasDeclaredScale) {
  const auto ds = instructions::read_dataset(data_);
  const auto p = dir("map.ppm");
  ASSERT_EQ(run({"render", "--data", data_.string(), "--map", ds.maps[0].map_id(), "--render-format", "ppm",
                 "--scale", "7", "--out", p.string()})
                .code,
            0);
  std::istringstream in(slurp(p));
  std::string magic;
  int w = 0, h = 0;
  in >> magic >> w >> h;
  EXPECT_EQ(magic, "P6");
  EXPECT_EQ(w, 70);
  EXPECT_EQ(h, 70);
}

TEST_F(CliTest, UnresolvableProgramNamesTheConstraint) {
  const auto ds = instructions::read_dataset(data_);
  const auto r = run({"render", "--data", data_.string(), "--map", ds.maps[0].map_id(), "--program",
                      "heart:left-of*3+heart:right-of*3"});
  EXPECT_EQ(r.code, cli::kExitValidation);
  EXPECT_NE(r.err.find("unresolvable"), std::string::npos);
  EXPECT_GT(r.err.size(), std::string("error: unresolvable instruction: \n").size());
}

TEST_F(CliTest, LearningCurveBookkeeping) {
  const auto r = run({"curve", "--data", data_.string(), "--out", dir("c").string(), "--sizes", "20,40,80",
                      "--seeds-per-size", "3", "--epochs", "1"});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream runs(slurp(dir("c") / "runs.tsv"));
  int lines = 0;
  for (std::string l; std::getline(runs, l);) ++lines;
  EXPECT_EQ(lines, 1 + 9);
  for (const char* series : {"policy_quality.tsv", "distance.tsv"}) {
    const auto text = slurp(dir("c") / series);
    EXPECT_EQ(text.rfind("size\tmean\tstdev\truns\n", 0), 0u) << series;
  }
  EXPECT_EQ(run({"curve", "--data", data_.string(), "--out", dir("d").string(), "--sizes", "100000"}).code,
            cli::kExitValidation);
}

TEST_F(CliTest, DiversityHistogramCountsFiveNeighbors) {
  const auto ds = instructions::read_dataset(data_);
  const auto r = run({"diversity", "--data", data_.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("total " + std::to_string(5 * ds.select(instructions::Split::Test).size())),
            std::string::npos);
}

}  // namespace
