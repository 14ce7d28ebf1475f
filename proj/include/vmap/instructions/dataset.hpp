#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "vmap/core/rng.hpp"
#include "vmap/instructions/generator.hpp"

namespace vmap::instructions {

enum class Split { Train, Test };
std::string_view split_name(Split s);
std::optional<Split> split_from_name(std::string_view s);

struct Record {
  std::string map_id;
  Split split = Split::Train;
  Mode mode = Mode::Local;
  Category category = Category::A;
  Tokens tokens;
  SpatialProgram program;
  Cell goal;

  friend bool operator==(const Record&, const Record&) = default;
};

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Dataset {
  std::vector<WorldMap> maps;
  std::vector<Record> records;
  Vocabulary vocabulary;

  // Throws DatasetError for an unknown id.
  const WorldMap& map(const std::string& map_id) const;
  std::vector<std::size_t> select(std::optional<Split> split, std::optional<Mode> mode = std::nullopt) const;
  // Same maps and vocabulary, records filtered.
  Dataset filtered(const std::function<bool(const Record&)>& keep) const;

  void index_maps();

 private:
  std::map<std::string, std::size_t, std::less<>> map_index_;
};

struct BuildConfig {
  int local_per_map = 31;
  int global_per_map = 10;
  double test_fraction = 0.2;
  // Category A, B, C.
  std::array<double, 3> category_weights = {0.15, 0.6, 0.25};
  // Proposals per requested instruction before the map is reported short.
  int attempts_per_instruction = 200;
};

struct BuildStats {
  int train_maps = 0;
  int test_maps = 0;
  // Instructions requested but not produced, per mode.
  int local_shortfall = 0;
  int global_shortfall = 0;
};

// Splits by map: a test map contributes no training record. Token sequences
// are unique within a map. The vocabulary covers both splits.
Dataset build_dataset(std::vector<WorldMap> maps, const Rng& rng, const BuildConfig& config = {},
                      BuildStats* stats = nullptr);

// Every record resolves to its goal on its map, splits are disjoint by map,
// and every token is in the vocabulary. Throws DatasetError otherwise.
void validate_dataset(const Dataset& dataset);

// Directory layout: maps.tsv, instructions.tsv, vocab.txt.
//
// instructions.tsv, version 1, tab-separated after a '#' header line:
//   map_id  split  mode  category  tokens  program  goal_row  goal_col
// tokens are space-joined; program uses format_program.
inline constexpr int kDatasetFormatVersion = 1;

std::string format_record(const Record& record);
Record parse_record(const std::string& line);

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset);
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace vmap::instructions
