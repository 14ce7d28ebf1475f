#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vmap/instructions/dataset.hpp"
#include "vmap/oracle/value_map.hpp"

namespace vmap::oracle {

using SharedValueMap = std::shared_ptr<const ValueMap>;

// Stable across platforms; folds in terrain and objects.
std::uint64_t map_fingerprint(const WorldMap& map);

// Cache file, version 1:
//
//   vmap-value 1
//   map_id <id>
//   fingerprint <16 hex digits>
//   goal <row> <col>
//   mdp <goal_reward> <puddle_reward> <step_reward> <gamma>
//   <10 lines of 10 values, row-major>
//
// Values are written with 17 significant digits so that reading a file back
// reproduces the computed doubles exactly.
std::string format_value_file(const ValueMap& values, const WorldMap& map, const MdpConfig& config);
std::optional<ValueMap> parse_value_file(const std::string& text, const WorldMap& map, Cell goal, const MdpConfig& config);

// Value maps keyed by (map_id, goal), memoized in memory and optionally
// persisted under a directory with atomic write-then-rename.
class ValueCache {
 public:
  using Warn = std::function<void(const std::string&)>;

  explicit ValueCache(std::optional<std::filesystem::path> dir = std::nullopt, MdpConfig config = {}, Warn warn = {});

  SharedValueMap get(const WorldMap& map, Cell goal);

  std::filesystem::path file_for(const std::string& map_id, Cell goal) const;
  // Read hits from disk but never write there; misses stay in memory.
  void set_read_only(bool read_only) { read_only_ = read_only; }
  const MdpConfig& config() const { return config_; }

  int computed() const { return computed_; }
  int disk_hits() const { return disk_hits_; }
  int memory_hits() const { return memory_hits_; }
  int repaired() const { return repaired_; }

 private:
  std::optional<std::filesystem::path> dir_;
  MdpConfig config_;
  Warn warn_;
  std::map<std::pair<std::string, std::size_t>, SharedValueMap> memo_;
  bool read_only_ = false;
  int computed_ = 0;
  int disk_hits_ = 0;
  int memory_hits_ = 0;
  int repaired_ = 0;
};

// One value map per record, in record order. Records with equal map and
// goal share a single ValueMap object.
std::vector<SharedValueMap> supervision_set(const instructions::Dataset& dataset, ValueCache& cache);

}  // namespace vmap::oracle
