#include "vmap/oracle/supervision.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "vmap/core/atomic_file.hpp"

namespace vmap::oracle {
namespace {

std::string g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string hex64(std::uint64_t x) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

std::string mdp_line(const MdpConfig& c) {
  return "mdp " + g17(c.goal_reward) + " " + g17(c.puddle_reward) + " " + g17(c.step_reward) + " " + g17(c.gamma);
}

std::string safe_name(const std::string& id) {
  std::string out;
  for (char ch : id) {
    const bool plain = (ch >= 'a' && ch <= 'z') || (ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9') || ch == '-' ||
                       ch == '_' || ch == '.';
    out += plain ? ch : '_';
  }
  return out;
}

}  // namespace

std::uint64_t map_fingerprint(const WorldMap& map) {
  std::uint64_t h = 1469598103934665603ull;
  const auto feed = [&h](std::uint8_t byte) {
    h ^= byte;
    h *= 1099511628211ull;
  };
  for (std::size_t i = 0; i < kCellCount; ++i) {
    feed(static_cast<std::uint8_t>(map.terrain()[i]));
    const auto& obj = map.objects()[i];
    feed(obj ? static_cast<std::uint8_t>(static_cast<std::uint8_t>(*obj) + 1) : 0);
  }
  return h;
}

std::string format_value_file(const ValueMap& values, const WorldMap& map, const MdpConfig& config) {
  std::ostringstream out;
  out << "vmap-value 1\n";
  out << "map_id " << values.map_id << '\n';
  out << "fingerprint " << hex64(map_fingerprint(map)) << '\n';
  out << "goal " << values.goal.row << ' ' << values.goal.col << '\n';
  out << mdp_line(config) << '\n';
  for (int r = 0; r < gridworld::kGridSize; ++r) {
    for (int c = 0; c < gridworld::kGridSize; ++c) {
      if (c) out << ' ';
      out << g17(values.values[Cell{r, c}.index()]);
    }
    out << '\n';
  }
  return out.str();
}

std::optional<ValueMap> parse_value_file(const std::string& text, const WorldMap& map, Cell goal,
                                         const MdpConfig& config) {
  std::istringstream in(text);
  std::string line;
  const auto expect = [&](const std::string& wanted) { return std::getline(in, line) && line == wanted; };
  if (!expect("vmap-value 1")) return std::nullopt;
  if (!expect("map_id " + map.map_id())) return std::nullopt;
  if (!expect("fingerprint " + hex64(map_fingerprint(map)))) return std::nullopt;
  if (!expect("goal " + std::to_string(goal.row) + " " + std::to_string(goal.col))) return std::nullopt;
  if (!expect(mdp_line(config))) return std::nullopt;
  ValueMap vm;
  vm.map_id = map.map_id();
  vm.goal = goal;
  vm.gamma = config.gamma;
  for (std::size_t i = 0; i < kCellCount; ++i) {
    std::string token;
    if (!(in >> token)) return std::nullopt;
    char* end = nullptr;
    const double x = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(x)) return std::nullopt;
    vm.values[i] = x;
  }
  std::string extra;
  if (in >> extra) return std::nullopt;
  if (vm.values[goal.index()] != config.goal_reward) return std::nullopt;
  return vm;
}

ValueCache::ValueCache(std::optional<std::filesystem::path> dir, MdpConfig config, Warn warn)
    : dir_(std::move(dir)), config_(config), warn_(std::move(warn)) {
  config_.validate();
  if (!warn_) warn_ = [](const std::string& msg) { std::cerr << "warning: " << msg << '\n'; };
  if (dir_) std::filesystem::create_directories(*dir_);
}

std::filesystem::path ValueCache::file_for(const std::string& map_id, Cell goal) const {
  const std::string name = safe_name(map_id) + "_r" + std::to_string(goal.row) + "c" + std::to_string(goal.col) + ".value";
  return dir_ ? *dir_ / name : std::filesystem::path(name);
}

SharedValueMap ValueCache::get(const WorldMap& map, Cell goal) {
  const auto key = std::make_pair(map.map_id(), goal.index());
  if (const auto it = memo_.find(key); it != memo_.end()) {
    ++memory_hits_;
    return it->second;
  }
  std::optional<std::filesystem::path> path;
  if (dir_) path = file_for(map.map_id(), goal);
  if (path && std::filesystem::exists(*path)) {
    std::ifstream in(*path, std::ios::binary);
    std::stringstream text;
    text << in.rdbuf();
    if (auto vm = parse_value_file(text.str(), map, goal, config_)) {
      ++disk_hits_;
      auto shared = std::make_shared<const ValueMap>(std::move(*vm));
      memo_.emplace(key, shared);
      return shared;
    }
    ++repaired_;
    warn_("value cache entry " + path->string() + " is corrupt or stale; recomputing");
  }
  auto shared = std::make_shared<const ValueMap>(value_iteration(map, goal, config_));
  ++computed_;
  if (path && !read_only_) write_file_atomic(*path, format_value_file(*shared, map, config_));
  memo_.emplace(key, shared);
  return shared;
}

std::vector<SharedValueMap> supervision_set(const instructions::Dataset& dataset, ValueCache& cache) {
  std::vector<SharedValueMap> out;
  out.reserve(dataset.records.size());
  for (const auto& r : dataset.records) out.push_back(cache.get(dataset.map(r.map_id), r.goal));
  return out;
}

}  // namespace vmap::oracle
