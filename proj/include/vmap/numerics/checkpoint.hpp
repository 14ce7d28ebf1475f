#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "vmap/numerics/params.hpp"

namespace vmap::numerics {

inline constexpr int kCheckpointFormatVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text container, one item per line:
//
//   vmap-checkpoint <format_version>
//   meta <key> <value>              (zero or more, sorted by key)
//   param <name> <rank> <d0> ... <dn-1>
//   <row-major values, %.17g, space separated>
//   end
//
// %.17g round-trips every double exactly.
struct Checkpoint {
  std::map<std::string, std::string> metadata;
  ParamStore params;
};

void save_checkpoint(const std::filesystem::path& path, const std::map<std::string, std::string>& metadata,
                     const ParamStore& params);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string format_double(double value);

}  // namespace vmap::numerics
