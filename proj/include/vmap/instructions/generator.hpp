#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "vmap/core/rng.hpp"
#include "vmap/instructions/program.hpp"
#include "vmap/instructions/text.hpp"

namespace vmap::instructions {

struct Instruction {
  std::string map_id;
  Tokens tokens;
  SpatialProgram program;
  Cell goal;
};

class MapUnsuitable : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr int kMaxRejections = 10000;

// The single relation that moves `from` onto `to`, if the displacement is a
// straight or diagonal line of length 1..3.
std::optional<Relation> relation_between(Cell from, Cell to);

// True when the program resolves uniquely onto grass and, in global mode,
// stops resolving once its superlatives are removed.
bool acceptable(const SpatialProgram& program, const WorldMap& map, Cell* goal = nullptr);

// One draw; may return a program that is not acceptable.
std::optional<SpatialProgram> propose_program(const WorldMap& map, Rng& rng, Category category, Mode mode);

// Surface text for a program, choosing among phrasal templates.
std::string realize(const SpatialProgram& program, Rng& rng);

// Throws MapUnsuitable after kMaxRejections rejected proposals.
Instruction generate_instruction(const WorldMap& map, Rng& rng, Category category, Mode mode);

}  // namespace vmap::instructions
