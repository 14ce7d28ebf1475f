#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vmap/gridworld/world_map.hpp"

namespace vmap::instructions {

using gridworld::Cell;
using gridworld::ObjectKind;
using gridworld::WorldMap;

// A: named entity, B: one referent plus relations, C: two referents.
enum class Category { A, B, C };
enum class Mode { Local, Global };

enum class Superlative {
  Northernmost,
  Southernmost,
  Easternmost,
  Westernmost,
  Topmost,
  Bottommost,
  Leftmost,
  Rightmost,
  Middle,
};
inline constexpr std::size_t kSuperlativeCount = 9;

enum class Direction { Above, Below, LeftOf, RightOf, TopLeftOf, TopRightOf, BottomLeftOf, BottomRightOf };
inline constexpr std::size_t kDirectionCount = 8;
inline constexpr int kMaxOffset = 3;

struct Relation {
  Direction direction = Direction::Above;
  int offset = 1;

  friend bool operator==(const Relation&, const Relation&) = default;
};

struct Referent {
  ObjectKind kind = ObjectKind::Triangle;
  std::optional<Superlative> superlative;

  friend bool operator==(const Referent&, const Referent&) = default;
};

// The goal candidates of an anchor are its referent's instances, each
// translated by the whole relation chain.
struct Anchor {
  Referent referent;
  std::vector<Relation> relations;

  friend bool operator==(const Anchor&, const Anchor&) = default;
};

struct SpatialProgram {
  Category category = Category::A;
  Mode mode = Mode::Local;
  std::vector<Anchor> anchors;

  friend bool operator==(const SpatialProgram&, const SpatialProgram&) = default;
};

class InvalidProgram : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Throws InvalidProgram on a category/anchor mismatch, a mode that disagrees
// with the presence of superlatives, or an offset below 1.
void validate_program(const SpatialProgram& program);

// (drow, dcol) per offset unit; row grows southward.
Cell direction_step(Direction d);
Cell chain_offset(const std::vector<Relation>& relations);

enum class ResolveStatus { Ok, Ambiguous, Unsatisfiable };

struct Resolution {
  ResolveStatus status = ResolveStatus::Unsatisfiable;
  Cell cell;
  // Names the failing constraint when status != Ok.
  std::string reason;

  bool ok() const { return status == ResolveStatus::Ok; }
};

// Instances selected by a referent, after superlative filtering. Empty when
// the kind is absent; more than one element for a tie or no superlative.
std::vector<Cell> referent_instances(const Referent& referent, const WorldMap& map, bool* tie = nullptr);
// On-grid goal candidates of one anchor.
std::vector<Cell> anchor_candidates(const Anchor& anchor, const WorldMap& map, std::string* reason = nullptr);

Resolution resolve(const SpatialProgram& program, const WorldMap& map);

// Same program with every superlative removed (mode left as is).
SpatialProgram strip_superlatives(SpatialProgram program);

std::string_view category_name(Category c);
std::string_view mode_name(Mode m);
std::string_view superlative_name(Superlative s);
std::string_view direction_name(Direction d);
std::optional<Category> category_from_name(std::string_view s);
std::optional<Mode> mode_from_name(std::string_view s);
std::optional<Superlative> superlative_from_name(std::string_view s);
std::optional<Direction> direction_from_name(std::string_view s);

// Compact text form, e.g. "rock@westernmost:above*1+tree:left-of*2".
std::string format_program(const SpatialProgram& program);
// Category and mode are not part of the text form.
SpatialProgram parse_program(std::string_view text, Category category, Mode mode);

}  // namespace vmap::instructions
