#include "vmap/instructions/generator.hpp"

#include <array>
#include <cstdlib>
#include <vector>

namespace vmap::instructions {
namespace {

using gridworld::kNonUniqueKinds;
using gridworld::kUniqueKinds;

constexpr std::array<std::string_view, 6> kVerbs = {"go to", "reach", "move to", "navigate to", "head to", "walk to"};
constexpr std::array<std::string_view, 4> kTargetNouns = {"", "the cell ", "the square ", "the spot "};
constexpr std::array<std::string_view, 4> kNumbers = {"zero", "one", "two", "three"};

// Every phrase carries its own preposition so relations chain with "and".
constexpr std::array<std::array<std::string_view, 3>, kDirectionCount> kDirectionPhrases = {{
    {"above", "north of", "up from"},
    {"below", "south of", "down from"},
    {"left of", "west of", "to the left of"},
    {"right of", "east of", "to the right of"},
    {"top left of", "northwest of", "up and left of"},
    {"top right of", "northeast of", "up and right of"},
    {"bottom left of", "southwest of", "down and left of"},
    {"bottom right of", "southeast of", "down and right of"},
}};

// '#' stands for the object name.
constexpr std::array<std::array<std::string_view, 3>, kSuperlativeCount> kSuperlativePhrases = {{
    {"the northernmost #", "the most northern #", "the # farthest north"},
    {"the southernmost #", "the most southern #", "the # farthest south"},
    {"the easternmost #", "the most eastern #", "the # farthest east"},
    {"the westernmost #", "the most western #", "the # farthest west"},
    {"the topmost #", "the highest #", "the # nearest the top"},
    {"the bottommost #", "the lowest #", "the # nearest the bottom"},
    {"the leftmost #", "the # farthest left", "the # nearest the left edge"},
    {"the rightmost #", "the # farthest right", "the # nearest the right edge"},
    {"the middle #", "the central #", "the # in the middle"},
}};

template <typename T, std::size_t N>
const T& pick(const std::array<T, N>& items, Rng& rng) {
  return items[rng.index(N)];
}

std::string referent_phrase(const Referent& r, Rng& rng) {
  const std::string name(gridworld::kind_name(r.kind));
  if (!r.superlative) return "the " + name;
  std::string phrase(pick(kSuperlativePhrases[static_cast<std::size_t>(*r.superlative)], rng));
  phrase.replace(phrase.find('#'), 1, name);
  return phrase;
}

std::string relation_phrase(const Relation& r, Rng& rng) {
  std::string count;
  if (r.offset == 1) {
    static constexpr std::array<std::string_view, 5> kOne = {"", "one ", "one cell ", "one square ", "one step "};
    count = pick(kOne, rng);
  } else {
    static constexpr std::array<std::string_view, 4> kUnits = {"", " cells", " squares", " steps"};
    const std::string number = r.offset < static_cast<int>(kNumbers.size())
                                   ? std::string(kNumbers[static_cast<std::size_t>(r.offset)])
                                   : std::to_string(r.offset);
    count = number + std::string(pick(kUnits, rng)) + " ";
  }
  return count + std::string(pick(kDirectionPhrases[static_cast<std::size_t>(r.direction)], rng));
}

std::string anchor_phrase(const Anchor& a, Rng& rng) {
  std::string out;
  for (std::size_t i = 0; i < a.relations.size(); ++i) {
    if (i) out += " and ";
    out += relation_phrase(a.relations[i], rng);
  }
  if (!out.empty()) out += ' ';
  return out + referent_phrase(a.referent, rng);
}

Relation random_relation(Rng& rng) {
  return {static_cast<Direction>(rng.index(kDirectionCount)), static_cast<int>(rng.uniform_int(1, kMaxOffset))};
}

std::vector<Relation> random_chain(Rng& rng) {
  if (rng.bernoulli(0.7)) return {random_relation(rng)};
  // Two-part chains pair a vertical with a horizontal move.
  Relation vertical{rng.bernoulli(0.5) ? Direction::Above : Direction::Below, static_cast<int>(rng.uniform_int(1, kMaxOffset))};
  Relation horizontal{rng.bernoulli(0.5) ? Direction::LeftOf : Direction::RightOf,
                      static_cast<int>(rng.uniform_int(1, kMaxOffset))};
  if (rng.bernoulli(0.5)) return {vertical, horizontal};
  return {horizontal, vertical};
}

std::vector<ObjectKind> present(const WorldMap& map, Mode mode, std::size_t min_count) {
  std::vector<ObjectKind> out;
  if (mode == Mode::Local) {
    out.assign(kUniqueKinds.begin(), kUniqueKinds.end());
  } else {
    for (ObjectKind k : kNonUniqueKinds) {
      if (map.count_of(k) >= min_count) out.push_back(k);
    }
  }
  return out;
}

Referent random_referent(const WorldMap& map, Rng& rng, Mode mode, bool superlative) {
  Referent r;
  if (mode == Mode::Local) {
    r.kind = rng.pick(present(map, mode, 1));
    return r;
  }
  r.kind = rng.pick(present(map, mode, superlative ? 2 : 1));
  if (superlative) r.superlative = static_cast<Superlative>(rng.index(kSuperlativeCount));
  return r;
}

std::optional<SpatialProgram> propose_two_referents(const WorldMap& map, Rng& rng, Mode mode) {
  SpatialProgram program{Category::C, mode, {}};
  const bool first_superlative = mode == Mode::Global && rng.bernoulli(0.5);
  Anchor first{random_referent(map, rng, mode, first_superlative), {random_relation(rng)}};
  const std::vector<Cell> targets = anchor_candidates(first, map);
  if (targets.empty()) return std::nullopt;
  const Cell goal = rng.pick(targets);

  // Every second anchor with a single relation that also lands on `goal`.
  std::vector<Anchor> options;
  const bool need_superlative = mode == Mode::Global && !first_superlative;
  for (ObjectKind kind : present(map, mode, 1)) {
    if (mode == Mode::Local && kind == first.referent.kind) continue;
    std::vector<std::optional<Superlative>> sups;
    if (!need_superlative) sups.push_back(std::nullopt);
    if (mode == Mode::Global && map.count_of(kind) >= 2) {
      for (std::size_t s = 0; s < kSuperlativeCount; ++s) sups.push_back(static_cast<Superlative>(s));
    }
    for (const auto& sup : sups) {
      const Referent ref{kind, sup};
      bool tie = false;
      const std::vector<Cell> instances = referent_instances(ref, map, &tie);
      if (tie) continue;
      for (Cell x : instances) {
        if (auto rel = relation_between(x, goal)) {
          Anchor second{ref, {*rel}};
          if (second != first) options.push_back(std::move(second));
        }
      }
    }
  }
  if (options.empty()) return std::nullopt;
  program.anchors = {std::move(first), rng.pick(options)};
  return program;
}

}  // namespace

std::optional<Relation> relation_between(Cell from, Cell to) {
  const int dr = to.row - from.row;
  const int dc = to.col - from.col;
  const int n = std::max(std::abs(dr), std::abs(dc));
  if (n < 1 || n > kMaxOffset) return std::nullopt;
  if (dr != 0 && dc != 0 && std::abs(dr) != std::abs(dc)) return std::nullopt;
  const Cell unit{dr / n, dc / n};
  for (std::size_t d = 0; d < kDirectionCount; ++d) {
    if (direction_step(static_cast<Direction>(d)) == unit) return Relation{static_cast<Direction>(d), n};
  }
  return std::nullopt;
}

bool acceptable(const SpatialProgram& program, const WorldMap& map, Cell* goal) {
  const Resolution r = resolve(program, map);
  if (!r.ok() || !map.is_grass(r.cell)) return false;
  if (program.mode == Mode::Global) {
    SpatialProgram stripped = strip_superlatives(program);
    stripped.mode = Mode::Local;
    if (resolve(stripped, map).ok()) return false;
  }
  if (goal) *goal = r.cell;
  return true;
}

std::optional<SpatialProgram> propose_program(const WorldMap& map, Rng& rng, Category category, Mode mode) {
  if (mode == Mode::Global && present(map, mode, 2).empty()) return std::nullopt;
  switch (category) {
    case Category::A:
      return SpatialProgram{category, mode, {Anchor{random_referent(map, rng, mode, mode == Mode::Global), {}}}};
    case Category::B:
      return SpatialProgram{category, mode,
                            {Anchor{random_referent(map, rng, mode, mode == Mode::Global), random_chain(rng)}}};
    case Category::C:
      return propose_two_referents(map, rng, mode);
  }
  return std::nullopt;
}

std::string realize(const SpatialProgram& program, Rng& rng) {
  std::string text(pick(kVerbs, rng));
  text += ' ';
  if (program.category == Category::A) return text + anchor_phrase(program.anchors[0], rng);
  text += pick(kTargetNouns, rng);
  text += anchor_phrase(program.anchors[0], rng);
  if (program.category == Category::C) {
    text += rng.bernoulli(0.5) ? " and " : " that is also ";
    text += anchor_phrase(program.anchors[1], rng);
  }
  return text;
}

Instruction generate_instruction(const WorldMap& map, Rng& rng, Category category, Mode mode) {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    const auto program = propose_program(map, rng, category, mode);
    Cell goal;
    if (!program || !acceptable(*program, map, &goal)) continue;
    return {map.map_id(), tokenize(realize(*program, rng)), *program, goal};
  }
  throw MapUnsuitable("map " + map.map_id() + " yields no acceptable " + std::string(mode_name(mode)) + " category " +
                      std::string(category_name(category)) + " instruction after " + std::to_string(kMaxRejections) +
                      " attempts");
}

}  // namespace vmap::instructions
