#include "vmap/instructions/program.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <iterator>
#include <limits>

namespace vmap::instructions {
namespace {

constexpr std::array<std::string_view, kSuperlativeCount> kSuperlativeNames = {
    "northernmost", "southernmost", "easternmost", "westernmost", "topmost",
    "bottommost",   "leftmost",     "rightmost",   "middle"};

constexpr std::array<std::string_view, kDirectionCount> kDirectionNames = {
    "above", "below", "left-of", "right-of", "top-left-of", "top-right-of", "bottom-left-of", "bottom-right-of"};

template <std::size_t N>
std::optional<std::size_t> find_name(const std::array<std::string_view, N>& names, std::string_view s) {
  for (std::size_t i = 0; i < N; ++i) {
    if (names[i] == s) return i;
  }
  return std::nullopt;
}

// Lower is more extreme.
long superlative_score(Superlative s, Cell c, const std::vector<Cell>& all) {
  switch (s) {
    case Superlative::Northernmost:
    case Superlative::Topmost:
      return c.row;
    case Superlative::Southernmost:
    case Superlative::Bottommost:
      return -c.row;
    case Superlative::Westernmost:
    case Superlative::Leftmost:
      return c.col;
    case Superlative::Easternmost:
    case Superlative::Rightmost:
      return -c.col;
    case Superlative::Middle: {
      long total = 0;
      for (Cell o : all) total += gridworld::manhattan(c, o);
      return total;
    }
  }
  return 0;
}

std::string referent_text(const Referent& r) {
  std::string s;
  if (r.superlative) s = std::string(superlative_name(*r.superlative)) + " ";
  return s + std::string(gridworld::kind_name(r.kind));
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

void validate_program(const SpatialProgram& program) {
  const auto& anchors = program.anchors;
  switch (program.category) {
    case Category::A:
      if (anchors.size() != 1 || !anchors[0].relations.empty())
        throw InvalidProgram("category A takes one referent and no relations");
      break;
    case Category::B:
      if (anchors.size() != 1 || anchors[0].relations.empty())
        throw InvalidProgram("category B takes one referent with at least one relation");
      break;
    case Category::C:
      if (anchors.size() != 2) throw InvalidProgram("category C takes exactly two referents");
      break;
  }
  bool any_superlative = false;
  for (const Anchor& a : anchors) {
    any_superlative |= a.referent.superlative.has_value();
    for (const Relation& r : a.relations) {
      if (r.offset < 1) throw InvalidProgram("relation offset must be at least 1");
    }
  }
  if (any_superlative != (program.mode == Mode::Global))
    throw InvalidProgram("mode must be global exactly when a superlative is present");
}

Cell direction_step(Direction d) {
  switch (d) {
    case Direction::Above: return {-1, 0};
    case Direction::Below: return {1, 0};
    case Direction::LeftOf: return {0, -1};
    case Direction::RightOf: return {0, 1};
    case Direction::TopLeftOf: return {-1, -1};
    case Direction::TopRightOf: return {-1, 1};
    case Direction::BottomLeftOf: return {1, -1};
    case Direction::BottomRightOf: return {1, 1};
  }
  return {0, 0};
}

Cell chain_offset(const std::vector<Relation>& relations) {
  Cell total{0, 0};
  for (const Relation& r : relations) {
    const Cell step = direction_step(r.direction);
    total.row += step.row * r.offset;
    total.col += step.col * r.offset;
  }
  return total;
}

std::vector<Cell> referent_instances(const Referent& referent, const WorldMap& map, bool* tie) {
  if (tie) *tie = false;
  std::vector<Cell> cells = map.cells_of(referent.kind);
  if (!referent.superlative || cells.empty()) return cells;
  long best = std::numeric_limits<long>::max();
  std::vector<Cell> winners;
  for (Cell c : cells) {
    const long score = superlative_score(*referent.superlative, c, cells);
    if (score < best) {
      best = score;
      winners.assign(1, c);
    } else if (score == best) {
      winners.push_back(c);
    }
  }
  if (tie) *tie = winners.size() > 1;
  return winners;
}

std::vector<Cell> anchor_candidates(const Anchor& anchor, const WorldMap& map, std::string* reason) {
  const Cell delta = chain_offset(anchor.relations);
  std::vector<Cell> out;
  for (Cell c : referent_instances(anchor.referent, map)) {
    const Cell t{c.row + delta.row, c.col + delta.col};
    if (t.on_grid()) out.push_back(t);
  }
  if (out.empty() && reason) *reason = "target of " + referent_text(anchor.referent) + " is off the grid";
  return out;
}

Resolution resolve(const SpatialProgram& program, const WorldMap& map) {
  validate_program(program);
  // Each anchor is checked on its own, in order, before any intersection.
  std::vector<std::vector<Cell>> per_anchor;
  for (const Anchor& anchor : program.anchors) {
    bool tie = false;
    if (referent_instances(anchor.referent, map, &tie).empty())
      return {ResolveStatus::Unsatisfiable, {}, "no " + std::string(gridworld::kind_name(anchor.referent.kind)) + " on the map"};
    if (tie) return {ResolveStatus::Ambiguous, {}, "tie for the " + referent_text(anchor.referent)};
    std::string reason;
    std::vector<Cell> cands = anchor_candidates(anchor, map, &reason);
    if (cands.empty()) return {ResolveStatus::Unsatisfiable, {}, reason};
    std::sort(cands.begin(), cands.end());
    per_anchor.push_back(std::move(cands));
  }
  std::vector<Cell> common = per_anchor.front();
  for (std::size_t i = 1; i < per_anchor.size(); ++i) {
    std::vector<Cell> both;
    std::set_intersection(common.begin(), common.end(), per_anchor[i].begin(), per_anchor[i].end(),
                          std::back_inserter(both));
    common = std::move(both);
  }
  if (common.empty()) return {ResolveStatus::Unsatisfiable, {}, "no cell satisfies every referent"};
  if (common.size() > 1)
    return {ResolveStatus::Ambiguous, {}, std::to_string(common.size()) + " cells match the description"};
  return {ResolveStatus::Ok, common.front(), {}};
}

SpatialProgram strip_superlatives(SpatialProgram program) {
  for (Anchor& a : program.anchors) a.referent.superlative.reset();
  return program;
}

std::string_view category_name(Category c) {
  switch (c) {
    case Category::A: return "A";
    case Category::B: return "B";
    case Category::C: return "C";
  }
  return "?";
}

std::string_view mode_name(Mode m) { return m == Mode::Local ? "local" : "global"; }
std::string_view superlative_name(Superlative s) { return kSuperlativeNames[static_cast<std::size_t>(s)]; }
std::string_view direction_name(Direction d) { return kDirectionNames[static_cast<std::size_t>(d)]; }

std::optional<Category> category_from_name(std::string_view s) {
  if (s == "A") return Category::A;
  if (s == "B") return Category::B;
  if (s == "C") return Category::C;
  return std::nullopt;
}

std::optional<Mode> mode_from_name(std::string_view s) {
  if (s == "local") return Mode::Local;
  if (s == "global") return Mode::Global;
  return std::nullopt;
}

std::optional<Superlative> superlative_from_name(std::string_view s) {
  if (auto i = find_name(kSuperlativeNames, s)) return static_cast<Superlative>(*i);
  return std::nullopt;
}

std::optional<Direction> direction_from_name(std::string_view s) {
  if (auto i = find_name(kDirectionNames, s)) return static_cast<Direction>(*i);
  return std::nullopt;
}

std::string format_program(const SpatialProgram& program) {
  std::string out;
  for (std::size_t i = 0; i < program.anchors.size(); ++i) {
    const Anchor& a = program.anchors[i];
    if (i) out += '+';
    out += gridworld::kind_name(a.referent.kind);
    if (a.referent.superlative) {
      out += '@';
      out += superlative_name(*a.referent.superlative);
    }
    for (std::size_t j = 0; j < a.relations.size(); ++j) {
      out += j ? ',' : ':';
      out += direction_name(a.relations[j].direction);
      out += '*';
      out += std::to_string(a.relations[j].offset);
    }
  }
  return out;
}

SpatialProgram parse_program(std::string_view text, Category category, Mode mode) {
  SpatialProgram program{category, mode, {}};
  const auto fail = [&](const std::string& why) {
    return InvalidProgram("bad program '" + std::string(text) + "': " + why);
  };
  for (std::string_view part : split(text, '+')) {
    Anchor anchor;
    const std::size_t colon = part.find(':');
    const std::string_view ref = part.substr(0, colon);
    const std::size_t at = ref.find('@');
    const auto kind = gridworld::kind_from_name(ref.substr(0, at));
    if (!kind) throw fail("unknown kind");
    anchor.referent.kind = *kind;
    if (at != std::string_view::npos) {
      const auto sup = superlative_from_name(ref.substr(at + 1));
      if (!sup) throw fail("unknown superlative");
      anchor.referent.superlative = *sup;
    }
    if (colon != std::string_view::npos) {
      for (std::string_view rel : split(part.substr(colon + 1), ',')) {
        const std::size_t star = rel.find('*');
        if (star == std::string_view::npos) throw fail("relation without offset");
        const auto dir = direction_from_name(rel.substr(0, star));
        if (!dir) throw fail("unknown direction");
        int offset = 0;
        const std::string_view digits = rel.substr(star + 1);
        const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), offset);
        if (ec != std::errc() || ptr != digits.data() + digits.size()) throw fail("bad offset");
        anchor.relations.push_back({*dir, offset});
      }
    }
    program.anchors.push_back(std::move(anchor));
  }
  validate_program(program);
  return program;
}

}  // namespace vmap::instructions
