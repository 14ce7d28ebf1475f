#include "vmap/instructions/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "vmap/core/atomic_file.hpp"
#include "vmap/gridworld/map_io.hpp"

namespace vmap::instructions {
namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    fields.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return fields;
}

int parse_int(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  int v = 0;
  try {
    v = std::stoi(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw DatasetError("bad " + what + " '" + s + "'");
  return v;
}

Category sample_category(const std::array<double, 3>& weights, const std::vector<bool>& allowed, Rng& rng) {
  double total = 0.0;
  for (std::size_t i = 0; i < 3; ++i) total += allowed[i] ? weights[i] : 0.0;
  double u = rng.uniform() * total;
  for (std::size_t i = 0; i < 3; ++i) {
    if (!allowed[i] || weights[i] <= 0.0) continue;
    if (u < weights[i]) return static_cast<Category>(i);
    u -= weights[i];
  }
  for (std::size_t i = 3; i-- > 0;) {
    if (allowed[i] && weights[i] > 0.0) return static_cast<Category>(i);
  }
  return Category::A;
}

// Appends up to `count` new distinct instructions for one mode; returns the shortfall.
int generate_for_map(const WorldMap& map, Split split, Mode mode, int count, const BuildConfig& config, Rng& rng,
                     std::set<std::string>& seen, std::vector<Record>& out) {
  std::vector<bool> allowed(3, true);
  int produced = 0;
  const long budget = static_cast<long>(count) * config.attempts_per_instruction;
  for (long tries = 0; produced < count && tries < budget; ++tries) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](bool a) { return a; })) break;
    const Category category = sample_category(config.category_weights, allowed, rng);
    Instruction inst;
    try {
      inst = generate_instruction(map, rng, category, mode);
    } catch (const MapUnsuitable&) {
      allowed[static_cast<std::size_t>(category)] = false;
      continue;
    }
    if (!seen.insert(join_tokens(inst.tokens)).second) continue;
    out.push_back({map.map_id(), split, mode, category, std::move(inst.tokens), std::move(inst.program), inst.goal});
    ++produced;
  }
  return count - produced;
}

}  // namespace

std::string_view split_name(Split s) { return s == Split::Train ? "train" : "test"; }

std::optional<Split> split_from_name(std::string_view s) {
  if (s == "train") return Split::Train;
  if (s == "test") return Split::Test;
  return std::nullopt;
}

const WorldMap& Dataset::map(const std::string& map_id) const {
  const auto it = map_index_.find(map_id);
  if (it != map_index_.end() && it->second < maps.size() && maps[it->second].map_id() == map_id) return maps[it->second];
  for (const WorldMap& m : maps) {
    if (m.map_id() == map_id) return m;
  }
  throw DatasetError("unknown map id " + map_id);
}

void Dataset::index_maps() {
  map_index_.clear();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!map_index_.emplace(maps[i].map_id(), i).second) throw DatasetError("duplicate map id " + maps[i].map_id());
  }
}

std::vector<std::size_t> Dataset::select(std::optional<Split> split, std::optional<Mode> mode) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (split && records[i].split != *split) continue;
    if (mode && records[i].mode != *mode) continue;
    out.push_back(i);
  }
  return out;
}

Dataset Dataset::filtered(const std::function<bool(const Record&)>& keep) const {
  Dataset out;
  out.maps = maps;
  out.vocabulary = vocabulary;
  for (const Record& r : records) {
    if (keep(r)) out.records.push_back(r);
  }
  out.index_maps();
  return out;
}

Dataset build_dataset(std::vector<WorldMap> maps, const Rng& rng, const BuildConfig& config, BuildStats* stats) {
  if (maps.size() < 2) throw DatasetError("a dataset needs at least two maps");
  if (config.local_per_map < 0 || config.global_per_map < 0) throw DatasetError("instruction counts must be nonnegative");
  if (!(config.test_fraction > 0.0 && config.test_fraction < 1.0)) throw DatasetError("test fraction must lie in (0, 1)");

  Dataset ds;
  ds.maps = std::move(maps);
  ds.index_maps();

  std::vector<std::size_t> order(ds.maps.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng split_rng = rng.split("split");
  split_rng.shuffle(order);
  const auto n = static_cast<long>(ds.maps.size());
  const long n_test = std::clamp(std::lround(static_cast<double>(n) * config.test_fraction), 1L, n - 1);
  std::vector<Split> split_of(ds.maps.size(), Split::Train);
  for (long i = 0; i < n_test; ++i) split_of[order[static_cast<std::size_t>(i)]] = Split::Test;

  BuildStats local_stats;
  local_stats.test_maps = static_cast<int>(n_test);
  local_stats.train_maps = static_cast<int>(n - n_test);
  for (std::size_t i = 0; i < ds.maps.size(); ++i) {
    const WorldMap& map = ds.maps[i];
    Rng map_rng = rng.split("instructions/" + map.map_id());
    std::set<std::string> seen;
    local_stats.local_shortfall +=
        generate_for_map(map, split_of[i], Mode::Local, config.local_per_map, config, map_rng, seen, ds.records);
    local_stats.global_shortfall +=
        generate_for_map(map, split_of[i], Mode::Global, config.global_per_map, config, map_rng, seen, ds.records);
  }

  std::vector<std::string> words;
  for (const Record& r : ds.records) words.insert(words.end(), r.tokens.begin(), r.tokens.end());
  ds.vocabulary = Vocabulary::from_words(words);
  if (stats) *stats = local_stats;
  return ds;
}

void validate_dataset(const Dataset& dataset) {
  std::map<std::string, Split> split_of_map;
  std::set<std::string> ids;
  for (const WorldMap& m : dataset.maps) {
    if (!ids.insert(m.map_id()).second) throw DatasetError("duplicate map id " + m.map_id());
  }
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    const Record& r = dataset.records[i];
    const std::string where = "record " + std::to_string(i + 1) + " (" + r.map_id + ")";
    const auto [it, inserted] = split_of_map.emplace(r.map_id, r.split);
    if (!inserted && it->second != r.split) throw DatasetError(where + ": map appears in both splits");
    if (r.program.category != r.category || r.program.mode != r.mode)
      throw DatasetError(where + ": category or mode disagrees with program");
    const WorldMap& map = dataset.map(r.map_id);
    Resolution res;
    try {
      res = resolve(r.program, map);
    } catch (const InvalidProgram& e) {
      throw DatasetError(where + ": " + e.what());
    }
    if (!res.ok()) throw DatasetError(where + ": program does not resolve: " + res.reason);
    if (res.cell != r.goal) throw DatasetError(where + ": program resolves away from the stored goal");
    if (!map.is_grass(r.goal)) throw DatasetError(where + ": goal is not grass");
    if (r.tokens.empty()) throw DatasetError(where + ": no tokens");
    for (const std::string& t : r.tokens) {
      if (!dataset.vocabulary.contains(t)) throw DatasetError(where + ": token '" + t + "' not in vocabulary");
    }
  }
}

std::string format_record(const Record& r) {
  std::ostringstream out;
  out << r.map_id << '\t' << split_name(r.split) << '\t' << mode_name(r.mode) << '\t' << category_name(r.category) << '\t'
      << join_tokens(r.tokens) << '\t' << format_program(r.program) << '\t' << r.goal.row << '\t' << r.goal.col;
  return out.str();
}

Record parse_record(const std::string& line) {
  const auto f = split_tabs(line);
  if (f.size() != 8) throw DatasetError("instruction record needs 8 fields, got " + std::to_string(f.size()));
  Record r;
  r.map_id = f[0];
  const auto split = split_from_name(f[1]);
  const auto mode = mode_from_name(f[2]);
  const auto category = category_from_name(f[3]);
  if (!split || !mode || !category) throw DatasetError("bad split, mode or category in record for " + f[0]);
  r.split = *split;
  r.mode = *mode;
  r.category = *category;
  try {
    r.tokens = tokenize(f[4]);
    r.program = parse_program(f[5], r.category, r.mode);
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("record for ") + f[0] + ": " + e.what());
  }
  if (join_tokens(r.tokens) != f[4]) throw DatasetError("tokens are not normalized in record for " + f[0]);
  r.goal = {parse_int(f[6], "goal row"), parse_int(f[7], "goal column")};
  if (!r.goal.on_grid()) throw DatasetError("goal off grid in record for " + f[0]);
  return r;
}

void write_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
  std::filesystem::create_directories(dir);
  gridworld::write_maps(dir / "maps.tsv", dataset.maps);
  std::ostringstream out;
  out << "#vmap-instructions " << kDatasetFormatVersion << '\n';
  out << "# map_id\tsplit\tmode\tcategory\ttokens\tprogram\tgoal_row\tgoal_col\n";
  for (const Record& r : dataset.records) out << format_record(r) << '\n';
  write_file_atomic(dir / "instructions.tsv", out.str());
  dataset.vocabulary.save(dir / "vocab.txt");
}

Dataset read_dataset(const std::filesystem::path& dir) {
  Dataset ds;
  try {
    ds.maps = gridworld::read_maps(dir / "maps.tsv");
  } catch (const gridworld::MapFormatError& e) {
    throw DatasetError(e.what());
  }
  ds.index_maps();
  const auto path = dir / "instructions.tsv";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "#vmap-instructions " + std::to_string(kDatasetFormatVersion))
    throw DatasetError(path.string() + ": missing or unsupported header");
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    try {
      ds.records.push_back(parse_record(line));
    } catch (const DatasetError& e) {
      throw DatasetError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  try {
    ds.vocabulary = Vocabulary::load(dir / "vocab.txt");
  } catch (const VocabularyError& e) {
    throw DatasetError(e.what());
  }
  return ds;
}

}  // namespace vmap::instructions
