#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vmap/cli/cli.hpp"
#include "vmap/core/atomic_file.hpp"
#include "vmap/core/kahan.hpp"
#include "vmap/evaluation/evaluation.hpp"
#include "vmap/gridworld/render.hpp"
#include "vmap/instructions/generator.hpp"
#include "vmap/numerics/checkpoint.hpp"
#include "vmap/oracle/value_map.hpp"

namespace vmap::cli {
namespace {

using gridworld::Cell;
using gridworld::Grid;
using instructions::Dataset;
using instructions::Mode;
using instructions::Split;
using model::Model;

std::string num(double x) { return numerics::format_double(x); }

void write_snapshot(const fs::path& dir, const Context& ctx) {
  fs::create_directories(dir);
  write_file_atomic(dir / "config.toml", ctx.snapshot);
}

Dataset load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("dataset directory " + dir.string() + " does not exist");
  Dataset ds = instructions::read_dataset(dir);
  instructions::validate_dataset(ds);
  return ds;
}

// Reads the dataset's oracle cache without ever writing into the dataset.
oracle::ValueCache read_only_cache(const fs::path& data, std::ostream& err) {
  oracle::ValueCache cache(data / "oracle", {}, [&err](const std::string& m) { err << "warning: " << m << "\n"; });
  cache.set_read_only(true);
  return cache;
}

model::Arch parse_arch(const std::string& name) {
  const auto arch = model::arch_from_name(name);
  if (!arch) throw ValidationError("unknown architecture " + name);
  return *arch;
}

std::string epoch_tag(int epoch) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "epoch-%04d.ckpt", epoch);
  return buf;
}

std::map<std::string, std::string> run_metadata(const TrainOptions& o, std::size_t records) {
  std::map<std::string, std::string> meta = {
      {"mode", o.mode}, {"seed", std::to_string(o.seed)}, {"subset", o.subset},
      {"train_records", std::to_string(records)}};
  if (o.mode == "rl") {
    meta["epsilon_start"] = num(o.rl.epsilon_start);
    meta["epsilon_end"] = num(o.rl.epsilon_end);
  } else {
    meta["monitor"] = o.supervised.monitor == training::SupervisedConfig::Monitor::Loss ? "loss" : "distance";
  }
  return meta;
}

Cell parse_cell(const std::string& text) {
  const auto comma = text.find(',');
  int r = -1, c = -1;
  if (comma != std::string::npos) {
    std::from_chars(text.data(), text.data() + comma, r);
    std::from_chars(text.data() + comma + 1, text.data() + text.size(), c);
  }
  if (r < 0 || r >= gridworld::kGridSize || c < 0 || c >= gridworld::kGridSize) {
    throw ValidationError("bad cell '" + text + "', expected row,col inside the grid");
  }
  return {r, c};
}

void write_or_print(const fs::path& path, const std::string& text, std::ostream& out) {
  if (path.empty()) {
    out << text;
  } else {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    write_file_atomic(path, text);
  }
}

void write_image(const fs::path& path, const gridworld::Image& image) {
  if (path.empty()) throw ValidationError("--render-format ppm needs --out");
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  gridworld::write_ppm(path, image);
}

}  // namespace

int cmd_gen(const GenOptions& o, Context& ctx) {
  if (o.maps < 2) throw ValidationError("--maps must be at least 2 so both splits get a map");
  if (o.build.local_per_map < 0 || o.build.global_per_map < 0 || o.build.local_per_map + o.build.global_per_map == 0) {
    throw ValidationError("instructions per map must be non-negative and not both zero");
  }
  if (!(o.build.test_fraction > 0.0 && o.build.test_fraction < 1.0)) {
    throw ValidationError("--test-fraction must lie in (0, 1)");
  }
  write_snapshot(o.out, ctx);

  const Rng root(o.seed);
  const Rng map_rng = root.split("maps");
  std::vector<gridworld::WorldMap> maps;
  maps.reserve(static_cast<std::size_t>(o.maps));
  for (int i = 0; i < o.maps; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "map-%04d", i);
    maps.push_back(gridworld::generate_map(map_rng.split(static_cast<std::uint64_t>(i)).next_u64(), {}, id));
  }
  instructions::BuildStats stats;
  Dataset ds = instructions::build_dataset(std::move(maps), root.split("instructions"), o.build, &stats);
  if (ds.select(Split::Train).empty() || ds.select(Split::Test).empty()) {
    throw ValidationError("generation produced an empty split; raise --maps or the instructions per map");
  }
  instructions::validate_dataset(ds);
  instructions::write_dataset(o.out, ds);
  oracle::ValueCache cache(o.out / "oracle");
  oracle::supervision_set(ds, cache);

  auto count = [&](std::optional<Split> s, std::optional<Mode> m) { return ds.select(s, m).size(); };
  std::ostringstream t;
  t << std::left << std::setw(8) << "split" << std::right << std::setw(8) << "maps" << std::setw(8) << "local"
    << std::setw(8) << "global" << std::setw(8) << "total" << "\n";
  const std::pair<const char*, std::optional<Split>> rows[] = {
      {"train", Split::Train}, {"test", Split::Test}, {"total", std::nullopt}};
  for (const auto& [name, split] : rows) {
    const int n_maps = !split ? stats.train_maps + stats.test_maps
                              : (*split == Split::Train ? stats.train_maps : stats.test_maps);
    t << std::left << std::setw(8) << name << std::right << std::setw(8) << n_maps << std::setw(8)
      << count(split, Mode::Local) << std::setw(8) << count(split, Mode::Global) << std::setw(8)
      << count(split, std::nullopt) << "\n";
  }
  t << "vocabulary " << ds.vocabulary.size() << " words\n";
  if (stats.local_shortfall + stats.global_shortfall > 0) {
    t << "shortfall local " << stats.local_shortfall << " global " << stats.global_shortfall << "\n";
  }
  write_file_atomic(o.out / "stats.txt", t.str());
  ctx.out << t.str();
  return kExitOk;
}

int cmd_train(const TrainOptions& o, Context& ctx) {
  const model::Arch arch = parse_arch(o.arch);
  if (o.checkpoint_every < 1) throw ValidationError("--checkpoint-every must be positive");
  if (o.mode == "rl") {
    o.rl.validate();
  } else {
    o.supervised.validate();
  }
  const Dataset ds = load_dataset(o.data);
  std::optional<Mode> mode;
  if (o.subset == "local") mode = Mode::Local;
  if (o.subset == "global") mode = Mode::Global;
  const auto records = ds.select(Split::Train, mode);
  if (records.empty()) throw ValidationError("no training records in the selected subset");

  write_snapshot(o.out, ctx);
  fs::create_directories(o.out / "checkpoints");
  Model m = Model::create(arch, ds.vocabulary.size(), o.seed);
  const auto meta = run_metadata(o, records.size());
  {
    std::ostringstream md;
    for (const auto& [k, v] : m.metadata()) md << k << "\t" << v << "\n";
    for (const auto& [k, v] : meta) md << k << "\t" << v << "\n";
    for (const auto& [k, v] : model::parameter_counts(ds.vocabulary.size())) md << "parameters." << k << "\t" << v << "\n";
    write_file_atomic(o.out / "metadata.tsv", md.str());
  }

  std::ofstream log(o.out / "epochs.tsv", std::ios::trunc);
  auto checkpoint = [&](int epoch, const Model& current) {
    if ((epoch + 1) % o.checkpoint_every == 0) current.save(o.out / "checkpoints" / epoch_tag(epoch + 1), meta);
  };

  try {
    if (o.mode == "rl") {
      const auto examples = training::make_examples(ds, records);
      log << "epoch\tmean_reward\tmean_loss\tepsilon\tgradient_steps\treplay_size\n";
      training::RLObserver obs;
      obs.on_epoch = [&](const training::RLEpoch& e, const Model& current) {
        log << e.epoch << "\t" << num(e.mean_reward) << "\t" << num(e.mean_loss) << "\t" << num(e.epsilon) << "\t"
            << e.gradient_steps << "\t" << e.replay_size << "\n"
            << std::flush;
        ctx.err << "epoch " << e.epoch << " reward " << e.mean_reward << " loss " << e.mean_loss << "\n";
        checkpoint(e.epoch, current);
      };
      const auto result = training::rl_train(m, examples, o.rl, {}, o.seed, obs);
      if (result.stopped_early) ctx.out << "stopped at epoch " << result.epochs.back().epoch << ": reward positive\n";
      ctx.out << "final mean reward " << num(result.epochs.back().mean_reward) << "\n";
    } else {
      oracle::ValueCache cache = read_only_cache(o.data, ctx.err);
      const auto supervision = oracle::supervision_set(ds, cache);
      const auto examples = training::make_examples(ds, records, &supervision);
      log << "epoch\ttrain_loss\tvalidation_loss\tvalidation_distance\n";
      const auto result = training::supervised_train(
          m, examples, o.supervised, o.seed, [&](const training::SupervisedEpoch& e, const Model& current) {
            log << e.epoch << "\t" << num(e.train_loss) << "\t" << num(e.validation_loss) << "\t"
                << num(e.validation_distance) << "\n"
                << std::flush;
            ctx.err << "epoch " << e.epoch << " train " << e.train_loss << " validation " << e.validation_loss << "\n";
            checkpoint(e.epoch, current);
          });
      const auto& best = result.epochs.at(static_cast<std::size_t>(result.best_epoch));
      ctx.out << "best epoch " << result.best_epoch << " validation loss " << num(best.validation_loss)
              << " distance " << num(best.validation_distance) << "\n";
    }
  } catch (const training::TrainingDiverged& e) {
    m.save(o.out / "diverged.ckpt", meta);
    ctx.err << e.what() << "\ncheckpoint written to " << (o.out / "diverged.ckpt").string() << "\n";
    return kExitRuntime;
  }
  m.save(o.out / "model.ckpt", meta);
  ctx.out << "model written to " << (o.out / "model.ckpt").string() << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, Context& ctx) {
  if (o.oracle == !o.checkpoint.empty()) throw ValidationError("pass exactly one of --checkpoint and --oracle");
  if (!(o.temperature > 0.0)) throw ValidationError("--temperature must be positive");
  const Dataset ds = load_dataset(o.data);
  std::optional<Model> m;
  if (!o.oracle) {
    m.emplace(Model::load(o.checkpoint));
    if (!o.arch.empty() && model::arch_name(m->arch()) != o.arch) {
      throw ValidationError("checkpoint holds " + std::string(model::arch_name(m->arch())) + ", not " + o.arch);
    }
    if (m->vocab_size() != ds.vocabulary.size() && m->arch() != model::Arch::UvfaPos) {
      throw ValidationError("checkpoint vocabulary size does not match the dataset");
    }
  }
  if (!o.out.empty()) write_snapshot(o.out, ctx);

  oracle::ValueCache cache = read_only_cache(o.data, ctx.err);
  const auto supervision = oracle::supervision_set(ds, cache);
  const auto records = ds.select(o.split == "train" ? Split::Train : Split::Test);
  const auto examples = training::make_examples(ds, records, &supervision);
  const auto predict = m ? evaluation::model_predictor(*m) : evaluation::oracle_predictor();
  const auto report = evaluation::evaluate(predict, ds, examples, {.temperature = o.temperature, .mdp = {}});

  const std::string title = (m ? std::string(model::arch_name(m->arch())) : std::string("oracle")) + " on " + o.split;
  const std::string table = evaluation::format_report_table(report, title);
  ctx.out << table;
  if (!o.out.empty()) {
    write_file_atomic(o.out / "report.txt", table);
    write_file_atomic(o.out / "report.tsv", evaluation::format_report_lines(report));
  }
  return kExitOk;
}

int cmd_render(const RenderOptions& o, Context& ctx) {
  if (o.scale < 1) throw ValidationError("--scale must be positive");
  const Dataset ds = load_dataset(o.data);
  const instructions::Record* rec = nullptr;
  if (o.record) {
    if (*o.record >= ds.records.size()) throw ValidationError("record index out of range");
    rec = &ds.records[*o.record];
  }
  std::string map_id = o.map_id.empty() && rec ? rec->map_id : o.map_id;
  if (map_id.empty()) throw ValidationError("pass --map or --record");
  const auto& map = ds.map(map_id);

  instructions::Tokens tokens;
  if (rec) tokens = rec->tokens;
  if (!o.instruction.empty()) tokens = instructions::tokenize(o.instruction);
  if (!rec && !tokens.empty() && o.program.empty()) {
    for (const auto& r : ds.records) {
      if (r.map_id == map_id && r.tokens == tokens) rec = &r;
    }
    if (!rec) throw ValidationError("instruction not in the dataset for this map; pass --program to resolve it");
  }

  std::optional<Cell> goal;
  if (!o.program.empty()) {
    // Category and mode follow from the text: '+' joins anchors, ':' starts
    // relations and '@' adds a superlative.
    const std::string& p = o.program;
    const auto category = p.find('+') != std::string::npos   ? instructions::Category::C
                          : p.find(':') != std::string::npos ? instructions::Category::B
                                                             : instructions::Category::A;
    const auto program =
        instructions::parse_program(p, category, p.find('@') != std::string::npos ? Mode::Global : Mode::Local);
    const auto res = instructions::resolve(program, map);
    if (!res.ok()) throw ValidationError("unresolvable instruction: " + res.reason);
    goal = res.cell;
  } else if (rec) {
    goal = rec->goal;
  }

  std::ostringstream text;
  std::vector<gridworld::Image> panels;
  if (!goal) {
    text << "map " << map_id << "\n" << gridworld::render_ascii(map);
    panels.push_back(gridworld::render_map_image(map, {}, o.scale));
  } else {
    const Grid oracle_values = oracle::value_iteration(map, *goal).values;
    std::optional<Grid> predicted;
    if (!o.checkpoint.empty()) {
      const Model m = Model::load(o.checkpoint);
      if (tokens.empty() && m.arch() != model::Arch::UvfaPos) throw ValidationError("this model needs --instruction");
      std::vector<int> ids;
      if (m.arch() != model::Arch::UvfaPos) ids = ds.vocabulary.encode(tokens);
      predicted = m.predict(map, {ids, *goal});
    }
    Cell start{0, 0};
    if (!o.start.empty()) {
      start = parse_cell(o.start);
      if (!map.is_grass(start) || start == *goal) throw ValidationError("start must be a grass cell other than the goal");
    } else {
      int best = -1;
      for (Cell c : map.grass_cells()) {
        if (gridworld::manhattan(c, *goal) > best) {
          best = gridworld::manhattan(c, *goal);
          start = c;
        }
      }
    }
    Rng rng(0);
    const auto path = training::run_episode(predicted ? *predicted : oracle_values, map, *goal, start, {},
                                            {.max_steps = 75, .epsilon = 0.0}, rng);
    const gridworld::Overlay overlay{goal, path.states};
    text << "map " << map_id << " goal " << goal->row << "," << goal->col;
    if (!tokens.empty()) text << " \"" << instructions::join_tokens(tokens) << "\"";
    text << "\n" << gridworld::render_ascii(map, overlay);
    text << "greedy path under the " << (predicted ? "predicted" : "oracle") << " map: " << path.states.size()
         << " cells, " << (path.terminal ? "reaches the goal" : "does not reach the goal") << "\n";
    text << "oracle values\n" << gridworld::render_values_ascii(oracle_values);
    panels.push_back(gridworld::render_map_image(map, overlay, o.scale));
    panels.push_back(gridworld::render_values_image(oracle_values, o.scale));
    if (predicted) {
      text << "predicted values\n" << gridworld::render_values_ascii(*predicted);
      panels.push_back(gridworld::render_values_image(*predicted, o.scale));
    }
  }
  if (o.format == "ppm") {
    write_image(o.out, gridworld::hstack(panels));
  } else {
    write_or_print(o.out, text.str(), ctx.out);
  }
  return kExitOk;
}

int cmd_learning_curve(const CurveOptions& o, Context& ctx) {
  const model::Arch arch = parse_arch(o.arch);
  o.supervised.validate();
  if (o.sizes.empty() || o.seeds_per_size < 1) throw ValidationError("need at least one size and one seed");
  const Dataset ds = load_dataset(o.data);
  const auto train = ds.select(Split::Train);
  const auto test = ds.select(Split::Test);
  for (std::size_t s : o.sizes) {
    if (s == 0 || s > train.size()) {
      throw ValidationError("size " + std::to_string(s) + " outside 1.." + std::to_string(train.size()));
    }
  }
  write_snapshot(o.out, ctx);
  oracle::ValueCache cache = read_only_cache(o.data, ctx.err);
  const auto supervision = oracle::supervision_set(ds, cache);
  const auto test_examples = training::make_examples(ds, test, &supervision);

  std::ostringstream runs, pq, dist;
  runs << "size\tseed\tbest_epoch\tpolicy_quality\tdistance\tmse\n";
  pq << "size\tmean\tstdev\truns\n";
  dist << "size\tmean\tstdev\truns\n";
  const Rng root(o.seed);
  for (std::size_t size : o.sizes) {
    std::vector<double> pqs, dists;
    for (int k = 0; k < o.seeds_per_size; ++k) {
      const std::uint64_t run_seed = o.seed + static_cast<std::uint64_t>(k);
      Rng pick = root.split("subset").split(size).split(static_cast<std::uint64_t>(k));
      std::vector<std::size_t> chosen = train;
      pick.shuffle(chosen);
      chosen.resize(size);
      std::sort(chosen.begin(), chosen.end());
      const auto examples = training::make_examples(ds, chosen, &supervision);
      Model m = Model::create(arch, ds.vocabulary.size(), run_seed);
      const auto result = training::supervised_train(m, examples, o.supervised, run_seed);
      const auto report = evaluation::evaluate(evaluation::model_predictor(m), ds, test_examples,
                                               {.temperature = o.temperature, .mdp = {}});
      pqs.push_back(report.combined.policy_quality);
      dists.push_back(report.combined.mean_distance);
      runs << size << "\t" << run_seed << "\t" << result.best_epoch << "\t" << num(report.combined.policy_quality) << "\t"
           << num(report.combined.mean_distance) << "\t" << num(report.combined.mse) << "\n";
      ctx.err << "size " << size << " seed " << run_seed << " pq " << report.combined.policy_quality << " distance "
              << report.combined.mean_distance << "\n";
    }
    auto series = [&](std::ostringstream& s, const std::vector<double>& xs) {
      KahanSum sum;
      for (double x : xs) sum.add(x);
      const double mean = sum.mean();
      KahanSum sq;
      for (double x : xs) sq.add((x - mean) * (x - mean));
      const double sd = xs.size() > 1 ? std::sqrt(sq.sum() / static_cast<double>(xs.size() - 1)) : 0.0;
      s << size << "\t" << num(mean) << "\t" << num(sd) << "\t" << xs.size() << "\n";
    };
    series(pq, pqs);
    series(dist, dists);
  }
  write_file_atomic(o.out / "runs.tsv", runs.str());
  write_file_atomic(o.out / "policy_quality.tsv", pq.str());
  write_file_atomic(o.out / "distance.tsv", dist.str());
  ctx.out << "policy quality\n" << pq.str() << "distance\n" << dist.str();
  return kExitOk;
}

int cmd_diversity(const DiversityOptions& o, Context& ctx) {
  if (o.scale < 1) throw ValidationError("--scale must be positive");
  const Dataset ds = load_dataset(o.data);
  const auto h = evaluation::diversity_analysis(ds);
  if (o.format == "ppm") {
    write_image(o.out, evaluation::render_histogram_image(h, o.scale));
  } else {
    write_or_print(o.out, evaluation::render_histogram_ascii(h), ctx.out);
  }
  return kExitOk;
}

}  // namespace vmap::cli
