#include "vmap/cli/cli.hpp"

#include <algorithm>
#include <sstream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "vmap/gridworld/map_io.hpp"
#include "vmap/instructions/program.hpp"
#include "vmap/model/model.hpp"
#include "vmap/numerics/checkpoint.hpp"

namespace vmap::cli {
namespace {

std::vector<std::string> arch_names() {
  std::vector<std::string> names;
  for (auto a : model::kArchs) names.emplace_back(model::arch_name(a));
  return names;
}

struct SharedTraining {
  std::optional<int> epochs;
  std::optional<double> learning_rate;
  std::optional<std::size_t> batch;
  std::string monitor = "loss";
};

void add_supervised_options(CLI::App* sub, training::SupervisedConfig& s, std::string& monitor) {
  sub->add_option("--validation-fraction", s.validation_fraction, "Share of training maps held out")
      ->capture_default_str();
  sub->add_option("--patience", s.patience, "Epochs without validation improvement before stopping")
      ->capture_default_str();
  sub->add_option("--monitor", monitor, "Early-stopping quantity on the validation maps")
      ->check(CLI::IsMember({"loss", "distance"}))
      ->capture_default_str();
}

training::SupervisedConfig::Monitor monitor_from_name(const std::string& name) {
  return name == "distance" ? training::SupervisedConfig::Monitor::GoalDistance
                            : training::SupervisedConfig::Monitor::Loss;
}

// "--config FILE" may appear after the subcommand; CLI11 reads it at the top level.
std::vector<std::string> hoist_config(std::vector<std::string> args) {
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      std::vector<std::string> front = {args[i], args[i + 1]};
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i), args.begin() + static_cast<std::ptrdiff_t>(i) + 2);
      args.insert(args.begin(), front.begin(), front.end());
      break;
    }
  }
  return args;
}

// The invoked subcommand's options as TOML keys `<command>.<option>`, which
// `--config` reads back. Unset optional values are left out.
std::string snapshot(const CLI::App& sub) {
  std::istringstream in(sub.config_to_str(true, false));
  std::ostringstream out;
  for (std::string line; std::getline(in, line);) {
    if (line.empty() || line.ends_with("=\"\"")) continue;
    out << sub.get_name() << "." << line << "\n";
  }
  return out.str();
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Instruction-grounded value maps in 10x10 puddle worlds"};
  app.set_config("--config", "", "Read options from a TOML file (a run's config.toml reproduces it)");
  app.require_subcommand(1);
  const auto archs = arch_names();

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate maps, instructions, vocabulary and the oracle cache");
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--maps", gen.maps)->capture_default_str();
  gen_cmd->add_option("--local-per-map", gen.build.local_per_map)->capture_default_str();
  gen_cmd->add_option("--global-per-map", gen.build.global_per_map)->capture_default_str();
  gen_cmd->add_option("--test-fraction", gen.build.test_fraction)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Dataset directory")->required()->configurable(false);

  TrainOptions train;
  SharedTraining train_shared;
  auto* train_cmd = app.add_subcommand("train", "Train a model by reinforcement or supervised regression");
  train_cmd->add_option("--mode", train.mode)->check(CLI::IsMember({"rl", "supervised"}))->capture_default_str();
  train_cmd->add_option("--arch", train.arch)->check(CLI::IsMember(archs))->capture_default_str();
  train_cmd->add_option("--data", train.data, "Dataset directory from gen")->required();
  train_cmd->add_option("--out", train.out, "Run directory")->required()->configurable(false);
  train_cmd->add_option("--seed", train.seed)->capture_default_str();
  train_cmd->add_option("--subset", train.subset, "Training records to use")
      ->check(CLI::IsMember({"all", "local", "global"}))
      ->capture_default_str();
  train_cmd->add_option("--epochs", train_shared.epochs, "Default 200 (rl) or 60 (supervised)");
  train_cmd->add_option("--lr", train_shared.learning_rate, "Adam learning rate, default 1e-3");
  train_cmd->add_option("--batch", train_shared.batch, "Transitions (rl, default 32) or examples (supervised, 8)");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every)->capture_default_str();
  train_cmd->add_option("--epsilon", train.rl.epsilon_start, "Exploration rate at the first epoch")->capture_default_str();
  train_cmd->add_option("--epsilon-end", train.rl.epsilon_end, "Exploration rate at the last epoch")->capture_default_str();
  train_cmd->add_option("--goals-per-epoch", train.rl.goals_per_epoch)->capture_default_str();
  train_cmd->add_option("--max-steps", train.rl.max_steps)->capture_default_str();
  train_cmd->add_option("--gradient-steps", train.rl.gradient_steps, "Gradient steps per episode")->capture_default_str();
  train_cmd->add_option("--sync-period", train.rl.sync_period, "Target sync, in gradient steps")->capture_default_str();
  train_cmd->add_option("--replay-capacity", train.rl.replay_capacity)->capture_default_str();
  train_cmd->add_flag("--stop-when-positive", train.rl.stop_when_positive);
  train_cmd->add_flag("--recompute-each-step", train.rl.recompute_each_step);
  add_supervised_options(train_cmd, train.supervised, train_shared.monitor);

  EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint (or the oracle) on a dataset split");
  eval_cmd->add_option("--checkpoint", eval.checkpoint);
  eval_cmd->add_flag("--oracle", eval.oracle, "Score the oracle value maps themselves");
  eval_cmd->add_option("--arch", eval.arch, "Expected architecture")->check(CLI::IsMember(archs));
  eval_cmd->add_option("--data", eval.data)->required();
  eval_cmd->add_option("--split", eval.split)->check(CLI::IsMember({"train", "test"}))->capture_default_str();
  eval_cmd->add_option("--temperature", eval.temperature)->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Directory for report.txt and report.tsv")->configurable(false);

  RenderOptions render;
  std::optional<std::size_t> render_record;
  auto* render_cmd = app.add_subcommand("render", "Draw a map with oracle and predicted value maps");
  render_cmd->add_option("--data", render.data)->required();
  render_cmd->add_option("--map", render.map_id, "Map id (defaults to the record's map)");
  render_cmd->add_option("--record", render_record, "Instruction record index");
  render_cmd->add_option("--instruction", render.instruction, "Instruction text");
  render_cmd->add_option("--program", render.program, "Program text, e.g. rock@westernmost:above*1");
  render_cmd->add_option("--start", render.start, "Start cell row,col (default: grass cell farthest from the goal)");
  render_cmd->add_option("--checkpoint", render.checkpoint);
  render_cmd->add_option("--render-format", render.format)->check(CLI::IsMember({"ascii", "ppm"}))->capture_default_str();
  render_cmd->add_option("--scale", render.scale, "Pixels per cell")->capture_default_str();
  render_cmd->add_option("--out", render.out, "Output file (stdout for ascii when absent)")->configurable(false);

  CurveOptions curve;
  SharedTraining curve_shared;
  auto* curve_cmd = app.add_subcommand("curve", "Supervised learning curve over training-set sizes");
  curve_cmd->add_option("--arch", curve.arch)->check(CLI::IsMember(archs))->capture_default_str();
  curve_cmd->add_option("--data", curve.data)->required();
  curve_cmd->add_option("--out", curve.out)->required()->configurable(false);
  curve_cmd->add_option("--seed", curve.seed)->capture_default_str();
  curve_cmd->add_option("--sizes", curve.sizes)->delimiter(',')->capture_default_str();
  curve_cmd->add_option("--seeds-per-size", curve.seeds_per_size)->capture_default_str();
  curve_cmd->add_option("--temperature", curve.temperature)->capture_default_str();
  curve_cmd->add_option("--epochs", curve_shared.epochs, "Default 60");
  curve_cmd->add_option("--lr", curve_shared.learning_rate, "Default 1e-3");
  curve_cmd->add_option("--batch", curve_shared.batch, "Default 8");
  add_supervised_options(curve_cmd, curve.supervised, curve_shared.monitor);

  DiversityOptions diversity;
  auto* div_cmd = app.add_subcommand("diversity", "Edit-distance versus goal-distance histogram of test instructions");
  div_cmd->add_option("--data", diversity.data)->required();
  div_cmd->add_option("--render-format", diversity.format)->check(CLI::IsMember({"ascii", "ppm"}))->capture_default_str();
  div_cmd->add_option("--scale", diversity.scale)->capture_default_str();
  div_cmd->add_option("--out", diversity.out, "Output file (stdout for ascii when absent)")->configurable(false);

  try {
    args = hoist_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  Context ctx{out, err, {}};
  for (const CLI::App* sub : app.get_subcommands()) ctx.snapshot = snapshot(*sub);
  try {
    if (*gen_cmd) return cmd_gen(gen, ctx);
    if (*train_cmd) {
      if (train.mode == "rl") {
        if (train_shared.epochs) train.rl.epochs = *train_shared.epochs;
        if (train_shared.learning_rate) train.rl.learning_rate = *train_shared.learning_rate;
        if (train_shared.batch) train.rl.batch_size = *train_shared.batch;
      } else {
        if (train_shared.epochs) train.supervised.epochs = *train_shared.epochs;
        if (train_shared.learning_rate) train.supervised.learning_rate = *train_shared.learning_rate;
        if (train_shared.batch) train.supervised.batch_size = *train_shared.batch;
        train.supervised.monitor = monitor_from_name(train_shared.monitor);
      }
      return cmd_train(train, ctx);
    }
    if (*eval_cmd) return cmd_eval(eval, ctx);
    if (*render_cmd) {
      render.record = render_record;
      return cmd_render(render, ctx);
    }
    if (*curve_cmd) {
      if (curve_shared.epochs) curve.supervised.epochs = *curve_shared.epochs;
      if (curve_shared.learning_rate) curve.supervised.learning_rate = *curve_shared.learning_rate;
      if (curve_shared.batch) curve.supervised.batch_size = *curve_shared.batch;
      curve.supervised.monitor = monitor_from_name(curve_shared.monitor);
      return cmd_learning_curve(curve, ctx);
    }
    if (*div_cmd) return cmd_diversity(diversity, ctx);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const instructions::DatasetError& e) {
    err << "invalid dataset: " << e.what() << "\n";
    return kExitValidation;
  } catch (const gridworld::MapFormatError& e) {
    err << "invalid map file: " << e.what() << "\n";
    return kExitValidation;
  } catch (const instructions::VocabularyError& e) {
    err << "vocabulary: " << e.what() << "\n";
    return kExitValidation;
  } catch (const numerics::CheckpointError& e) {
    err << "checkpoint: " << e.what() << "\n";
    return kExitValidation;
  } catch (const model::ModelError& e) {
    err << "model: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "runtime failure: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace vmap::cli
