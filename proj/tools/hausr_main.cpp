#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "hausr/checkpoint.hpp"
#include "hausr/config.hpp"
#include "hausr/csv.hpp"
#include "hausr/svg.hpp"

namespace {

using namespace hausr;

// Exit codes: 0 success, 1 usage, 2 config, 3 runtime/numeric.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<int> workers;
  bool tabular = false;
};

std::unique_ptr<Experiment> open_experiment(const CommonArgs& args) {
  ExperimentConfig cfg = load_config(args.config_path);
  if (args.seed) cfg.seed = *args.seed;
  if (args.out) cfg.out = *args.out;
  if (args.workers) cfg.train.workers = *args.workers;
  if (args.tabular) cfg.tabular = true;
  std::filesystem::create_directories(cfg.out);
  return build_experiment(cfg);
}

int cmd_collect(const CommonArgs& args) {
  auto exp = open_experiment(args);
  const auto& cfg = exp->cfg;
  std::vector<TransitionRecord> all;
  for (std::size_t g = 0; g < exp->train_goals.size(); ++g) {
    Rng rng = Rng::substream(cfg.seed, "env/collect" + std::to_string(g));
    auto part = collect_random(*exp->cache, exp->train_goals[g],
                               static_cast<std::size_t>(cfg.pretrain.transitions_per_goal),
                               cfg.pretrain.step_cap, rng);
    all.insert(all.end(), part.begin(), part.end());
  }
  save_archive(exp->rollouts_path(), all);
  std::cout << "collected " << all.size() << " transitions over "
            << exp->train_goals.size() << " goals -> " << exp->rollouts_path()
            << "\n";
  return kExitOk;
}

int cmd_pretrain(const CommonArgs& args) {
  auto exp = open_experiment(args);
  const auto& cfg = exp->cfg;
  if (cfg.tabular)
    throw ConfigError("pretrain: tabular mode has no state encoder to train");

  const auto records = load_archive(exp->rollouts_path(), exp->grid.frame_stack);
  ReplayBuffer buffer(cfg.pretrain.history_capacity);
  for (const auto& r : records) buffer.push(r);
  std::cout << "history: " << buffer.size() << " transitions, "
            << buffer.goal_terminal_count() << " goal-terminal\n";

  CsvWriter losses(cfg.out + "/pretrain_losses.csv");
  losses.row({"step", "l_ae", "l_fwd", "l_inv", "l_omega"});

  Rng sample_rng = Rng::substream(cfg.seed, "pretrain/sample");
  const long steps = std::max(cfg.pretrain.steps, cfg.pretrain.reward_steps);
  for (long step = 0; step < steps; ++step) {
    RepNet::LossReport rep;
    if (step < cfg.pretrain.steps) {
      const auto batch =
          buffer.sample_uniform(static_cast<std::size_t>(cfg.pretrain.batch), sample_rng);
      rep = exp->repnet->pretrain_step(exp->repnet_params, exp->repnet_opt, batch,
                                       *exp->cache);
    }
    double l_omega = 0.0;
    if (step < cfg.pretrain.reward_steps) {
      const auto batch = buffer.sample_balanced(
          static_cast<std::size_t>(cfg.pretrain.reward_batch), sample_rng);
      const nn::Snapshot phi_snap = exp->repnet_params.snapshot();
      l_omega = exp->omeganet->reward_train_step(
          exp->omega_params, exp->omega_opt, batch, *exp->cache,
          [&](const TransitionRecord& r) {
            return exp->repnet->encode(phi_snap.values,
                                       exp->cache->stacked_obs(r.next_stack()));
          });
    }
    losses.raw(std::to_string(step));
    losses.raw(format_double(rep.ae));
    losses.raw(format_double(rep.fwd));
    losses.raw(format_double(rep.inv));
    losses.raw(format_double(l_omega));
    losses.end_row();
  }
  nn::save_checkpoint(exp->repnet_ckpt_path(), exp->repnet_params);
  nn::save_checkpoint(exp->omega_ckpt_path(), exp->omega_params);
  std::cout << "pretrain done -> " << exp->repnet_ckpt_path() << ", "
            << exp->omega_ckpt_path() << "\n";
  return kExitOk;
}

int cmd_train(const CommonArgs& args) {
  auto exp = open_experiment(args);
  const auto& cfg = exp->cfg;
  if (!cfg.tabular) exp->load_pretrain_checkpoints();

  // Joint updates run at a reduced rate relative to pretraining.
  exp->omega_opt.config().learning_rate =
      cfg.pretrain.reward_learning_rate * cfg.joint_omega_lr_scale;
  exp->repnet_opt.config().learning_rate =
      cfg.optimizer.learning_rate * cfg.joint_phi_lr_scale;

  TrainSetup setup = exp->train_setup();
  setup.checkpoint_hook = [&](long iteration) {
    nn::save_checkpoint(cfg.out + "/agent." + std::to_string(iteration) + ".ckpt",
                        exp->agent_params);
  };
  const TrainResult result = train(setup);
  save_train_log_csv(cfg.out + "/trainlog.csv", result.log);
  if (!result.clean) {
    nn::save_checkpoint(exp->agent_ckpt_path(/*dirty=*/true), exp->agent_params);
    std::cerr << "training aborted: " << result.error << "\n";
    return kExitRuntime;
  }
  nn::save_checkpoint(exp->agent_ckpt_path(), exp->agent_params);
  if (cfg.train.joint_omega && exp->omeganet)
    nn::save_checkpoint(exp->omega_ckpt_path(), exp->omega_params);
  std::cout << "trained " << result.applied_updates << " updates -> "
            << exp->agent_ckpt_path() << "\n";
  return kExitOk;
}

int cmd_eval(const CommonArgs& args) {
  auto exp = open_experiment(args);
  const auto& cfg = exp->cfg;
  exp->load_agent_checkpoint();

  std::vector<int> trained_ids;
  for (const Goal& g : exp->train_goals) trained_ids.push_back(g.id);
  EvalOptions opt = cfg.eval;
  opt.seed = cfg.seed;
  const auto rows = generalization_sweep(*exp->cache, exp->eval_goal_list(),
                                         trained_ids, *exp->agent,
                                         exp->agent_params.copy_values(),
                                         *exp->codec, opt);
  save_eval_csv(cfg.out + "/eval.csv", rows);
  if (cfg.emit_svg)
    write_text_file(cfg.out + "/eval.svg", success_bar_chart(rows));

  double trained_mean = 0.0, novel_mean = 0.0;
  int nt = 0, nn_ = 0;
  for (const auto& r : rows)
    if (r.trained) {
      trained_mean += r.success_rate;
      ++nt;
    } else {
      novel_mean += r.success_rate;
      ++nn_;
    }
  std::cout << "eval: " << rows.size() << " goals, trained mean "
            << (nt ? trained_mean / nt : 0.0) << ", novel mean "
            << (nn_ ? novel_mean / nn_ : 0.0) << " -> " << cfg.out
            << "/eval.csv\n";
  return kExitOk;
}

int cmd_transfer(const CommonArgs& args, int goal_id) {
  auto exp = open_experiment(args);
  const auto& cfg = exp->cfg;
  exp->load_agent_checkpoint();
  if (!cfg.tabular) exp->load_pretrain_checkpoints();
  exp->omega_opt.config().learning_rate =
      cfg.pretrain.reward_learning_rate * cfg.joint_omega_lr_scale;

  const Goal novel = exp->goal_by_id(goal_id);
  for (const Goal& g : exp->train_goals)
    if (g.id == novel.id)
      throw ConfigError("transfer: goal " + std::to_string(goal_id) +
                        " is in the training set");

  TrainSetup setup = exp->train_setup();
  setup.cfg.workers = cfg.transfer_workers;
  EvalOptions opt = cfg.eval;
  opt.episodes = cfg.transfer_episodes;
  opt.seed = cfg.seed;
  const auto curve = transfer_finetune(setup, novel, cfg.transfer_budget,
                                       cfg.transfer_sample_every, opt);
  save_transfer_csv(cfg.out + "/transfer.csv", curve);
  if (cfg.emit_svg)
    write_text_file(cfg.out + "/transfer.svg", transfer_line_chart(curve));
  nn::save_checkpoint(cfg.out + "/agent.transfer.ckpt", exp->agent_params);
  std::cout << "transfer: goal " << goal_id << " success "
            << curve.front().success_rate << " -> " << curve.back().success_rate
            << " over " << cfg.transfer_budget << " updates\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"goal-conditioned navigation agent with universal successor features"};
  app.require_subcommand(1);

  CommonArgs args;
  int transfer_goal = -1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", args.config_path, "experiment file (JSON)")
        ->required();
    cmd->add_option("--seed", args.seed, "override the root seed");
    cmd->add_option("--out", args.out, "override the output directory");
    cmd->add_option("--workers", args.workers, "override the worker count");
    cmd->add_flag("--tabular", args.tabular, "one-hot verification mode");
  };

  CLI::App* collect = app.add_subcommand("collect", "collect random rollouts");
  CLI::App* pretrain =
      app.add_subcommand("pretrain", "train state features and reward weights");
  CLI::App* train_cmd = app.add_subcommand("train", "asynchronous agent training");
  CLI::App* eval_cmd = app.add_subcommand("eval", "success-rate sweep");
  CLI::App* transfer =
      app.add_subcommand("transfer", "fine-tune toward one novel goal");
  for (CLI::App* c : {collect, pretrain, train_cmd, eval_cmd, transfer})
    add_common(c);
  transfer->add_option("--goal", transfer_goal, "novel goal id (state index)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (collect->parsed()) return cmd_collect(args);
    if (pretrain->parsed()) return cmd_pretrain(args);
    if (train_cmd->parsed()) return cmd_train(args);
    if (eval_cmd->parsed()) return cmd_eval(args);
    if (transfer->parsed()) return cmd_transfer(args, transfer_goal);
  } catch (const ConfigError& e) {
    std::cerr << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
