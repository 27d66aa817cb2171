#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "hausr/eval.hpp"
#include "hausr/trainer.hpp"

namespace hausr {

/// Thrown for any configuration defect; the CLI maps it to exit code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PretrainConfig {
  long transitions_per_goal = 4000;
  long steps = 3000;                // combined-loss updates
  int batch = 32;
  long reward_steps = 4000;         // omega regression updates
  int reward_batch = 32;
  double reward_learning_rate = 7e-4;
  std::size_t history_capacity = 50000;
  int step_cap = 100;               // cap for random collection episodes
  double ae_weight = 1.0;
  double forward_weight = 1.0;
  double inverse_weight = 1.0;
};

struct EvalSelection {
  enum class Kind { Trained, All, Holdout, Listed };
  Kind kind = Kind::Trained;
  int holdout = 0;                 // Kind::Holdout: seeded sample size
  std::vector<Pose> listed;        // Kind::Listed
};

struct ExperimentConfig {
  std::string map;
  std::uint64_t seed = 0;
  std::string out = "runs/out";
  bool tabular = false;

  int render_height = 32;
  int render_width = 32;
  int frame_stack = 4;

  std::size_t feature_dim = 32;  // d

  nn::ConvSpec conv1{8, 4, 2};
  nn::ConvSpec conv2{16, 3, 2};
  std::size_t encoder_out = 64;
  std::vector<std::size_t> trunk{128, 64};
  std::size_t decoder_hidden = 128;
  std::size_t forward_hidden = 64;
  std::size_t inverse_hidden = 64;

  nn::OptimizerConfig optimizer;

  PretrainConfig pretrain;
  TrainConfig train;

  std::vector<Pose> goals;

  EvalOptions eval;
  EvalSelection eval_goals;

  long transfer_budget = 3000;
  long transfer_sample_every = 300;
  int transfer_episodes = 20;
  int transfer_workers = 2;

  double joint_omega_lr_scale = 0.1;
  double joint_phi_lr_scale = 0.1;

  bool emit_svg = false;
};

/// Parses and validates the JSON experiment file. Unknown keys anywhere in
/// the tree are hard errors naming the offending key; referenced files must
/// exist.
ExperimentConfig load_config(const std::string& path);

/// One fully wired experiment: grid, caches, networks and parameter stores.
struct Experiment {
  ExperimentConfig cfg;
  GridSpec grid;
  std::unique_ptr<RenderCache> cache;
  std::unique_ptr<InputCodec> codec;

  std::unique_ptr<RepNet> repnet;
  nn::ParamSet repnet_params;
  nn::OptimizerState repnet_opt;

  std::unique_ptr<RewardNet> omeganet;
  nn::ParamSet omega_params;
  nn::OptimizerState omega_opt;

  std::unique_ptr<AgentNet> agent;
  nn::ParamSet agent_params;
  nn::OptimizerState agent_opt;

  std::vector<Goal> train_goals;

  TrainSetup train_setup();
  std::vector<Goal> eval_goal_list() const;  // per cfg.eval_goals, incl. trained
  Goal goal_by_id(int id) const;

  // Output-directory conventions; commands compose through these paths.
  std::string rollouts_path() const;
  std::string repnet_ckpt_path() const;
  std::string omega_ckpt_path() const;
  std::string agent_ckpt_path(bool dirty = false) const;

  void load_pretrain_checkpoints();  // repnet + omega
  void load_agent_checkpoint();
};

/// Builds the experiment with freshly initialized (seeded) parameters.
std::unique_ptr<Experiment> build_experiment(const ExperimentConfig& cfg);

}  // namespace hausr
