#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hausr/agent.hpp"
#include "hausr/codec.hpp"
#include "hausr/rewardnet.hpp"

namespace hausr {

struct TrainConfig {
  int workers = 8;
  int rollout_steps = 20;        // ns
  long iterations = 0;           // global update budget
  double lambda_initial = 1e-6;
  double lambda_final = 1e-3;
  long lambda_switch = 5000;     // global iteration of the switch
  double beta = 0.01;
  double gamma = 0.99;
  int step_cap = 500;
  LossWeights weights;
  bool one_step_value = false;
  bool joint_omega = true;       // keep training omega on worker rollouts
  bool joint_phi = false;        // keep training the state encoder as well
  bool strict_lock = false;      // snapshot+apply under one critical section
  bool checked = false;          // per-update parameter checksum verification
  long checkpoint_every = 0;     // 0 = never
  std::uint64_t seed = 0;
};

/// Step schedule for the hybrid-advantage mixing weight: the initial value
/// before the switch iteration, the final value from it on.
double lambda_schedule(const TrainConfig& cfg, long iteration);

struct TrainRecord {
  long iteration = 0;
  int worker = 0;
  double l_pi = 0.0;
  double l_v = 0.0;
  double l_psi = 0.0;
  double entropy = 0.0;
  std::optional<double> episode_return;  // set when an episode ended here
  double lambda = 0.0;
};

struct TrainResult {
  std::vector<TrainRecord> log;  // sorted by iteration
  long applied_updates = 0;      // agent updates only
  bool clean = true;
  std::string error;
};

/// Everything train() needs, owned by the caller. The omega/repnet members
/// may be left null only if every scheduled lambda is 0 and joint training
/// is off.
struct TrainSetup {
  const RenderCache* cache = nullptr;
  const InputCodec* codec = nullptr;
  const AgentNet* agent = nullptr;
  nn::ParamSet* agent_params = nullptr;
  nn::OptimizerState* agent_opt = nullptr;

  const RepNet* repnet = nullptr;             // pixel-mode phi source
  nn::ParamSet* repnet_params = nullptr;
  nn::OptimizerState* repnet_opt = nullptr;   // used when joint_phi

  const RewardNet* omeganet = nullptr;
  nn::ParamSet* omega_params = nullptr;
  nn::OptimizerState* omega_opt = nullptr;    // used when joint_omega

  std::vector<Goal> goals;
  TrainConfig cfg;

  /// Called by the worker that finishes iteration i when
  /// (i+1) % checkpoint_every == 0. Must be thread-safe.
  std::function<void(long)> checkpoint_hook;
};

/// Runs M asynchronous workers against the shared parameter sets: snapshot,
/// collect a rollout of at most ns steps following pi, compute the combined
/// gradient on the snapshot, apply to the shared parameters (stale
/// application is fine), repeat until the global budget is exhausted. Any
/// worker failure cancels the others and is reported in the result.
TrainResult train(const TrainSetup& setup);

void save_train_log_csv(const std::string& path,
                        const std::vector<TrainRecord>& log);

}  // namespace hausr
