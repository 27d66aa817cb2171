#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hausr/trainer.hpp"

namespace hausr {

struct EvalOptions {
  int episodes = 100;
  int cap = 500;
  bool greedy = true;
  int threads = 1;
  std::uint64_t seed = 0;
};

struct EvalRow {
  int goal_id = -1;
  bool trained = false;
  int episodes = 0;
  int successes = 0;
  double success_rate = 0.0;
  double mean_steps_success = 0.0;  // nan when nothing succeeded
};

/// A policy conditioned on one fixed goal: frame stack in, action out.
/// Must be safe to call from several episode threads at once.
using GoalPolicy = std::function<int(const std::vector<Pose>& stack, Rng& rng)>;

/// Runs `episodes` episodes from random non-goal starts and counts the ones
/// that end at the goal within the cap. Per-episode RNG substreams make the
/// result independent of the thread count.
EvalRow success_rate(const RenderCache& cache, const Goal& goal,
                     const GoalPolicy& policy, const EvalOptions& opt,
                     bool trained_flag = false);

/// Greedy (or sampling) evaluation actor for one goal on a parameter
/// snapshot. Read-only after construction.
class AgentActor {
 public:
  AgentActor(const AgentNet& net, nn::NamedTensors params,
             const InputCodec& codec, const Goal& goal, bool greedy);
  int operator()(const std::vector<Pose>& stack, Rng& rng) const;

 private:
  const AgentNet& net_;
  nn::NamedTensors params_;
  const InputCodec& codec_;
  Tensor goal_embed_;
  bool greedy_;
};

/// success_rate over every goal in `goals`, sorted by goal id. Goals whose
/// ids appear in `trained_ids` are flagged.
std::vector<EvalRow> generalization_sweep(const RenderCache& cache,
                                          const std::vector<Goal>& goals,
                                          const std::vector<int>& trained_ids,
                                          const AgentNet& net,
                                          const nn::NamedTensors& params,
                                          const InputCodec& codec,
                                          const EvalOptions& opt);

struct TransferPoint {
  long updates = 0;
  double mean_steps = 0.0;  // mean over all episodes, failures count the cap
  double success_rate = 0.0;
};

/// Continues training with the goal set replaced by {novel}, sampling the
/// success rate (20 episodes by default) every `sample_every` updates.
/// `setup` is taken by value: goals and iteration budget are overwritten.
std::vector<TransferPoint> transfer_finetune(TrainSetup setup, const Goal& novel,
                                             long budget, long sample_every,
                                             const EvalOptions& eval_opt,
                                             std::vector<TrainRecord>* log_out = nullptr);

void save_eval_csv(const std::string& path, const std::vector<EvalRow>& rows);
void save_transfer_csv(const std::string& path,
                       const std::vector<TransferPoint>& curve);

}  // namespace hausr
