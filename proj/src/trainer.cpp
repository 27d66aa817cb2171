#include "hausr/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "hausr/csv.hpp"

namespace hausr {

using nn::GradMap;
using nn::Snapshot;

double lambda_schedule(const TrainConfig& cfg, long iteration) {
  return iteration < cfg.lambda_switch ? cfg.lambda_initial : cfg.lambda_final;
}

namespace {

bool psi_pathway_possible(const TrainConfig& cfg) {
  return cfg.lambda_initial != 0.0 || cfg.lambda_final != 0.0;
}

struct SharedState {
  std::atomic<long> next_iteration{0};
  std::atomic<bool> failed{false};
  std::mutex log_mu;
  std::vector<TrainRecord> log;
  std::string error;
  std::mutex strict_mu;
  std::atomic<long> applied{0};
};

class Worker {
 public:
  Worker(const TrainSetup& setup, SharedState& shared, int id)
      : s_(setup), shared_(shared), id_(id),
        rng_(Rng::substream(setup.cfg.seed, "worker" + std::to_string(id))) {}

  void run() {
    try {
      loop();
    } catch (const std::exception& e) {
      std::lock_guard lock(shared_.log_mu);
      shared_.failed.store(true);
      if (shared_.error.empty())
        shared_.error = "worker " + std::to_string(id_) + ": " + e.what();
    }
  }

 private:
  void loop() {
    const TrainConfig& cfg = s_.cfg;
    while (!shared_.failed.load(std::memory_order_relaxed)) {
      const long it = shared_.next_iteration.fetch_add(1);
      if (it >= cfg.iterations) break;
      const double lambda = lambda_schedule(cfg, it);

      std::optional<std::unique_lock<std::mutex>> strict;
      if (cfg.strict_lock) strict.emplace(shared_.strict_mu);

      const Snapshot snap = s_.agent_params->snapshot();
      const bool use_psi = lambda != 0.0;
      Snapshot omega_snap;
      if (use_psi || cfg.joint_omega) omega_snap = s_.omega_params->snapshot();
      if (cfg.joint_phi && phi_)
        phi_->refresh(s_.repnet_params->snapshot().values);

      // Rollout of at most ns steps following pi on the snapshot.
      if (!episode_ || episode_->done()) start_episode();
      AgentNet::GoalContext goal_ctx =
          s_.agent->encode_goal(snap.values, goal_tensor_);

      RolloutData ro;
      ro.goal = goal_tensor_;
      std::vector<AgentNet::StepForward> fw;
      std::vector<std::vector<Pose>> stacks;
      std::optional<double> finished_return;
      for (int k = 0; k < cfg.rollout_steps && !episode_->done(); ++k) {
        stacks.push_back(episode_->stack_poses());
        Tensor obs = s_.codec->obs_from_stack(stacks.back());
        fw.push_back(s_.agent->forward_step(snap.values, obs, goal_ctx));
        const Tensor& pi = fw.back().out.pi;
        const int action = rng_.categorical(pi.data(), static_cast<int>(pi.size()));
        auto step = episode_->step(static_cast<Action>(action));
        ro.obs.push_back(std::move(obs));
        ro.actions.push_back(action);
        ro.rewards.push_back(step.reward);
        if (step.terminal) {
          ro.terminal_goal = step.by_goal;
          finished_return = episode_->episode_return();
        }
      }
      stacks.push_back(episode_->stack_poses());  // s_T

      std::optional<AgentOutput> bootstrap;
      if (!ro.terminal_goal)
        bootstrap = s_.agent->evaluate(
            snap.values, s_.codec->obs_from_stack(stacks.back()), goal_ctx.embed);

      std::vector<Tensor> phi_values;
      Tensor omega_g;
      if (use_psi) {
        phi_values.reserve(fw.size());
        for (std::size_t t = 0; t < fw.size(); ++t)
          phi_values.push_back(phi_->phi_of_stack(stacks[t]));
        omega_g = s_.omeganet->omega(omega_snap.values, goal_tensor_);
      }

      GradMap grads;
      RolloutLosses losses = backprop_rollout(
          *s_.agent, snap.values, goal_ctx, fw, ro, bootstrap,
          use_psi ? &phi_values : nullptr, use_psi ? &omega_g : nullptr, lambda,
          cfg.beta, cfg.gamma, cfg.weights, cfg.one_step_value, grads);
      s_.agent_params->apply_update(grads, *s_.agent_opt);
      shared_.applied.fetch_add(1);

      if (cfg.joint_omega) update_omega(omega_snap, stacks, ro);
      if (cfg.joint_phi) update_phi(stacks, ro);

      if (cfg.checkpoint_every > 0 && s_.checkpoint_hook &&
          (it + 1) % cfg.checkpoint_every == 0)
        s_.checkpoint_hook(it + 1);

      TrainRecord rec;
      rec.iteration = it;
      rec.worker = id_;
      rec.l_pi = losses.l_pi;
      rec.l_v = losses.l_v;
      rec.l_psi = losses.l_psi;
      rec.entropy = losses.entropy;
      rec.episode_return = finished_return;
      rec.lambda = lambda;
      std::lock_guard lock(shared_.log_mu);
      shared_.log.push_back(rec);
    }
  }

  void start_episode() {
    const std::size_t g = rng_.uniform_index(s_.goals.size());
    const Goal& goal = s_.goals[g];
    goal_tensor_ = s_.codec->goal_tensor(goal);
    episode_.emplace(*s_.cache, goal, s_.cfg.step_cap);
    episode_->reset(std::nullopt, rng_);
  }

  /// Records of the finished rollout, for the auxiliary updates.
  std::vector<TransitionRecord> rollout_records(
      const std::vector<std::vector<Pose>>& stacks, const RolloutData& ro) const {
    std::vector<TransitionRecord> recs;
    recs.reserve(ro.actions.size());
    for (std::size_t t = 0; t < ro.actions.size(); ++t) {
      TransitionRecord r;
      r.goal = episode_->goal().state;
      r.obs_stack = stacks[t];
      r.pose = stacks[t].back();
      r.action = static_cast<Action>(ro.actions[t]);
      r.reward = ro.rewards[t];
      r.next_pose = stacks[t + 1].back();
      r.terminal = (t + 1 == ro.actions.size()) &&
                   (ro.terminal_goal || episode_->done());
      r.by_goal = (t + 1 == ro.actions.size()) && ro.terminal_goal;
      recs.push_back(std::move(r));
    }
    return recs;
  }

  void update_omega(const Snapshot& omega_snap,
                    const std::vector<std::vector<Pose>>& stacks,
                    const RolloutData& ro) {
    const auto recs = rollout_records(stacks, ro);
    std::vector<const TransitionRecord*> batch;
    batch.reserve(recs.size());
    for (const auto& r : recs) batch.push_back(&r);
    GradMap grads;
    s_.omeganet->batch_gradients(
        omega_snap.values, batch, *s_.cache,
        [&](const TransitionRecord& r) {
          return phi_->phi_of_stack(r.next_stack());
        },
        grads);
    s_.omega_params->apply_update(grads, *s_.omega_opt);
  }

  void update_phi(const std::vector<std::vector<Pose>>& stacks,
                  const RolloutData& ro) {
    const auto recs = rollout_records(stacks, ro);
    std::vector<const TransitionRecord*> batch;
    batch.reserve(recs.size());
    for (const auto& r : recs) batch.push_back(&r);
    GradMap grads;
    const Snapshot snap = s_.repnet_params->snapshot();
    s_.repnet->batch_gradients(snap.values, batch, *s_.cache, grads);
    s_.repnet_params->apply_update(grads, *s_.repnet_opt);
  }

 public:
  void init_phi_provider() {
    if (s_.codec->mode() == InputCodec::Mode::Tabular)
      phi_.emplace(s_.codec);
    else if (s_.repnet && s_.repnet_params)
      phi_.emplace(s_.codec, s_.repnet, s_.repnet_params->snapshot().values);
  }

 private:
  const TrainSetup& s_;
  SharedState& shared_;
  int id_;
  Rng rng_;
  std::optional<PhiProvider> phi_;
  std::optional<Episode> episode_;
  Tensor goal_tensor_;
};

}  // namespace

TrainResult train(const TrainSetup& setup) {
  const TrainConfig& cfg = setup.cfg;
  if (!setup.cache || !setup.codec || !setup.agent || !setup.agent_params ||
      !setup.agent_opt)
    throw std::invalid_argument("train: incomplete setup");
  if (setup.goals.empty()) throw std::invalid_argument("train: no goals");
  if (cfg.workers < 1 || cfg.rollout_steps < 1)
    throw std::invalid_argument("train: workers and rollout steps must be >= 1");
  if (cfg.lambda_switch > cfg.iterations && cfg.lambda_initial != cfg.lambda_final)
    throw std::invalid_argument("train: lambda switch beyond the iteration budget");
  const bool needs_omega = psi_pathway_possible(cfg) || cfg.joint_omega;
  if (needs_omega && (!setup.omeganet || !setup.omega_params ||
                      (cfg.joint_omega && !setup.omega_opt)))
    throw std::invalid_argument("train: psi pathway needs the omega net");
  if (psi_pathway_possible(cfg) &&
      setup.codec->mode() == InputCodec::Mode::Pixels &&
      (!setup.repnet || !setup.repnet_params))
    throw std::invalid_argument("train: psi pathway needs the state encoder");
  if (cfg.joint_phi && (!setup.repnet || !setup.repnet_params || !setup.repnet_opt))
    throw std::invalid_argument("train: joint_phi needs the state encoder");

  setup.agent_params->set_checked(cfg.checked);
  if (setup.omega_params) setup.omega_params->set_checked(cfg.checked);

  SharedState shared;
  std::vector<Worker> workers;
  workers.reserve(static_cast<std::size_t>(cfg.workers));
  for (int i = 0; i < cfg.workers; ++i) workers.emplace_back(setup, shared, i);
  for (auto& w : workers) w.init_phi_provider();

  if (cfg.workers == 1) {
    workers[0].run();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(workers.size());
    for (auto& w : workers) threads.emplace_back([&w] { w.run(); });
    for (auto& t : threads) t.join();
  }

  setup.agent_params->set_checked(false);
  if (setup.omega_params) setup.omega_params->set_checked(false);

  TrainResult result;
  result.log = std::move(shared.log);
  std::sort(result.log.begin(), result.log.end(),
            [](const TrainRecord& a, const TrainRecord& b) {
              return a.iteration < b.iteration;
            });
  result.applied_updates = shared.applied.load();
  result.clean = !shared.failed.load();
  result.error = shared.error;
  return result;
}

void save_train_log_csv(const std::string& path,
                        const std::vector<TrainRecord>& log) {
  CsvWriter csv(path);
  csv.row({"iteration", "worker", "l_pi", "l_v", "l_psi", "entropy",
           "episode_return", "lambda"});
  for (const TrainRecord& r : log) {
    csv.raw(std::to_string(r.iteration));
    csv.raw(std::to_string(r.worker));
    csv.raw(format_double(r.l_pi));
    csv.raw(format_double(r.l_v));
    csv.raw(format_double(r.l_psi));
    csv.raw(format_double(r.entropy));
    csv.raw(r.episode_return ? format_double(*r.episode_return) : "");
    csv.raw(format_double(r.lambda));
    csv.end_row();
  }
}

}  // namespace hausr
