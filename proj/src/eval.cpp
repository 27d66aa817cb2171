#include "hausr/eval.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "hausr/csv.hpp"

namespace hausr {

namespace {

struct EpisodeOutcome {
  bool success = false;
  int steps = 0;
};

EpisodeOutcome run_episode(const RenderCache& cache, const Goal& goal,
                           const GoalPolicy& policy, int cap, Rng rng) {
  Episode ep(cache, goal, cap);
  ep.reset(std::nullopt, rng);
  EpisodeOutcome out;
  while (!ep.done()) {
    const int a = policy(ep.stack_poses(), rng);
    auto s = ep.step(static_cast<Action>(a));
    out.steps += 1;
    if (s.terminal && s.by_goal) out.success = true;
  }
  return out;
}

}  // namespace

EvalRow success_rate(const RenderCache& cache, const Goal& goal,
                     const GoalPolicy& policy, const EvalOptions& opt,
                     bool trained_flag) {
  std::vector<EpisodeOutcome> outcomes(static_cast<std::size_t>(opt.episodes));
  const std::string stream_base = "eval/goal" + std::to_string(goal.id) + "/ep";

  auto run_range = [&](int lo, int hi) {
    for (int e = lo; e < hi; ++e)
      outcomes[static_cast<std::size_t>(e)] =
          run_episode(cache, goal, policy, opt.cap,
                      Rng::substream(opt.seed, stream_base + std::to_string(e)));
  };

  const int threads = std::max(1, std::min(opt.threads, opt.episodes));
  if (threads == 1) {
    run_range(0, opt.episodes);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (opt.episodes + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const int lo = t * chunk, hi = std::min(opt.episodes, lo + chunk);
      if (lo < hi) pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  EvalRow row;
  row.goal_id = goal.id;
  row.trained = trained_flag;
  row.episodes = opt.episodes;
  double step_sum = 0.0;
  for (const auto& o : outcomes)
    if (o.success) {
      row.successes += 1;
      step_sum += o.steps;
    }
  row.success_rate = opt.episodes > 0
                         ? static_cast<double>(row.successes) / opt.episodes
                         : 0.0;
  row.mean_steps_success =
      row.successes > 0 ? step_sum / row.successes
                        : std::numeric_limits<double>::quiet_NaN();
  return row;
}

AgentActor::AgentActor(const AgentNet& net, nn::NamedTensors params,
                       const InputCodec& codec, const Goal& goal, bool greedy)
    : net_(net), params_(std::move(params)), codec_(codec), greedy_(greedy) {
  goal_embed_ = net_.encode_goal(params_, codec_.goal_tensor(goal)).embed;
}

int AgentActor::operator()(const std::vector<Pose>& stack, Rng& rng) const {
  const AgentOutput out =
      net_.evaluate(params_, codec_.obs_from_stack(stack), goal_embed_);
  if (!greedy_)
    return rng.categorical(out.pi.data(), static_cast<int>(out.pi.size()));
  int best = 0;
  for (std::size_t i = 1; i < out.pi.size(); ++i)
    if (out.pi[i] > out.pi[best]) best = static_cast<int>(i);
  return best;
}

std::vector<EvalRow> generalization_sweep(const RenderCache& cache,
                                          const std::vector<Goal>& goals,
                                          const std::vector<int>& trained_ids,
                                          const AgentNet& net,
                                          const nn::NamedTensors& params,
                                          const InputCodec& codec,
                                          const EvalOptions& opt) {
  std::vector<EvalRow> rows;
  rows.reserve(goals.size());
  for (const Goal& g : goals) {
    const bool trained =
        std::find(trained_ids.begin(), trained_ids.end(), g.id) != trained_ids.end();
    AgentActor actor(net, params, codec, g, opt.greedy);
    rows.push_back(success_rate(
        cache, g, [&actor](const std::vector<Pose>& s, Rng& r) { return actor(s, r); },
        opt, trained));
  }
  std::sort(rows.begin(), rows.end(),
            [](const EvalRow& a, const EvalRow& b) { return a.goal_id < b.goal_id; });
  return rows;
}

namespace {

TransferPoint transfer_sample(const TrainSetup& setup, const Goal& novel,
                              long updates, const EvalOptions& eval_opt) {
  AgentActor actor(*setup.agent, setup.agent_params->copy_values(), *setup.codec,
                   novel, eval_opt.greedy);
  EvalOptions opt = eval_opt;
  opt.seed = eval_opt.seed + static_cast<std::uint64_t>(updates);
  const EvalRow row = success_rate(
      *setup.cache, novel,
      [&actor](const std::vector<Pose>& s, Rng& r) { return actor(s, r); }, opt);

  TransferPoint pt;
  pt.updates = updates;
  pt.success_rate = row.success_rate;
  // Mean steps with failures counted at the cap, so the curve is defined
  // even before the first success.
  const double success_steps =
      row.successes > 0 ? row.mean_steps_success * row.successes : 0.0;
  pt.mean_steps = (success_steps +
                   static_cast<double>(row.episodes - row.successes) * opt.cap) /
                  std::max(1, row.episodes);
  return pt;
}

}  // namespace

std::vector<TransferPoint> transfer_finetune(TrainSetup setup, const Goal& novel,
                                             long budget, long sample_every,
                                             const EvalOptions& eval_opt,
                                             std::vector<TrainRecord>* log_out) {
  setup.goals = {novel};
  std::vector<TransferPoint> curve;
  curve.push_back(transfer_sample(setup, novel, 0, eval_opt));
  long done = 0;
  long chunk_index = 0;
  while (done < budget) {
    const long chunk = std::min(sample_every, budget - done);
    setup.cfg.iterations = chunk;
    // Fine-tuning runs past the schedule switch: hold lambda at its final
    // value and give each chunk its own RNG stream.
    setup.cfg.lambda_initial = setup.cfg.lambda_final;
    setup.cfg.lambda_switch = 0;
    setup.cfg.seed = setup.cfg.seed + static_cast<std::uint64_t>(++chunk_index);
    TrainResult r = train(setup);
    if (!r.clean) throw std::runtime_error("transfer_finetune: " + r.error);
    if (log_out)
      log_out->insert(log_out->end(), r.log.begin(), r.log.end());
    done += chunk;
    curve.push_back(transfer_sample(setup, novel, done, eval_opt));
  }
  return curve;
}

void save_eval_csv(const std::string& path, const std::vector<EvalRow>& rows) {
  CsvWriter csv(path);
  csv.row({"goal_id", "trained", "episodes", "successes", "success_rate",
           "mean_steps_success"});
  for (const EvalRow& r : rows) {
    csv.raw(std::to_string(r.goal_id));
    csv.raw(r.trained ? "1" : "0");
    csv.raw(std::to_string(r.episodes));
    csv.raw(std::to_string(r.successes));
    csv.raw(format_double(r.success_rate));
    csv.raw(format_double(r.mean_steps_success));
    csv.end_row();
  }
}

void save_transfer_csv(const std::string& path,
                       const std::vector<TransferPoint>& curve) {
  CsvWriter csv(path);
  csv.row({"updates", "mean_steps", "success_rate"});
  for (const TransferPoint& p : curve) {
    csv.raw(std::to_string(p.updates));
    csv.raw(format_double(p.mean_steps));
    csv.raw(format_double(p.success_rate));
    csv.end_row();
  }
}

}  // namespace hausr
