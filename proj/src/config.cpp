#include "hausr/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>

#include "hausr/checkpoint.hpp"
#include "json.hpp"

namespace hausr {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where,
                    const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("config: unknown key \"" + where + it.key() + "\"");
}

template <typename T>
void read(const json& obj, const std::string& key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("config: bad value for \"" + key + "\"");
  }
}

Pose parse_pose(const json& p, const std::string& where) {
  if (!p.is_object()) throw ConfigError("config: " + where + " must be an object");
  reject_unknown(p, where + ".", {"x", "y", "heading"});
  Pose pose;
  if (!p.contains("x") || !p.contains("y") || !p.contains("heading"))
    throw ConfigError("config: " + where + " needs x, y, heading");
  pose.x = p.at("x").get<int>();
  pose.y = p.at("y").get<int>();
  const auto h = heading_from_name(p.at("heading").get<std::string>());
  if (!h) throw ConfigError("config: " + where + ".heading must be N, E, S or W");
  pose.heading = *h;
  return pose;
}

nn::ConvSpec parse_conv(const json& c, const std::string& where) {
  reject_unknown(c, where + ".", {"filters", "kernel", "stride"});
  nn::ConvSpec spec;
  read(c, "filters", spec.filters);
  read(c, "kernel", spec.kernel);
  read(c, "stride", spec.stride);
  if (spec.filters < 1 || spec.kernel < 1 || spec.stride < 1)
    throw ConfigError("config: " + where + " values must be positive");
  return spec;
}

void require_positive(long v, const std::string& key) {
  if (v <= 0) throw ConfigError("config: \"" + key + "\" must be positive");
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  json root;
  try {
    root = json::parse(f);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");

  reject_unknown(root, "",
                 {"map", "seed", "out", "tabular", "render", "features",
                  "network", "optimizer", "pretrain", "train", "goals", "eval",
                  "transfer", "emit_svg"});

  ExperimentConfig cfg;
  read(root, "map", cfg.map);
  read(root, "seed", cfg.seed);
  read(root, "out", cfg.out);
  read(root, "tabular", cfg.tabular);
  read(root, "emit_svg", cfg.emit_svg);
  if (cfg.map.empty()) throw ConfigError("config: \"map\" is required");
  if (!std::filesystem::exists(cfg.map))
    throw ConfigError("config: map file does not exist: " + cfg.map);

  if (root.contains("render")) {
    const json& r = root.at("render");
    reject_unknown(r, "render.", {"height", "width", "frame_stack"});
    read(r, "height", cfg.render_height);
    read(r, "width", cfg.render_width);
    read(r, "frame_stack", cfg.frame_stack);
  }
  if (root.contains("features")) {
    const json& r = root.at("features");
    reject_unknown(r, "features.", {"dim"});
    read(r, "dim", cfg.feature_dim);
    require_positive(static_cast<long>(cfg.feature_dim), "features.dim");
  }
  if (root.contains("network")) {
    const json& n = root.at("network");
    reject_unknown(n, "network.",
                   {"conv1", "conv2", "encoder_out", "trunk", "decoder_hidden",
                    "forward_hidden", "inverse_hidden"});
    if (n.contains("conv1")) cfg.conv1 = parse_conv(n.at("conv1"), "network.conv1");
    if (n.contains("conv2")) cfg.conv2 = parse_conv(n.at("conv2"), "network.conv2");
    read(n, "encoder_out", cfg.encoder_out);
    read(n, "trunk", cfg.trunk);
    read(n, "decoder_hidden", cfg.decoder_hidden);
    read(n, "forward_hidden", cfg.forward_hidden);
    read(n, "inverse_hidden", cfg.inverse_hidden);
    if (cfg.trunk.empty()) throw ConfigError("config: network.trunk must not be empty");
  }
  if (root.contains("optimizer")) {
    const json& o = root.at("optimizer");
    reject_unknown(o, "optimizer.", {"algorithm", "learning_rate", "decay", "epsilon"});
    std::string algo = "rmsprop";
    read(o, "algorithm", algo);
    if (algo == "rmsprop")
      cfg.optimizer.algo = nn::OptimizerConfig::Algo::RmsProp;
    else if (algo == "sgd")
      cfg.optimizer.algo = nn::OptimizerConfig::Algo::Sgd;
    else
      throw ConfigError("config: optimizer.algorithm must be rmsprop or sgd");
    read(o, "learning_rate", cfg.optimizer.learning_rate);
    read(o, "decay", cfg.optimizer.decay);
    read(o, "epsilon", cfg.optimizer.epsilon);
  }
  if (root.contains("pretrain")) {
    const json& p = root.at("pretrain");
    reject_unknown(p, "pretrain.",
                   {"transitions_per_goal", "steps", "batch", "reward_steps",
                    "reward_batch", "reward_learning_rate", "history_capacity",
                    "step_cap", "ae_weight", "forward_weight", "inverse_weight"});
    read(p, "transitions_per_goal", cfg.pretrain.transitions_per_goal);
    read(p, "steps", cfg.pretrain.steps);
    read(p, "batch", cfg.pretrain.batch);
    read(p, "reward_steps", cfg.pretrain.reward_steps);
    read(p, "reward_batch", cfg.pretrain.reward_batch);
    read(p, "reward_learning_rate", cfg.pretrain.reward_learning_rate);
    read(p, "history_capacity", cfg.pretrain.history_capacity);
    read(p, "step_cap", cfg.pretrain.step_cap);
    read(p, "ae_weight", cfg.pretrain.ae_weight);
    read(p, "forward_weight", cfg.pretrain.forward_weight);
    read(p, "inverse_weight", cfg.pretrain.inverse_weight);
    require_positive(cfg.pretrain.transitions_per_goal, "pretrain.transitions_per_goal");
    require_positive(cfg.pretrain.batch, "pretrain.batch");
    require_positive(cfg.pretrain.step_cap, "pretrain.step_cap");
    require_positive(static_cast<long>(cfg.pretrain.history_capacity),
                     "pretrain.history_capacity");
  }
  if (root.contains("train")) {
    const json& t = root.at("train");
    reject_unknown(t, "train.",
                   {"workers", "rollout_steps", "iterations", "lambda_initial",
                    "lambda_final", "lambda_switch", "beta", "gamma", "step_cap",
                    "value_loss_weight", "psi_loss_weight", "one_step_value",
                    "joint_omega", "joint_omega_lr_scale", "joint_phi",
                    "joint_phi_lr_scale", "strict_lock", "checked_mode",
                    "checkpoint_every"});
    read(t, "workers", cfg.train.workers);
    read(t, "rollout_steps", cfg.train.rollout_steps);
    read(t, "iterations", cfg.train.iterations);
    read(t, "lambda_initial", cfg.train.lambda_initial);
    read(t, "lambda_final", cfg.train.lambda_final);
    read(t, "lambda_switch", cfg.train.lambda_switch);
    read(t, "beta", cfg.train.beta);
    read(t, "gamma", cfg.train.gamma);
    read(t, "step_cap", cfg.train.step_cap);
    read(t, "value_loss_weight", cfg.train.weights.value);
    read(t, "psi_loss_weight", cfg.train.weights.psi);
    read(t, "one_step_value", cfg.train.one_step_value);
    read(t, "joint_omega", cfg.train.joint_omega);
    read(t, "joint_phi", cfg.train.joint_phi);
    read(t, "strict_lock", cfg.train.strict_lock);
    read(t, "checked_mode", cfg.train.checked);
    read(t, "checkpoint_every", cfg.train.checkpoint_every);
    double joint_scale = 0.1, phi_scale = 0.1;
    read(t, "joint_omega_lr_scale", joint_scale);
    read(t, "joint_phi_lr_scale", phi_scale);
    cfg.joint_omega_lr_scale = joint_scale;
    cfg.joint_phi_lr_scale = phi_scale;
    require_positive(cfg.train.workers, "train.workers");
    require_positive(cfg.train.rollout_steps, "train.rollout_steps");
    require_positive(cfg.train.step_cap, "train.step_cap");
    if (cfg.train.iterations < 0)
      throw ConfigError("config: train.iterations must be >= 0");
    if (cfg.train.lambda_switch > cfg.train.iterations &&
        cfg.train.lambda_initial != cfg.train.lambda_final)
      throw ConfigError("config: train.lambda_switch exceeds train.iterations");
  }
  if (root.contains("goals")) {
    const json& g = root.at("goals");
    if (!g.is_array()) throw ConfigError("config: goals must be an array");
    for (std::size_t i = 0; i < g.size(); ++i)
      cfg.goals.push_back(parse_pose(g[i], "goals[" + std::to_string(i) + "]"));
  }
  if (cfg.goals.empty()) throw ConfigError("config: at least one goal is required");
  if (root.contains("eval")) {
    const json& e = root.at("eval");
    reject_unknown(e, "eval.", {"episodes", "cap", "greedy", "threads", "goals"});
    read(e, "episodes", cfg.eval.episodes);
    read(e, "cap", cfg.eval.cap);
    read(e, "greedy", cfg.eval.greedy);
    read(e, "threads", cfg.eval.threads);
    require_positive(cfg.eval.episodes, "eval.episodes");
    require_positive(cfg.eval.cap, "eval.cap");
    require_positive(cfg.eval.threads, "eval.threads");
    if (e.contains("goals")) {
      const json& sel = e.at("goals");
      if (sel.is_string()) {
        const std::string s = sel.get<std::string>();
        if (s == "trained")
          cfg.eval_goals.kind = EvalSelection::Kind::Trained;
        else if (s == "all")
          cfg.eval_goals.kind = EvalSelection::Kind::All;
        else
          throw ConfigError("config: eval.goals must be \"trained\", \"all\", "
                            "{\"holdout\": N} or a pose list");
      } else if (sel.is_object()) {
        reject_unknown(sel, "eval.goals.", {"holdout"});
        cfg.eval_goals.kind = EvalSelection::Kind::Holdout;
        read(sel, "holdout", cfg.eval_goals.holdout);
        require_positive(cfg.eval_goals.holdout, "eval.goals.holdout");
      } else if (sel.is_array()) {
        cfg.eval_goals.kind = EvalSelection::Kind::Listed;
        for (std::size_t i = 0; i < sel.size(); ++i)
          cfg.eval_goals.listed.push_back(
              parse_pose(sel[i], "eval.goals[" + std::to_string(i) + "]"));
      } else {
        throw ConfigError("config: eval.goals has an unsupported type");
      }
    }
  }
  if (root.contains("transfer")) {
    const json& t = root.at("transfer");
    reject_unknown(t, "transfer.", {"budget", "sample_every", "episodes", "workers"});
    read(t, "budget", cfg.transfer_budget);
    read(t, "sample_every", cfg.transfer_sample_every);
    read(t, "episodes", cfg.transfer_episodes);
    read(t, "workers", cfg.transfer_workers);
    require_positive(cfg.transfer_sample_every, "transfer.sample_every");
    require_positive(cfg.transfer_episodes, "transfer.episodes");
    require_positive(cfg.transfer_workers, "transfer.workers");
    if (cfg.transfer_budget < 0)
      throw ConfigError("config: transfer.budget must be >= 0");
  }
  return cfg;
}

TrainSetup Experiment::train_setup() {
  TrainSetup s;
  s.cache = cache.get();
  s.codec = codec.get();
  s.agent = agent.get();
  s.agent_params = &agent_params;
  s.agent_opt = &agent_opt;
  s.repnet = repnet.get();
  s.repnet_params = repnet ? &repnet_params : nullptr;
  s.repnet_opt = repnet ? &repnet_opt : nullptr;
  s.omeganet = omeganet.get();
  s.omega_params = omeganet ? &omega_params : nullptr;
  s.omega_opt = omeganet ? &omega_opt : nullptr;
  s.goals = train_goals;
  s.cfg = cfg.train;
  s.cfg.seed = cfg.seed;
  return s;
}

std::vector<Goal> Experiment::eval_goal_list() const {
  std::vector<Goal> out = train_goals;
  auto contains = [&](const Pose& p) {
    for (const Goal& g : out)
      if (g.state == p) return true;
    return false;
  };
  switch (cfg.eval_goals.kind) {
    case EvalSelection::Kind::Trained:
      break;
    case EvalSelection::Kind::All:
      for (const Pose& p : enumerate_states(grid))
        if (!contains(p)) out.push_back(make_goal(*cache, p));
      break;
    case EvalSelection::Kind::Listed:
      for (const Pose& p : cfg.eval_goals.listed)
        if (!contains(p)) out.push_back(make_goal(*cache, p));
      break;
    case EvalSelection::Kind::Holdout: {
      Rng rng = Rng::substream(cfg.seed, "eval/holdout");
      const auto all = enumerate_states(grid);
      int guard = 0;
      while (static_cast<int>(out.size()) - static_cast<int>(train_goals.size()) <
             cfg.eval_goals.holdout) {
        const Pose p = all[rng.uniform_index(all.size())];
        if (!contains(p)) out.push_back(make_goal(*cache, p));
        if (++guard > 100000)
          throw ConfigError("config: cannot sample enough holdout goals");
      }
      break;
    }
  }
  return out;
}

Goal Experiment::goal_by_id(int id) const {
  const auto states = enumerate_states(grid);
  if (id < 0 || id >= static_cast<int>(states.size()))
    throw ConfigError("goal id " + std::to_string(id) + " out of range (0.." +
                      std::to_string(states.size() - 1) + ")");
  return make_goal(*cache, states[static_cast<std::size_t>(id)]);
}

std::string Experiment::rollouts_path() const { return cfg.out + "/rollouts.bin"; }
std::string Experiment::repnet_ckpt_path() const { return cfg.out + "/repnet.ckpt"; }
std::string Experiment::omega_ckpt_path() const { return cfg.out + "/omega.ckpt"; }
std::string Experiment::agent_ckpt_path(bool dirty) const {
  return cfg.out + (dirty ? "/agent.dirty.ckpt" : "/agent.ckpt");
}

void Experiment::load_pretrain_checkpoints() {
  const nn::Checkpoint rep = nn::load_checkpoint(repnet_ckpt_path());
  repnet_params.load_values(rep.entries, rep.version);
  const nn::Checkpoint om = nn::load_checkpoint(omega_ckpt_path());
  omega_params.load_values(om.entries, om.version);
}

void Experiment::load_agent_checkpoint() {
  const nn::Checkpoint ck = nn::load_checkpoint(agent_ckpt_path());
  agent_params.load_values(ck.entries, ck.version);
}

std::unique_ptr<Experiment> build_experiment(const ExperimentConfig& cfg) {
  auto exp = std::make_unique<Experiment>();
  exp->cfg = cfg;
  exp->grid = GridSpec::from_file(cfg.map, cfg.render_height, cfg.render_width,
                                  cfg.frame_stack);
  exp->cache = std::make_unique<RenderCache>(exp->grid);
  exp->codec = std::make_unique<InputCodec>(
      cfg.tabular ? InputCodec::Mode::Tabular : InputCodec::Mode::Pixels,
      exp->cache.get());

  for (const Pose& p : cfg.goals) {
    if (!exp->grid.valid_pose(p))
      throw ConfigError("config: goal (" + std::to_string(p.x) + "," +
                        std::to_string(p.y) + ") is not a free cell");
    exp->train_goals.push_back(make_goal(*exp->cache, p));
  }

  const auto input_shape = exp->codec->input_shape();
  const std::size_t d =
      cfg.tabular ? exp->codec->n_states() : cfg.feature_dim;

  if (!cfg.tabular) {
    RepNetConfig rc;
    rc.obs_shape = input_shape;
    rc.conv1 = cfg.conv1;
    rc.conv2 = cfg.conv2;
    rc.d = d;
    rc.decoder_hidden = cfg.decoder_hidden;
    rc.forward_hidden = cfg.forward_hidden;
    rc.inverse_hidden = cfg.inverse_hidden;
    rc.ae_weight = cfg.pretrain.ae_weight;
    rc.forward_weight = cfg.pretrain.forward_weight;
    rc.inverse_weight = cfg.pretrain.inverse_weight;
    exp->repnet = std::make_unique<RepNet>(rc);
    Rng rng = Rng::substream(cfg.seed, "init/repnet");
    exp->repnet->register_params(exp->repnet_params, rng);
  }

  RewardNetConfig wc;
  wc.goal_shape = input_shape;
  wc.conv = !cfg.tabular;
  wc.conv1 = cfg.conv1;
  wc.conv2 = cfg.conv2;
  wc.d = d;
  exp->omeganet = std::make_unique<RewardNet>(wc);
  {
    Rng rng = Rng::substream(cfg.seed, "init/omega");
    exp->omeganet->register_params(exp->omega_params, rng);
  }

  AgentConfig ac;
  ac.input_shape = input_shape;
  ac.conv = !cfg.tabular;
  ac.conv1 = cfg.conv1;
  ac.conv2 = cfg.conv2;
  ac.encoder_out = cfg.encoder_out;
  ac.trunk = cfg.trunk;
  ac.psi_dim = d;
  exp->agent = std::make_unique<AgentNet>(ac);
  {
    Rng rng = Rng::substream(cfg.seed, "init/agent");
    exp->agent->register_params(exp->agent_params, rng);
  }

  exp->repnet_opt.config() = cfg.optimizer;
  exp->agent_opt.config() = cfg.optimizer;
  exp->omega_opt.config() = cfg.optimizer;
  exp->omega_opt.config().learning_rate = cfg.pretrain.reward_learning_rate;
  return exp;
}

}  // namespace hausr
