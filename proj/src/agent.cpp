#include "hausr/agent.hpp"

#include <cmath>
#include <stdexcept>

namespace hausr {

using nn::GradMap;
using nn::Tape;

AgentNet::AgentNet(AgentConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.trunk.empty()) throw std::invalid_argument("AgentNet: empty trunk");
  std::size_t embed = 0;
  if (cfg_.conv) {
    encoder_ = nn::image_encoder("agent/enc", cfg_.input_shape, cfg_.conv1,
                                 cfg_.conv2, cfg_.encoder_out);
    embed = cfg_.encoder_out;
  } else {
    // Identity encoder: the input (a one-hot state code) is the embedding.
    embed = 1;
    for (std::size_t s : cfg_.input_shape) embed *= s;
    cfg_.encoder_out = embed;
  }

  std::size_t width = 2 * embed;
  for (std::size_t i = 0; i < cfg_.trunk.size(); ++i) {
    trunk_.dense("agent/trunk/fc" + std::to_string(i + 1), width, cfg_.trunk[i])
        .relu();
    width = cfg_.trunk[i];
  }
  pi_head_.dense("agent/pi", width, cfg_.actions);
  v_head_.dense("agent/v", width, 1);
  psi_head_.dense("agent/psi", width, cfg_.psi_dim);
}

void AgentNet::register_params(nn::ParamSet& ps, Rng& rng) const {
  encoder_.register_params(ps, rng);
  trunk_.register_params(ps, rng);
  pi_head_.register_params(ps, rng);
  v_head_.register_params(ps, rng);
  psi_head_.register_params(ps, rng);
}

AgentNet::GoalContext AgentNet::encode_goal(const NamedTensors& params,
                                            const Tensor& goal) const {
  GoalContext ctx;
  ctx.embed = encoder_.forward(params, goal, ctx.tape);
  if (!cfg_.conv) ctx.embed = ctx.embed.reshaped({ctx.embed.size()});
  return ctx;
}

AgentNet::StepForward AgentNet::forward_step(const NamedTensors& params,
                                             const Tensor& obs,
                                             const GoalContext& goal) const {
  StepForward fw;
  Tensor embed = encoder_.forward(params, obs, fw.enc_tape);
  if (!cfg_.conv) embed = embed.reshaped({embed.size()});
  Tensor trunk_out =
      trunk_.forward(params, nn::concat(embed, goal.embed), fw.trunk_tape);
  fw.logits = pi_head_.forward(params, trunk_out, fw.pi_tape);
  const Tensor v = v_head_.forward(params, trunk_out, fw.v_tape);
  fw.out.pi = nn::softmax(fw.logits);
  fw.out.v = v[0];
  fw.out.psi = psi_head_.forward(params, trunk_out, fw.psi_tape);
  return fw;
}

AgentOutput AgentNet::evaluate(const NamedTensors& params, const Tensor& obs,
                               const Tensor& goal_embed) const {
  Tensor embed = encoder_.forward(params, obs);
  if (!cfg_.conv) embed = embed.reshaped({embed.size()});
  const Tensor trunk_out = trunk_.forward(params, nn::concat(embed, goal_embed));
  AgentOutput out;
  out.pi = nn::softmax(pi_head_.forward(params, trunk_out));
  out.v = v_head_.forward(params, trunk_out)[0];
  out.psi = psi_head_.forward(params, trunk_out);
  return out;
}

AgentOutput AgentNet::act(const NamedTensors& params, const Tensor& obs,
                          const Tensor& goal) const {
  Tensor goal_embed = encoder_.forward(params, goal);
  if (!cfg_.conv) goal_embed = goal_embed.reshaped({goal_embed.size()});
  return evaluate(params, obs, goal_embed);
}

Tensor AgentNet::backward_step(const NamedTensors& params, StepForward& fw,
                               const Tensor& d_logits, double d_v,
                               const Tensor* d_psi, GradMap& grads) const {
  Tensor g_trunk = pi_head_.backward(params, fw.pi_tape, d_logits, grads);
  g_trunk.add(v_head_.backward(params, fw.v_tape,
                               Tensor::from({1}, {d_v}), grads));
  if (d_psi)
    g_trunk.add(psi_head_.backward(params, fw.psi_tape, *d_psi, grads));
  const Tensor g_concat = trunk_.backward(params, fw.trunk_tape, g_trunk, grads);

  const std::size_t embed = cfg_.encoder_out;
  Tensor g_obs_embed({embed}), g_goal_embed({embed});
  for (std::size_t i = 0; i < embed; ++i) {
    g_obs_embed[i] = g_concat[i];
    g_goal_embed[i] = g_concat[embed + i];
  }
  if (cfg_.conv) {
    encoder_.backward(params, fw.enc_tape, g_obs_embed, grads);
  }
  return g_goal_embed;
}

void AgentNet::backward_goal(const NamedTensors& params, GoalContext& goal,
                             const Tensor& d_embed, GradMap& grads) const {
  if (cfg_.conv) encoder_.backward(params, goal.tape, d_embed, grads);
}

// ---------------------------------------------------------------------------
// Losses

std::vector<double> n_step_returns(const std::vector<double>& rewards,
                                   double bootstrap_value, double gamma) {
  std::vector<double> out(rewards.size());
  double r = bootstrap_value;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    r = rewards[t] + gamma * r;
    out[t] = r;
  }
  return out;
}

std::vector<double> advantage_v(const std::vector<double>& returns,
                                const std::vector<double>& values) {
  if (returns.size() != values.size())
    throw std::invalid_argument("advantage_v: length mismatch");
  std::vector<double> out(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) out[t] = returns[t] - values[t];
  return out;
}

double advantage_psi(const Tensor& phi_t, const Tensor& psi_t,
                     const Tensor& psi_t1, const Tensor& omega, double gamma_t) {
  double a = 0.0;
  for (std::size_t i = 0; i < phi_t.size(); ++i)
    a += (phi_t[i] + gamma_t * psi_t1[i] - psi_t[i]) * omega[i];
  return a;
}

double loss_psi(const std::vector<Tensor>& phi, const std::vector<Tensor>& psi,
                const std::vector<Tensor>& psi_next, bool terminal_goal,
                double gamma) {
  const std::size_t T = psi.size();
  if (phi.size() != T || psi_next.size() != T)
    throw std::invalid_argument("loss_psi: length mismatch");
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const double gamma_t = (terminal_goal && t + 1 == T) ? 0.0 : gamma;
    for (std::size_t i = 0; i < psi[t].size(); ++i) {
      const double r = phi[t][i] + gamma_t * psi_next[t][i] - psi[t][i];
      loss += r * r;
    }
  }
  return loss / static_cast<double>(T);
}

double loss_v(const std::vector<double>& returns,
              const std::vector<double>& values) {
  if (returns.size() != values.size())
    throw std::invalid_argument("loss_v: length mismatch");
  double loss = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    const double e = returns[t] - values[t];
    loss += e * e;
  }
  return loss / static_cast<double>(returns.size());
}

double total_loss(double l_pi, double l_v, double l_psi, double mean_entropy,
                  double lambda, double beta, const LossWeights& w) {
  double total = l_pi + w.value * l_v - beta * mean_entropy;
  if (lambda != 0.0) total += w.psi * l_psi;
  return total;
}

RolloutLosses backprop_rollout(const AgentNet& net, const NamedTensors& params,
                               AgentNet::GoalContext& goal,
                               std::vector<AgentNet::StepForward>& fw,
                               const RolloutData& ro,
                               const std::optional<AgentOutput>& bootstrap,
                               const std::vector<Tensor>* phi,
                               const Tensor* omega_g, double lambda, double beta,
                               double gamma, const LossWeights& weights,
                               bool one_step_value, GradMap& grads) {
  const std::size_t T = fw.size();
  if (T == 0) throw std::invalid_argument("backprop_rollout: empty rollout");
  if (ro.actions.size() != T || ro.rewards.size() != T)
    throw std::invalid_argument("backprop_rollout: rollout arrays mismatch");
  const bool use_psi = lambda != 0.0;
  if (use_psi && (!phi || !omega_g || phi->size() != T))
    throw std::invalid_argument("backprop_rollout: psi pathway needs phi and omega");
  if (!ro.terminal_goal && !bootstrap)
    throw std::invalid_argument("backprop_rollout: truncated rollout needs bootstrap");

  const double inv_t = 1.0 / static_cast<double>(T);
  const std::size_t d = net.config().psi_dim;

  std::vector<double> values(T);
  for (std::size_t t = 0; t < T; ++t) values[t] = fw[t].out.v;
  const double boot_v = ro.terminal_goal ? 0.0 : bootstrap->v;
  const std::vector<double> returns = n_step_returns(ro.rewards, boot_v, gamma);
  const std::vector<double> adv_v = advantage_v(returns, values);

  RolloutLosses out;
  out.steps = static_cast<int>(T);
  out.l_v = loss_v(returns, values);

  // psi targets and advantages; everything on this path is a constant for
  // the policy gradient, and the Bellman target gets no gradient either.
  std::vector<Tensor> psi_next;
  std::vector<double> adv_psi(T, 0.0);
  if (use_psi) {
    psi_next.reserve(T);
    for (std::size_t t = 0; t + 1 < T; ++t) psi_next.push_back(fw[t + 1].out.psi);
    psi_next.push_back(ro.terminal_goal ? Tensor({d}) : bootstrap->psi);
    std::vector<Tensor> psi_cur;
    psi_cur.reserve(T);
    for (std::size_t t = 0; t < T; ++t) psi_cur.push_back(fw[t].out.psi);
    out.l_psi = loss_psi(*phi, psi_cur, psi_next, ro.terminal_goal, gamma);
    for (std::size_t t = 0; t < T; ++t) {
      const double gamma_t = (ro.terminal_goal && t + 1 == T) ? 0.0 : gamma;
      adv_psi[t] = advantage_psi((*phi)[t], psi_cur[t], psi_next[t], *omega_g, gamma_t);
    }
  }

  // One-step value targets replace the n-step returns in L_V when asked.
  std::vector<double> v_targets = returns;
  if (one_step_value) {
    for (std::size_t t = 0; t < T; ++t) {
      const double gamma_t = (ro.terminal_goal && t + 1 == T) ? 0.0 : gamma;
      const double v_next = t + 1 < T ? values[t + 1] : boot_v;
      v_targets[t] = ro.rewards[t] + gamma_t * v_next;
    }
    out.l_v = loss_v(v_targets, values);
  }

  Tensor goal_grad({net.config().encoder_out});
  for (std::size_t t = 0; t < T; ++t) {
    const Tensor& p = fw[t].out.pi;
    const double h = nn::entropy(p);
    out.entropy += h * inv_t;

    const double adv = use_psi ? lambda * adv_psi[t] + adv_v[t] : adv_v[t];
    const double logp =
        std::log(std::max(p[static_cast<std::size_t>(ro.actions[t])], 1e-300));
    out.l_pi -= adv * logp * inv_t;

    // d/dlogits of [-adv*log pi(a) - beta*H]/T, both through the softmax.
    Tensor d_logits({p.size()});
    for (std::size_t k = 0; k < p.size(); ++k) {
      const double onehot = k == static_cast<std::size_t>(ro.actions[t]) ? 1.0 : 0.0;
      double g = adv * (p[k] - onehot) * inv_t;
      if (p[k] > 0.0) g += beta * p[k] * (std::log(p[k]) + h) * inv_t;
      d_logits[k] = g;
    }

    const double d_v = 2.0 * weights.value * (values[t] - v_targets[t]) * inv_t;

    Tensor d_psi({d});
    if (use_psi) {
      const double gamma_t = (ro.terminal_goal && t + 1 == T) ? 0.0 : gamma;
      const double c = 2.0 * weights.psi * inv_t;
      for (std::size_t i = 0; i < d; ++i) {
        const double target = (*phi)[t][i] + gamma_t * psi_next[t][i];
        d_psi[i] = c * (fw[t].out.psi[i] - target);
      }
    }
    goal_grad.add(net.backward_step(params, fw[t], d_logits, d_v,
                                    use_psi ? &d_psi : nullptr, grads));
  }
  net.backward_goal(params, goal, goal_grad, grads);

  out.total = total_loss(out.l_pi, out.l_v, out.l_psi, out.entropy, lambda, beta,
                         weights);
  return out;
}

RolloutLosses rollout_gradients(const AgentNet& net, const NamedTensors& params,
                                const RolloutData& ro,
                                const std::vector<Tensor>* phi,
                                const Tensor* omega_g, double lambda,
                                double beta, double gamma,
                                const LossWeights& weights, bool one_step_value,
                                GradMap& grads) {
  AgentNet::GoalContext goal = net.encode_goal(params, ro.goal);
  std::vector<AgentNet::StepForward> fw;
  fw.reserve(ro.obs.size());
  for (const Tensor& obs : ro.obs)
    fw.push_back(net.forward_step(params, obs, goal));
  std::optional<AgentOutput> bootstrap;
  if (!ro.terminal_goal)
    bootstrap = net.evaluate(params, ro.final_next_obs, goal.embed);
  return backprop_rollout(net, params, goal, fw, ro, bootstrap, phi, omega_g,
                          lambda, beta, gamma, weights, one_step_value, grads);
}

}  // namespace hausr
