#include "hausr/repnet.hpp"

#include <cmath>
#include <stdexcept>

namespace hausr {

using nn::Tape;
using nn::Tensor;

namespace {

std::size_t shape_size(const std::vector<std::size_t>& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

}  // namespace

RepNet::RepNet(RepNetConfig cfg) : cfg_(std::move(cfg)) {
  const std::size_t pixels = shape_size(cfg_.obs_shape);
  encoder_ = nn::image_encoder("repnet/enc", cfg_.obs_shape, cfg_.conv1,
                               cfg_.conv2, cfg_.d);
  decoder_.dense("repnet/dec/fc1", cfg_.d, cfg_.decoder_hidden)
      .relu()
      .dense("repnet/dec/fc2", cfg_.decoder_hidden, pixels);
  forward_head_
      .dense("repnet/fwd/fc1", cfg_.d + kNumActions, cfg_.forward_hidden)
      .relu()
      .dense("repnet/fwd/fc2", cfg_.forward_hidden, cfg_.d);
  inverse_head_.dense("repnet/inv/fc1", 2 * cfg_.d, cfg_.inverse_hidden)
      .relu()
      .dense("repnet/inv/fc2", cfg_.inverse_hidden, kNumActions);
}

void RepNet::register_params(ParamSet& ps, Rng& rng) const {
  encoder_.register_params(ps, rng);
  decoder_.register_params(ps, rng);
  forward_head_.register_params(ps, rng);
  inverse_head_.register_params(ps, rng);
}

Tensor RepNet::encode(const NamedTensors& params, const Tensor& obs) const {
  return encoder_.forward(params, obs);
}

Tensor RepNet::decode(const NamedTensors& params, const Tensor& phi) const {
  return decoder_.forward(params, phi);
}

Tensor RepNet::forward_dynamics(const NamedTensors& params, const Tensor& phi,
                                int action) const {
  return forward_head_.forward(
      params, nn::concat(phi, nn::one_hot(static_cast<std::size_t>(action),
                                          kNumActions)));
}

Tensor RepNet::inverse_dynamics(const NamedTensors& params, const Tensor& phi_t,
                                const Tensor& phi_t1) const {
  return inverse_head_.forward(params, nn::concat(phi_t, phi_t1));
}

RepNet::LossReport RepNet::batch_loss(
    const NamedTensors& params, const std::vector<const TransitionRecord*>& batch,
    const RenderCache& cache, const NamedTensors* fwd_target_params) const {
  return run_batch(params, batch, cache, nullptr, fwd_target_params);
}

RepNet::LossReport RepNet::batch_gradients(
    const NamedTensors& params, const std::vector<const TransitionRecord*>& batch,
    const RenderCache& cache, GradMap& grads) const {
  return run_batch(params, batch, cache, &grads, nullptr);
}

RepNet::LossReport RepNet::run_batch(
    const NamedTensors& params, const std::vector<const TransitionRecord*>& batch,
    const RenderCache& cache, GradMap* grads,
    const NamedTensors* fwd_target_params) const {
  if (batch.empty()) throw std::invalid_argument("RepNet: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossReport report;

  for (const TransitionRecord* rec : batch) {
    const Tensor obs = cache.stacked_obs(rec->obs_stack);
    const Tensor next_obs = cache.stacked_obs(rec->next_stack());
    const int action = static_cast<int>(rec->action);

    Tape enc_tape, next_enc_tape, dec_tape, fwd_tape, inv_tape;
    const Tensor phi = encoder_.forward(params, obs, enc_tape);
    const Tensor phi_next = encoder_.forward(params, next_obs, next_enc_tape);
    const Tensor fwd_target = fwd_target_params
                                  ? encoder_.forward(*fwd_target_params, next_obs)
                                  : phi_next;

    // Autoencoder: mean squared reconstruction error of the current stack.
    const Tensor recon = decoder_.forward(params, phi, dec_tape);
    double l_ae = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
      const double e = recon[i] - obs[i];
      l_ae += e * e;
    }
    l_ae /= static_cast<double>(recon.size());

    // Forward dynamics: predict phi(s_{t+1}); target held constant.
    const Tensor fwd_in =
        nn::concat(phi, nn::one_hot(static_cast<std::size_t>(action), kNumActions));
    const Tensor pred = forward_head_.forward(params, fwd_in, fwd_tape);
    double l_fwd = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double e = pred[i] - fwd_target[i];
      l_fwd += e * e;
    }
    l_fwd /= static_cast<double>(pred.size());

    // Inverse dynamics: cross-entropy of the taken action.
    const Tensor inv_in = nn::concat(phi, phi_next);
    const Tensor logits = inverse_head_.forward(params, inv_in, inv_tape);
    const Tensor p = nn::softmax(logits);
    const double l_inv = -std::log(std::max(p[static_cast<std::size_t>(action)], 1e-300));

    report.ae += l_ae * inv_b;
    report.fwd += l_fwd * inv_b;
    report.inv += l_inv * inv_b;

    if (!grads) continue;

    Tensor g_phi({cfg_.d});

    if (cfg_.ae_weight != 0.0) {
      Tensor d_recon({recon.size()});
      const double c = 2.0 * cfg_.ae_weight * inv_b / static_cast<double>(recon.size());
      for (std::size_t i = 0; i < recon.size(); ++i)
        d_recon[i] = c * (recon[i] - obs[i]);
      g_phi.add(decoder_.backward(params, dec_tape, d_recon, *grads));
    }

    if (cfg_.forward_weight != 0.0) {
      Tensor d_pred({pred.size()});
      const double c = 2.0 * cfg_.forward_weight * inv_b / static_cast<double>(pred.size());
      for (std::size_t i = 0; i < pred.size(); ++i)
        d_pred[i] = c * (pred[i] - fwd_target[i]);
      const Tensor g_in = forward_head_.backward(params, fwd_tape, d_pred, *grads);
      for (std::size_t i = 0; i < cfg_.d; ++i) g_phi[i] += g_in[i];
    }

    Tensor g_phi_next({cfg_.d});
    if (cfg_.inverse_weight != 0.0) {
      Tensor d_logits({logits.size()});
      for (std::size_t i = 0; i < logits.size(); ++i)
        d_logits[i] = cfg_.inverse_weight * inv_b *
                      (p[i] - (i == static_cast<std::size_t>(action) ? 1.0 : 0.0));
      const Tensor g_in = inverse_head_.backward(params, inv_tape, d_logits, *grads);
      for (std::size_t i = 0; i < cfg_.d; ++i) {
        g_phi[i] += g_in[i];
        g_phi_next[i] += g_in[cfg_.d + i];
      }
    }

    encoder_.backward(params, enc_tape, g_phi, *grads);
    if (cfg_.inverse_weight != 0.0)
      encoder_.backward(params, next_enc_tape, g_phi_next, *grads);
  }

  report.combined = cfg_.ae_weight * report.ae + cfg_.forward_weight * report.fwd +
                    cfg_.inverse_weight * report.inv;
  return report;
}

RepNet::LossReport RepNet::pretrain_step(
    ParamSet& params, OptimizerState& opt,
    const std::vector<const TransitionRecord*>& batch,
    const RenderCache& cache) const {
  GradMap grads;
  const Snapshot snap = params.snapshot();
  LossReport report = batch_gradients(snap.values, batch, cache, grads);
  params.apply_update(grads, opt);
  return report;
}

}  // namespace hausr
