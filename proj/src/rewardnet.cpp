#include "hausr/rewardnet.hpp"

#include <stdexcept>

namespace hausr {

using nn::GradMap;
using nn::NamedTensors;
using nn::Tape;

RewardNet::RewardNet(RewardNetConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.conv) {
    net_ = nn::image_encoder("omega/enc", cfg_.goal_shape, cfg_.conv1,
                             cfg_.conv2, cfg_.d);
  } else {
    std::size_t flat = 1;
    for (std::size_t s : cfg_.goal_shape) flat *= s;
    net_.dense("omega/fc", flat, cfg_.d);
  }
}

void RewardNet::register_params(nn::ParamSet& ps, Rng& rng) const {
  net_.register_params(ps, rng);
}

Tensor RewardNet::omega(const NamedTensors& params, const Tensor& goal_image) const {
  return net_.forward(params, goal_image);
}

double RewardNet::batch_loss(const NamedTensors& params,
                             const std::vector<const TransitionRecord*>& batch,
                             const RenderCache& cache,
                             const PhiOfNext& phi_of_next) const {
  return run_batch(params, batch, cache, phi_of_next, nullptr);
}

double RewardNet::batch_gradients(const NamedTensors& params,
                                  const std::vector<const TransitionRecord*>& batch,
                                  const RenderCache& cache,
                                  const PhiOfNext& phi_of_next,
                                  GradMap& grads) const {
  return run_batch(params, batch, cache, phi_of_next, &grads);
}

double RewardNet::run_batch(const NamedTensors& params,
                            const std::vector<const TransitionRecord*>& batch,
                            const RenderCache& cache,
                            const PhiOfNext& phi_of_next, GradMap* grads) const {
  if (batch.empty()) throw std::invalid_argument("RewardNet: empty batch");
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  double loss = 0.0;
  for (const TransitionRecord* rec : batch) {
    const Tensor goal_image = cfg_.conv
                                  ? cache.replicated_obs(rec->goal)
                                  : nn::one_hot(static_cast<std::size_t>(pose_index(
                                                    cache.grid(), rec->goal)),
                                                cfg_.goal_shape[0]);
    const Tensor phi = phi_of_next(*rec);
    if (phi.size() != cfg_.d)
      throw std::invalid_argument("RewardNet: phi dimension mismatch");
    Tape tape;
    const Tensor w = net_.forward(params, goal_image, tape);
    const double err = phi.dot(w) - rec->reward;
    loss += err * err * inv_b;
    if (grads) {
      Tensor d_omega({cfg_.d});
      for (std::size_t i = 0; i < cfg_.d; ++i)
        d_omega[i] = 2.0 * err * phi[i] * inv_b;
      net_.backward(params, tape, d_omega, *grads);
    }
  }
  return loss;
}

double RewardNet::reward_train_step(nn::ParamSet& params, nn::OptimizerState& opt,
                                    const std::vector<const TransitionRecord*>& batch,
                                    const RenderCache& cache,
                                    const PhiOfNext& phi_of_next) const {
  GradMap grads;
  const nn::Snapshot snap = params.snapshot();
  const double loss = batch_gradients(snap.values, batch, cache, phi_of_next, grads);
  params.apply_update(grads, opt);
  return loss;
}

}  // namespace hausr
