#pragma once

#include <functional>
#include <vector>

#include "hausr/env.hpp"
#include "hausr/nets.hpp"
#include "hausr/rollout.hpp"

namespace hausr {

struct RewardNetConfig {
  std::vector<std::size_t> goal_shape;  // (K, H, W), or flat (n) when !conv
  bool conv = true;
  nn::ConvSpec conv1{8, 4, 2};
  nn::ConvSpec conv2{16, 3, 2};
  std::size_t d = 32;  // omega dimension, same as phi
};

/// Maps a goal image to the reward weight vector omega(g); the predicted
/// pseudo-reward for a state is the plain dot product phi' omega. The
/// encoder is its own small conv net, not shared with the state encoder.
/// Parameters live under the "omega/" prefix.
class RewardNet {
 public:
  explicit RewardNet(RewardNetConfig cfg);

  const RewardNetConfig& config() const { return cfg_; }
  void register_params(nn::ParamSet& ps, Rng& rng) const;

  Tensor omega(const nn::NamedTensors& params, const Tensor& goal_image) const;

  static double predict_reward(const Tensor& phi, const Tensor& omega) {
    return phi.dot(omega);
  }

  /// phi(s_{t+1}) for a transition, treated as a constant input.
  using PhiOfNext = std::function<Tensor(const TransitionRecord&)>;

  /// Squared-error loss (r_t - phi(s_{t+1})' omega(g))^2, batch mean.
  double batch_loss(const nn::NamedTensors& params,
                    const std::vector<const TransitionRecord*>& batch,
                    const RenderCache& cache, const PhiOfNext& phi_of_next) const;

  /// Same, accumulating gradients w.r.t. the omega net only.
  double batch_gradients(const nn::NamedTensors& params,
                         const std::vector<const TransitionRecord*>& batch,
                         const RenderCache& cache, const PhiOfNext& phi_of_next,
                         nn::GradMap& grads) const;

  double reward_train_step(nn::ParamSet& params, nn::OptimizerState& opt,
                           const std::vector<const TransitionRecord*>& batch,
                           const RenderCache& cache,
                           const PhiOfNext& phi_of_next) const;

 private:
  double run_batch(const nn::NamedTensors& params,
                   const std::vector<const TransitionRecord*>& batch,
                   const RenderCache& cache, const PhiOfNext& phi_of_next,
                   nn::GradMap* grads) const;

  RewardNetConfig cfg_;
  nn::Stack net_;
};

}  // namespace hausr
