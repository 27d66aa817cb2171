#pragma once

#include <vector>

#include "hausr/env.hpp"
#include "hausr/nets.hpp"
#include "hausr/rollout.hpp"

namespace hausr {

using nn::GradMap;
using nn::NamedTensors;
using nn::OptimizerState;
using nn::ParamSet;
using nn::Snapshot;
using nn::Stack;

struct RepNetConfig {
  std::vector<std::size_t> obs_shape;  // (K, H, W)
  nn::ConvSpec conv1{8, 4, 2};
  nn::ConvSpec conv2{16, 3, 2};
  std::size_t d = 32;                  // phi dimension
  std::size_t decoder_hidden = 128;
  std::size_t forward_hidden = 64;
  std::size_t inverse_hidden = 64;
  double ae_weight = 1.0;
  double forward_weight = 1.0;
  double inverse_weight = 1.0;
};

/// State representation network: shared encoder producing phi, plus
/// autoencoder, forward-dynamics and inverse-dynamics heads used only
/// during pretraining. Parameters live under the "repnet/" prefix.
class RepNet {
 public:
  explicit RepNet(RepNetConfig cfg);

  const RepNetConfig& config() const { return cfg_; }
  void register_params(ParamSet& ps, Rng& rng) const;

  Tensor encode(const NamedTensors& params, const Tensor& obs) const;
  Tensor decode(const NamedTensors& params, const Tensor& phi) const;
  /// Prediction of phi(s_{t+1}) from phi(s_t) and a one-hot action.
  Tensor forward_dynamics(const NamedTensors& params, const Tensor& phi,
                          int action) const;
  /// Action logits from (phi_t, phi_t1).
  Tensor inverse_dynamics(const NamedTensors& params, const Tensor& phi_t,
                          const Tensor& phi_t1) const;

  struct LossReport {
    double ae = 0.0;       // mean squared reconstruction error
    double fwd = 0.0;      // mean squared phi-prediction error
    double inv = 0.0;      // cross-entropy of the taken action
    double combined = 0.0; // weighted sum
  };

  /// Combined pretraining loss over a batch (batch mean per component).
  /// The forward-dynamics target phi(s_{t+1}) is a stop-gradient: when
  /// `fwd_target_params` is given it is computed from those parameters
  /// instead, which is what a finite-difference probe of the as-optimized
  /// loss needs (perturbations must not move the target).
  LossReport batch_loss(const NamedTensors& params,
                        const std::vector<const TransitionRecord*>& batch,
                        const RenderCache& cache,
                        const NamedTensors* fwd_target_params = nullptr) const;

  /// Same, accumulating d(combined)/d(params) into `grads`. The
  /// forward-dynamics target phi(s_{t+1}) is a constant; the inverse head
  /// backpropagates into the encoder through both of its inputs.
  LossReport batch_gradients(const NamedTensors& params,
                             const std::vector<const TransitionRecord*>& batch,
                             const RenderCache& cache, GradMap& grads) const;

  /// One optimizer step on a batch sampled by the caller.
  LossReport pretrain_step(ParamSet& params, OptimizerState& opt,
                           const std::vector<const TransitionRecord*>& batch,
                           const RenderCache& cache) const;

 private:
  LossReport run_batch(const NamedTensors& params,
                       const std::vector<const TransitionRecord*>& batch,
                       const RenderCache& cache, GradMap* grads,
                       const NamedTensors* fwd_target_params) const;

  RepNetConfig cfg_;
  Stack encoder_, decoder_, forward_head_, inverse_head_;
};

}  // namespace hausr
