#pragma once

#include <optional>
#include <vector>

#include "hausr/nets.hpp"
#include "hausr/tensor.hpp"

namespace hausr {

using nn::NamedTensors;
using nn::Tensor;

struct AgentConfig {
  std::vector<std::size_t> input_shape;  // obs and goal tensor shape
  bool conv = true;                      // conv frontend; dense otherwise
  nn::ConvSpec conv1{8, 4, 2};
  nn::ConvSpec conv2{16, 3, 2};
  std::size_t encoder_out = 64;          // siamese embedding width
  std::vector<std::size_t> trunk{128, 64};
  std::size_t psi_dim = 32;              // d
  std::size_t actions = 4;
};

struct AgentOutput {
  Tensor pi;   // probabilities over actions
  double v = 0.0;
  Tensor psi;  // successor feature vector, dimension d
};

/// Actor-critic network with a successor-feature head: a siamese encoder
/// shared between the observation and the goal image, a dense trunk over
/// their concatenation, and pi / V / psi heads. Parameters live under the
/// "agent/" prefix. All methods are pure functions of a parameter snapshot.
class AgentNet {
 public:
  explicit AgentNet(AgentConfig cfg);

  const AgentConfig& config() const { return cfg_; }
  void register_params(nn::ParamSet& ps, Rng& rng) const;

  /// Goal embedding plus its tape, reusable across every step of a rollout
  /// (the goal input is constant within an episode).
  struct GoalContext {
    Tensor embed;
    nn::Tape tape;
  };
  GoalContext encode_goal(const NamedTensors& params, const Tensor& goal) const;

  /// Forward pass for one step, keeping tapes for a later backward.
  struct StepForward {
    Tensor logits;
    AgentOutput out;
    nn::Tape enc_tape, trunk_tape, pi_tape, v_tape, psi_tape;
  };
  StepForward forward_step(const NamedTensors& params, const Tensor& obs,
                           const GoalContext& goal) const;

  /// Tape-free evaluation (bootstrap values, greedy evaluation).
  AgentOutput evaluate(const NamedTensors& params, const Tensor& obs,
                       const Tensor& goal_embed) const;

  AgentOutput act(const NamedTensors& params, const Tensor& obs,
                  const Tensor& goal) const;

  /// Backward for one step given gradients at the head outputs. d_psi may be
  /// null, which skips the psi head entirely (the lambda = 0 degenerate
  /// case). Consumes the step's tapes and returns the gradient w.r.t. the
  /// goal embedding, to be summed across steps.
  Tensor backward_step(const NamedTensors& params, StepForward& fw,
                       const Tensor& d_logits, double d_v, const Tensor* d_psi,
                       nn::GradMap& grads) const;

  /// One backward through the goal branch with the summed embedding grad.
  void backward_goal(const NamedTensors& params, GoalContext& goal,
                     const Tensor& d_embed, nn::GradMap& grads) const;

 private:
  AgentConfig cfg_;
  nn::Stack encoder_, trunk_, pi_head_, v_head_, psi_head_;
};

// ---------------------------------------------------------------------------
// Rollout losses (Async-USR update rule)

/// n-step discounted returns, computed backward from the bootstrap:
/// R_t = r_t + gamma * R_{t+1}, R_T = bootstrap. The bootstrap must be 0
/// for rollouts ending in a terminal-by-goal transition.
std::vector<double> n_step_returns(const std::vector<double>& rewards,
                                   double bootstrap_value, double gamma);

/// A_t = R_t - V_t (V treated as a constant in the policy gradient).
std::vector<double> advantage_v(const std::vector<double>& returns,
                                const std::vector<double>& values);

/// Successor-feature advantage
/// [phi(s_t) + gamma_t psi(s_{t+1}) - psi(s_t)]' omega, with gamma_t = 0 on
/// terminal-by-goal steps. All inputs are constants for the policy gradient.
double advantage_psi(const Tensor& phi_t, const Tensor& psi_t,
                     const Tensor& psi_t1, const Tensor& omega, double gamma_t);

/// Mean squared Bellman residual of psi over a rollout. psi_next holds
/// psi(s_{t+1}) per step (the bootstrap for the last one); on a rollout
/// ending terminal-by-goal the final target is phi(s_t) exactly.
double loss_psi(const std::vector<Tensor>& phi, const std::vector<Tensor>& psi,
                const std::vector<Tensor>& psi_next, bool terminal_goal,
                double gamma);

/// Mean over steps of (R_t - V_t)^2.
double loss_v(const std::vector<double>& returns,
              const std::vector<double>& values);

struct LossWeights {
  double value = 0.5;  // coefficient on L_V
  double psi = 0.1;    // coefficient on L_psi (active only when lambda != 0)
};

/// total = L_pi + value_w * L_V + psi_w * L_psi - beta * mean entropy, with
/// the psi term dropped entirely at lambda = 0 so the loss degenerates to
/// the plain actor-critic objective.
double total_loss(double l_pi, double l_v, double l_psi, double mean_entropy,
                  double lambda, double beta, const LossWeights& w);

/// Everything the worker needs from one rollout to form an update.
struct RolloutData {
  Tensor goal;
  std::vector<Tensor> obs;      // s_0 .. s_{T-1}
  std::vector<int> actions;
  std::vector<double> rewards;
  Tensor final_next_obs;        // s_T, ignored when terminal_goal
  bool terminal_goal = false;   // last transition entered the goal
};

struct RolloutLosses {
  double l_pi = 0.0;
  double l_v = 0.0;
  double l_psi = 0.0;
  double entropy = 0.0;  // mean policy entropy over steps
  double total = 0.0;
  int steps = 0;
};

/// Forwards the rollout, assembles the hybrid-advantage policy loss, value
/// loss and (for lambda != 0) the psi Bellman loss, and accumulates
/// d(total)/d(params) into grads. phi and omega may be null when lambda = 0.
/// With one_step_value, L_V regresses V_t on r_t + gamma_t V(s_{t+1}) instead
/// of the n-step return.
RolloutLosses rollout_gradients(const AgentNet& net, const NamedTensors& params,
                                const RolloutData& ro,
                                const std::vector<Tensor>* phi,
                                const Tensor* omega_g, double lambda,
                                double beta, double gamma,
                                const LossWeights& weights, bool one_step_value,
                                nn::GradMap& grads);

/// Tape-consuming variant used by workers that already ran the forwards
/// while collecting the rollout. `fw` holds one StepForward per step;
/// `bootstrap` is the evaluation at s_T (ignored when terminal_goal).
RolloutLosses backprop_rollout(const AgentNet& net, const NamedTensors& params,
                               AgentNet::GoalContext& goal,
                               std::vector<AgentNet::StepForward>& fw,
                               const RolloutData& ro,
                               const std::optional<AgentOutput>& bootstrap,
                               const std::vector<Tensor>* phi,
                               const Tensor* omega_g, double lambda, double beta,
                               double gamma, const LossWeights& weights,
                               bool one_step_value, nn::GradMap& grads);

}  // namespace hausr
