#pragma once

#include <vector>

#include "hausr/env.hpp"
#include "hausr/repnet.hpp"

namespace hausr {

/// Bridges environment poses and network input tensors. Pixel mode feeds the
/// stacked frames; tabular mode (the verification bridge) feeds a one-hot
/// code of the current pose and ignores pixels entirely.
class InputCodec {
 public:
  enum class Mode { Pixels, Tabular };

  InputCodec(Mode mode, const RenderCache* cache);

  Mode mode() const { return mode_; }
  std::size_t n_states() const { return n_states_; }
  std::vector<std::size_t> input_shape() const;

  Tensor obs_from_stack(const std::vector<Pose>& stack) const;
  Tensor goal_tensor(const Goal& goal) const;

 private:
  Mode mode_;
  const RenderCache* cache_;
  std::size_t n_states_ = 0;
};

/// phi(s) source for psi targets and the successor advantage. Pixel mode
/// runs a (normally frozen) state-encoder snapshot; tabular mode emits the
/// pose's one-hot code.
class PhiProvider {
 public:
  /// Tabular: one-hot over enumerated states.
  explicit PhiProvider(const InputCodec* codec);
  /// Pixel: encoder snapshot.
  PhiProvider(const InputCodec* codec, const RepNet* repnet,
              nn::NamedTensors repnet_params);

  std::size_t dim() const { return dim_; }
  Tensor phi_of_stack(const std::vector<Pose>& stack) const;
  void refresh(nn::NamedTensors repnet_params) { params_ = std::move(repnet_params); }

 private:
  const InputCodec* codec_;
  const RepNet* repnet_ = nullptr;
  nn::NamedTensors params_;
  std::size_t dim_ = 0;
};

}  // namespace hausr
