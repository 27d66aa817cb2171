#include "hausr/codec.hpp"

#include <stdexcept>

namespace hausr {

InputCodec::InputCodec(Mode mode, const RenderCache* cache)
    : mode_(mode), cache_(cache) {
  if (!cache_) throw std::invalid_argument("InputCodec: null cache");
  n_states_ = enumerate_states(cache_->grid()).size();
}

std::vector<std::size_t> InputCodec::input_shape() const {
  if (mode_ == Mode::Tabular) return {n_states_};
  const GridSpec& g = cache_->grid();
  return {static_cast<std::size_t>(g.frame_stack),
          static_cast<std::size_t>(g.render_h),
          static_cast<std::size_t>(g.render_w)};
}

Tensor InputCodec::obs_from_stack(const std::vector<Pose>& stack) const {
  if (mode_ == Mode::Tabular) {
    const int idx = pose_index(cache_->grid(), stack.back());
    return nn::one_hot(static_cast<std::size_t>(idx), n_states_);
  }
  return cache_->stacked_obs(stack);
}

Tensor InputCodec::goal_tensor(const Goal& goal) const {
  if (mode_ == Mode::Tabular) {
    const int idx = pose_index(cache_->grid(), goal.state);
    return nn::one_hot(static_cast<std::size_t>(idx), n_states_);
  }
  return goal.image;
}

PhiProvider::PhiProvider(const InputCodec* codec) : codec_(codec) {
  if (!codec) throw std::invalid_argument("PhiProvider: null codec");
  if (codec->mode() != InputCodec::Mode::Tabular)
    throw std::invalid_argument("PhiProvider: pixel mode needs an encoder");
  dim_ = codec->n_states();
}

PhiProvider::PhiProvider(const InputCodec* codec, const RepNet* repnet,
                         nn::NamedTensors repnet_params)
    : codec_(codec), repnet_(repnet), params_(std::move(repnet_params)) {
  if (!codec || !repnet) throw std::invalid_argument("PhiProvider: null input");
  dim_ = repnet->config().d;
}

Tensor PhiProvider::phi_of_stack(const std::vector<Pose>& stack) const {
  const Tensor obs = codec_->obs_from_stack(stack);
  if (repnet_) return repnet_->encode(params_, obs);
  return obs;  // tabular: the one-hot code is phi itself
}

}  // namespace hausr
