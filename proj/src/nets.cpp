#include "hausr/nets.hpp"

#include <stdexcept>

namespace hausr::nn {

Stack image_encoder(const std::string& prefix,
                    const std::vector<std::size_t>& input_shape,
                    const ConvSpec& c1, const ConvSpec& c2,
                    std::size_t out_dim, std::size_t* flat_dim) {
  if (input_shape.size() != 3)
    throw std::invalid_argument("image_encoder: expected (C,H,W) input shape");
  const std::size_t C = input_shape[0], H = input_shape[1], W = input_shape[2];
  if (H < c1.kernel || W < c1.kernel)
    throw std::invalid_argument("image_encoder: first kernel does not fit input");
  const std::size_t h1 = Conv2dLayer::out_extent(H, c1.kernel, c1.stride);
  const std::size_t w1 = Conv2dLayer::out_extent(W, c1.kernel, c1.stride);
  if (h1 < c2.kernel || w1 < c2.kernel)
    throw std::invalid_argument("image_encoder: second kernel does not fit");
  const std::size_t h2 = Conv2dLayer::out_extent(h1, c2.kernel, c2.stride);
  const std::size_t w2 = Conv2dLayer::out_extent(w1, c2.kernel, c2.stride);
  const std::size_t flat = c2.filters * h2 * w2;
  if (flat_dim) *flat_dim = flat;

  Stack s;
  s.conv2d(prefix + "/conv1", C, c1.filters, c1.kernel, c1.stride)
      .relu()
      .conv2d(prefix + "/conv2", c1.filters, c2.filters, c2.kernel, c2.stride)
      .relu()
      .flatten()
      .dense(prefix + "/fc", flat, out_dim);
  return s;
}

}  // namespace hausr::nn
