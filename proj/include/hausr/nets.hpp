#pragma once

#include <cstddef>
#include <vector>

#include "hausr/layers.hpp"

namespace hausr::nn {

struct ConvSpec {
  std::size_t filters = 8;
  std::size_t kernel = 4;
  std::size_t stride = 2;
};

/// conv-relu-conv-relu-flatten-dense image encoder over (C, H, W) input.
/// Returns the stack; `flat_dim` receives the flattened conv output size.
Stack image_encoder(const std::string& prefix,
                    const std::vector<std::size_t>& input_shape,
                    const ConvSpec& c1, const ConvSpec& c2,
                    std::size_t out_dim, std::size_t* flat_dim = nullptr);

}  // namespace hausr::nn
