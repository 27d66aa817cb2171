#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "hausr/params.hpp"
#include "hausr/rng.hpp"
#include "hausr/tensor.hpp"

namespace hausr::nn {

enum class LayerKind { Dense, Conv2D, ReLU, Softmax, Flatten };

/// Per-layer activations saved by forward() for the matching backward().
struct TapeEntry {
  Tensor input;
  Tensor output;
};

/// Activation tape for one forward pass through a Stack. Single-use:
/// backward() consumes it.
struct Tape {
  std::vector<TapeEntry> entries;
  bool consumed = false;
};

/// One layer of a sequential stack. Layers are pure structure: parameter
/// values live in a ParamSet (or a snapshot of one) and are passed into
/// every call, so forward() is a pure function of (params, input).
class Layer {
 public:
  virtual ~Layer() = default;
  virtual LayerKind kind() const = 0;
  virtual std::string describe() const = 0;
  virtual Tensor forward(const NamedTensors& params, const Tensor& in,
                         TapeEntry& save) const = 0;
  /// Returns the input gradient. Parameter gradients accumulate (+=) into
  /// `grads`.
  virtual Tensor backward(const NamedTensors& params, const TapeEntry& saved,
                          const Tensor& gout, GradMap& grads) const = 0;
  /// Creates this layer's parameters (uniform +-1/sqrt(fan_in), zero biases).
  virtual void register_params(ParamSet&, Rng&) const {}
};

class DenseLayer final : public Layer {
 public:
  DenseLayer(std::string name, std::size_t in, std::size_t out)
      : name_(std::move(name)), in_(in), out_(out) {}
  LayerKind kind() const override { return LayerKind::Dense; }
  std::string describe() const override;
  Tensor forward(const NamedTensors&, const Tensor&, TapeEntry&) const override;
  Tensor backward(const NamedTensors&, const TapeEntry&, const Tensor&,
                  GradMap&) const override;
  void register_params(ParamSet&, Rng&) const override;

 private:
  std::string name_;
  std::size_t in_, out_;
};

/// Valid (unpadded) 2-D convolution over (C, H, W) input.
class Conv2dLayer final : public Layer {
 public:
  Conv2dLayer(std::string name, std::size_t in_c, std::size_t out_c,
              std::size_t kernel, std::size_t stride)
      : name_(std::move(name)), in_c_(in_c), out_c_(out_c), k_(kernel),
        stride_(stride) {}
  LayerKind kind() const override { return LayerKind::Conv2D; }
  std::string describe() const override;
  Tensor forward(const NamedTensors&, const Tensor&, TapeEntry&) const override;
  Tensor backward(const NamedTensors&, const TapeEntry&, const Tensor&,
                  GradMap&) const override;
  void register_params(ParamSet&, Rng&) const override;

  static std::size_t out_extent(std::size_t in, std::size_t k, std::size_t s) {
    return (in - k) / s + 1;
  }

 private:
  std::string name_;
  std::size_t in_c_, out_c_, k_, stride_;
};

class ReluLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::ReLU; }
  std::string describe() const override { return "relu"; }
  Tensor forward(const NamedTensors&, const Tensor&, TapeEntry&) const override;
  Tensor backward(const NamedTensors&, const TapeEntry&, const Tensor&,
                  GradMap&) const override;
};

class SoftmaxLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Softmax; }
  std::string describe() const override { return "softmax"; }
  Tensor forward(const NamedTensors&, const Tensor&, TapeEntry&) const override;
  Tensor backward(const NamedTensors&, const TapeEntry&, const Tensor&,
                  GradMap&) const override;
};

class FlattenLayer final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Flatten; }
  std::string describe() const override { return "flatten"; }
  Tensor forward(const NamedTensors&, const Tensor&, TapeEntry&) const override;
  Tensor backward(const NamedTensors&, const TapeEntry&, const Tensor&,
                  GradMap&) const override;
};

/// Sequential layer stack.
class Stack {
 public:
  Stack() = default;

  Stack& dense(std::string name, std::size_t in, std::size_t out);
  Stack& conv2d(std::string name, std::size_t in_c, std::size_t out_c,
                std::size_t kernel, std::size_t stride);
  Stack& relu();
  Stack& softmax();
  Stack& flatten();

  std::size_t depth() const { return layers_.size(); }
  const Layer& layer(std::size_t i) const { return *layers_[i]; }

  Tensor forward(const NamedTensors& params, const Tensor& in, Tape& tape) const;
  /// Convenience forward that discards the tape.
  Tensor forward(const NamedTensors& params, const Tensor& in) const;
  /// Consumes the tape; reuse throws.
  Tensor backward(const NamedTensors& params, Tape& tape, const Tensor& gout,
                  GradMap& grads) const;
  void register_params(ParamSet& ps, Rng& rng) const;

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
};

/// Numerically stable softmax (max-subtracted). Output sums to 1.
Tensor softmax(const Tensor& logits);

/// Shannon entropy -sum p log p with 0 log 0 = 0. Natural log.
Scalar entropy(const Tensor& probabilities);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::map<std::string, double> per_param;
  bool passed(double tolerance) const { return max_rel_error < tolerance; }
};

/// Central finite differences against analytic gradients over every
/// parameter of `params`. `loss` must be a pure function of the values it is
/// handed. Relative error uses a unit floor: |a-n| / max(1, |a|, |n|).
GradCheckReport grad_check(const ParamSet& params,
                           const std::function<double(const NamedTensors&)>& loss,
                           const GradMap& analytic, double fd_epsilon = 1e-5);

}  // namespace hausr::nn
