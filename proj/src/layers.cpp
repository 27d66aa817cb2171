#include "hausr/layers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hausr::nn {

namespace {

Tensor uniform_init(std::vector<std::size_t> shape, std::size_t fan_in, Rng& rng) {
  Tensor t(std::move(shape));
  // Uniform with a sqrt(6) gain (He-style): keeps activation variance steady
  // through ReLU stacks, so feature magnitudes start at their working scale
  // instead of growing into it during the first few thousand updates.
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

const Tensor& param(const NamedTensors& params, const std::string& name,
                    const std::string& who) {
  auto it = params.find(name);
  if (it == params.end())
    throw std::invalid_argument(who + ": missing parameter " + name);
  return it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// Dense

std::string DenseLayer::describe() const {
  return "dense \"" + name_ + "\" (" + std::to_string(out_) + "x" +
         std::to_string(in_) + ")";
}

Tensor DenseLayer::forward(const NamedTensors& params, const Tensor& in,
                           TapeEntry& save) const {
  if (in.size() != in_)
    throw std::invalid_argument(describe() + ": input size " +
                                std::to_string(in.size()) + ", expected " +
                                std::to_string(in_));
  const Tensor& w = param(params, name_ + "/w", describe());
  const Tensor& b = param(params, name_ + "/b", describe());
  Tensor out({out_});
  const Scalar* x = in.data();
  for (std::size_t o = 0; o < out_; ++o) {
    const Scalar* wrow = w.data() + o * in_;
    Scalar acc = b[o];
    for (std::size_t i = 0; i < in_; ++i) acc += wrow[i] * x[i];
    out[o] = acc;
  }
  save.input = in;
  return out;
}

Tensor DenseLayer::backward(const NamedTensors& params, const TapeEntry& saved,
                            const Tensor& gout, GradMap& grads) const {
  const Tensor& w = param(params, name_ + "/w", describe());
  const Tensor& x = saved.input;
  Tensor& gw = grads.accum(name_ + "/w", {out_, in_});
  Tensor& gb = grads.accum(name_ + "/b", {out_});
  Tensor gin({in_});
  for (std::size_t o = 0; o < out_; ++o) {
    const Scalar g = gout[o];
    gb[o] += g;
    Scalar* gwrow = gw.data() + o * in_;
    const Scalar* wrow = w.data() + o * in_;
    for (std::size_t i = 0; i < in_; ++i) {
      gwrow[i] += g * x[i];
      gin[i] += g * wrow[i];
    }
  }
  return gin;
}

void DenseLayer::register_params(ParamSet& ps, Rng& rng) const {
  ps.create(name_ + "/w", uniform_init({out_, in_}, in_, rng));
  ps.create(name_ + "/b", Tensor({out_}));
}

// ---------------------------------------------------------------------------
// Conv2D

std::string Conv2dLayer::describe() const {
  return "conv2d \"" + name_ + "\" (" + std::to_string(out_c_) + "x" +
         std::to_string(in_c_) + "x" + std::to_string(k_) + "x" +
         std::to_string(k_) + " s" + std::to_string(stride_) + ")";
}

Tensor Conv2dLayer::forward(const NamedTensors& params, const Tensor& in,
                            TapeEntry& save) const {
  if (in.rank() != 3 || in.dim(0) != in_c_)
    throw std::invalid_argument(describe() + ": input shape " +
                                in.shape_string() + ", expected (" +
                                std::to_string(in_c_) + ",H,W)");
  const std::size_t ih = in.dim(1), iw = in.dim(2);
  if (ih < k_ || iw < k_)
    throw std::invalid_argument(describe() + ": kernel does not fit input " +
                                in.shape_string());
  const std::size_t oh = out_extent(ih, k_, stride_);
  const std::size_t ow = out_extent(iw, k_, stride_);
  const Tensor& w = param(params, name_ + "/w", describe());
  const Tensor& b = param(params, name_ + "/b", describe());

  Tensor out({out_c_, oh, ow});
  const Scalar* xd = in.data();
  for (std::size_t oc = 0; oc < out_c_; ++oc) {
    Scalar* od = out.data() + oc * oh * ow;
    const Scalar* wc = w.data() + oc * in_c_ * k_ * k_;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        Scalar acc = b[oc];
        for (std::size_t ic = 0; ic < in_c_; ++ic) {
          const Scalar* xc = xd + ic * ih * iw;
          const Scalar* wk = wc + ic * k_ * k_;
          for (std::size_t ky = 0; ky < k_; ++ky) {
            const Scalar* xrow = xc + (oy * stride_ + ky) * iw + ox * stride_;
            const Scalar* wrow = wk + ky * k_;
            for (std::size_t kx = 0; kx < k_; ++kx) acc += wrow[kx] * xrow[kx];
          }
        }
        od[oy * ow + ox] = acc;
      }
    }
  }
  save.input = in;
  return out;
}

Tensor Conv2dLayer::backward(const NamedTensors& params, const TapeEntry& saved,
                             const Tensor& gout, GradMap& grads) const {
  const Tensor& in = saved.input;
  const std::size_t ih = in.dim(1), iw = in.dim(2);
  const std::size_t oh = gout.dim(1), ow = gout.dim(2);
  const Tensor& w = param(params, name_ + "/w", describe());
  Tensor& gw = grads.accum(name_ + "/w", {out_c_, in_c_, k_, k_});
  Tensor& gb = grads.accum(name_ + "/b", {out_c_});
  Tensor gin({in_c_, ih, iw});

  const Scalar* xd = in.data();
  Scalar* gxd = gin.data();
  for (std::size_t oc = 0; oc < out_c_; ++oc) {
    const Scalar* gd = gout.data() + oc * oh * ow;
    const Scalar* wc = w.data() + oc * in_c_ * k_ * k_;
    Scalar* gwc = gw.data() + oc * in_c_ * k_ * k_;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const Scalar g = gd[oy * ow + ox];
        if (g == 0.0) continue;
        gb[oc] += g;
        for (std::size_t ic = 0; ic < in_c_; ++ic) {
          const Scalar* xc = xd + ic * ih * iw;
          Scalar* gxc = gxd + ic * ih * iw;
          const Scalar* wk = wc + ic * k_ * k_;
          Scalar* gwk = gwc + ic * k_ * k_;
          for (std::size_t ky = 0; ky < k_; ++ky) {
            const std::size_t y = oy * stride_ + ky;
            const Scalar* xrow = xc + y * iw + ox * stride_;
            Scalar* gxrow = gxc + y * iw + ox * stride_;
            const Scalar* wrow = wk + ky * k_;
            Scalar* gwrow = gwk + ky * k_;
            for (std::size_t kx = 0; kx < k_; ++kx) {
              gwrow[kx] += g * xrow[kx];
              gxrow[kx] += g * wrow[kx];
            }
          }
        }
      }
    }
  }
  return gin;
}

void Conv2dLayer::register_params(ParamSet& ps, Rng& rng) const {
  const std::size_t fan_in = in_c_ * k_ * k_;
  ps.create(name_ + "/w", uniform_init({out_c_, in_c_, k_, k_}, fan_in, rng));
  ps.create(name_ + "/b", Tensor({out_c_}));
}

// ---------------------------------------------------------------------------
// Stateless layers

Tensor ReluLayer::forward(const NamedTensors&, const Tensor& in,
                          TapeEntry& save) const {
  Tensor out = in;
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] = 0.0;
  save.input = in;
  return out;
}

Tensor ReluLayer::backward(const NamedTensors&, const TapeEntry& saved,
                           const Tensor& gout, GradMap&) const {
  Tensor gin = gout;
  for (std::size_t i = 0; i < gin.size(); ++i)
    if (saved.input[i] <= 0.0) gin[i] = 0.0;
  return gin;
}

Tensor SoftmaxLayer::forward(const NamedTensors&, const Tensor& in,
                             TapeEntry& save) const {
  Tensor out = softmax(in);
  save.output = out;
  return out;
}

Tensor SoftmaxLayer::backward(const NamedTensors&, const TapeEntry& saved,
                              const Tensor& gout, GradMap&) const {
  const Tensor& p = saved.output;
  Scalar dot = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) dot += gout[i] * p[i];
  Tensor gin({p.size()});
  for (std::size_t i = 0; i < p.size(); ++i) gin[i] = p[i] * (gout[i] - dot);
  return gin;
}

Tensor FlattenLayer::forward(const NamedTensors&, const Tensor& in,
                             TapeEntry& save) const {
  save.input = in;  // keeps the original shape for backward
  return in.reshaped({in.size()});
}

Tensor FlattenLayer::backward(const NamedTensors&, const TapeEntry& saved,
                              const Tensor& gout, GradMap&) const {
  return gout.reshaped(saved.input.shape());
}

// ---------------------------------------------------------------------------
// Stack

Stack& Stack::dense(std::string name, std::size_t in, std::size_t out) {
  layers_.push_back(std::make_unique<DenseLayer>(std::move(name), in, out));
  return *this;
}
Stack& Stack::conv2d(std::string name, std::size_t in_c, std::size_t out_c,
                     std::size_t kernel, std::size_t stride) {
  layers_.push_back(
      std::make_unique<Conv2dLayer>(std::move(name), in_c, out_c, kernel, stride));
  return *this;
}
Stack& Stack::relu() {
  layers_.push_back(std::make_unique<ReluLayer>());
  return *this;
}
Stack& Stack::softmax() {
  layers_.push_back(std::make_unique<SoftmaxLayer>());
  return *this;
}
Stack& Stack::flatten() {
  layers_.push_back(std::make_unique<FlattenLayer>());
  return *this;
}

Tensor Stack::forward(const NamedTensors& params, const Tensor& in,
                      Tape& tape) const {
  tape.entries.clear();
  tape.entries.resize(layers_.size());
  tape.consumed = false;
  Tensor x = in;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    x = layers_[i]->forward(params, x, tape.entries[i]);
  return x;
}

Tensor Stack::forward(const NamedTensors& params, const Tensor& in) const {
  Tape tape;
  return forward(params, in, tape);
}

Tensor Stack::backward(const NamedTensors& params, Tape& tape,
                       const Tensor& gout, GradMap& grads) const {
  if (tape.consumed)
    throw std::logic_error("Stack::backward: tape already consumed");
  if (tape.entries.size() != layers_.size())
    throw std::logic_error("Stack::backward: tape does not match stack");
  tape.consumed = true;
  Tensor g = gout;
  for (std::size_t i = layers_.size(); i-- > 0;)
    g = layers_[i]->backward(params, tape.entries[i], g, grads);
  return g;
}

void Stack::register_params(ParamSet& ps, Rng& rng) const {
  for (const auto& l : layers_) l->register_params(ps, rng);
}

// ---------------------------------------------------------------------------
// Free functions

Tensor softmax(const Tensor& logits) {
  Tensor out({logits.size()});
  Scalar mx = logits[0];
  for (std::size_t i = 1; i < logits.size(); ++i) mx = std::max(mx, logits[i]);
  Scalar sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    sum += out[i];
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= sum;
  return out;
}

Scalar entropy(const Tensor& p) {
  Scalar h = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0.0) h -= p[i] * std::log(p[i]);
  return h;
}

GradCheckReport grad_check(const ParamSet& params,
                           const std::function<double(const NamedTensors&)>& loss,
                           const GradMap& analytic, double fd_epsilon) {
  GradCheckReport report;
  NamedTensors values = params.copy_values();
  for (auto& [name, tensor] : values) {
    double worst = 0.0;
    for (std::size_t i = 0; i < tensor.size(); ++i) {
      const Scalar saved = tensor[i];
      tensor[i] = saved + fd_epsilon;
      const double up = loss(values);
      tensor[i] = saved - fd_epsilon;
      const double down = loss(values);
      tensor[i] = saved;
      const double numeric = (up - down) / (2.0 * fd_epsilon);
      auto it = analytic.entries().find(name);
      const double exact = it == analytic.entries().end() ? 0.0 : it->second[i];
      const double denom = std::max({1.0, std::abs(exact), std::abs(numeric)});
      const double rel = std::abs(exact - numeric) / denom;
      worst = std::max(worst, rel);
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name + "[" + std::to_string(i) + "]";
      }
    }
    report.per_param[name] = worst;
  }
  return report;
}

}  // namespace hausr::nn
