#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "hausr/checkpoint.hpp"
#include "hausr/layers.hpp"
#include "hausr/nets.hpp"

using namespace hausr;
using namespace hausr::nn;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

/// FD check of a stack under 0.5*|out|^2, whose output gradient is the
/// output itself.
double stack_fd_error(const Stack& stack, const Tensor& input, ParamSet& params) {
  auto loss = [&](const NamedTensors& values) {
    const Tensor out = stack.forward(values, input);
    return 0.5 * out.squared_norm();
  };
  GradMap analytic;
  Tape tape;
  const NamedTensors values = params.copy_values();
  const Tensor out = stack.forward(values, input, tape);
  stack.backward(values, tape, out, analytic);
  return grad_check(params, loss, analytic).max_rel_error;
}

}  // namespace

TEST_CASE("softmax basics") {
  const Tensor uniform = softmax(Tensor::from({4}, {0, 0, 0, 0}));
  for (std::size_t i = 0; i < 4; ++i) CHECK(uniform[i] == doctest::Approx(0.25));

  const Tensor extreme = softmax(Tensor::from({2}, {1000.0, 0.0}));
  CHECK(extreme.all_finite());
  CHECK(extreme[0] == doctest::Approx(1.0));
  CHECK(extreme[1] == doctest::Approx(0.0));

  // High-precision recomputation in long double.
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor logits = random_tensor({6}, rng, -30.0, 30.0);
    const Tensor p = softmax(logits);
    long double sum = 0.0L;
    for (std::size_t i = 0; i < 6; ++i) sum += expl((long double)logits[i]);
    double total = 0.0;
    for (std::size_t i = 0; i < 6; ++i) {
      const long double exact = expl((long double)logits[i]) / sum;
      CHECK(std::abs(p[i] - (double)exact) < 1e-12);
      total += p[i];
    }
    CHECK(std::abs(total - 1.0) < 1e-12);
  }
}

TEST_CASE("entropy") {
  CHECK(entropy(Tensor::from({4}, {0.25, 0.25, 0.25, 0.25})) ==
        doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(entropy(Tensor::from({3}, {0.0, 1.0, 0.0})) == 0.0);
  // Direct scalar evaluation: 0.5*ln2 + 2*0.25*ln4 = 1.5*ln2.
  CHECK(entropy(Tensor::from({3}, {0.5, 0.25, 0.25})) ==
        doctest::Approx(1.0397207708399179).epsilon(1e-14));
}

TEST_CASE("relu forward") {
  Stack s;
  s.relu();
  const Tensor out = s.forward({}, Tensor::from({3}, {-1.0, 0.0, 2.0}));
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == 2.0);
}

TEST_CASE("dense identity weights pass input through") {
  Stack s;
  s.dense("id", 3, 3);
  ParamSet ps;
  ps.create("id/w", Tensor::from({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1}));
  ps.create("id/b", Tensor({3}));
  const Tensor x = Tensor::from({3}, {0.3, -2.5, 11.0});
  const Tensor out = s.forward(ps.copy_values(), x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i] == x[i]);
}

TEST_CASE("two-layer forward matches an independent matrix recomputation") {
  Stack s;
  s.dense("l1", 3, 4).relu().dense("l2", 4, 2);
  ParamSet ps;
  Rng init(0);
  s.register_params(ps, init);
  Rng rng(1);
  const Tensor x = random_tensor({3}, rng);
  const NamedTensors v = ps.copy_values();
  const Tensor out = s.forward(v, x);

  // Scripted oracle: raw loops over the same parameter values.
  const Tensor &w1 = v.at("l1/w"), &b1 = v.at("l1/b");
  const Tensor &w2 = v.at("l2/w"), &b2 = v.at("l2/b");
  double h[4];
  for (int o = 0; o < 4; ++o) {
    double acc = b1[o];
    for (int i = 0; i < 3; ++i) acc += w1[o * 3 + i] * x[i];
    h[o] = acc > 0.0 ? acc : 0.0;
  }
  for (int o = 0; o < 2; ++o) {
    double acc = b2[o];
    for (int i = 0; i < 4; ++i) acc += w2[o * 4 + i] * h[i];
    CHECK(out[o] == doctest::Approx(acc).epsilon(1e-15));
  }
}

TEST_CASE("dense backward: weight grad is outer product, zero grad is inert") {
  Stack s;
  s.dense("d", 2, 2);
  ParamSet ps;
  Rng init(3);
  s.register_params(ps, init);
  const NamedTensors v = ps.copy_values();
  const Tensor x = Tensor::from({2}, {0.5, -1.5});

  Tape tape;
  s.forward(v, x, tape);
  GradMap grads;
  const Tensor gout = Tensor::from({2}, {2.0, -3.0});
  s.backward(v, tape, gout, grads);
  const Tensor& gw = grads.entries().at("d/w");
  for (int o = 0; o < 2; ++o)
    for (int i = 0; i < 2; ++i)
      CHECK(gw[o * 2 + i] == doctest::Approx(gout[o] * x[i]).epsilon(1e-15));

  // Zero output grad leaves accumulated grads unchanged.
  Tape tape2;
  s.forward(v, x, tape2);
  GradMap grads2;
  s.backward(v, tape2, Tensor({2}), grads2);
  for (const auto& [name, g] : grads2.entries())
    for (std::size_t i = 0; i < g.size(); ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("tape reuse is an error") {
  Stack s;
  s.dense("d", 2, 2);
  ParamSet ps;
  Rng init(4);
  s.register_params(ps, init);
  const NamedTensors v = ps.copy_values();
  Tape tape;
  s.forward(v, Tensor::from({2}, {1.0, 2.0}), tape);
  GradMap grads;
  s.backward(v, tape, Tensor::from({2}, {1.0, 1.0}), grads);
  CHECK_THROWS_AS(s.backward(v, tape, Tensor::from({2}, {1.0, 1.0}), grads),
                  std::logic_error);
}

TEST_CASE("shape mismatch errors name the layer") {
  Stack s;
  s.dense("trunk/fc1", 8, 4);
  ParamSet ps;
  Rng init(5);
  s.register_params(ps, init);
  try {
    s.forward(ps.copy_values(), Tensor({3}));
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("trunk/fc1") != std::string::npos);
  }
}

TEST_CASE("finite differences pass for every layer kind") {
  Rng rng(11);
  for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
    // Dense + ReLU + Dense + Softmax on a small vector.
    {
      Stack s;
      s.dense("a", 5, 7).relu().dense("b", 7, 4).softmax();
      ParamSet ps;
      Rng init(seed);
      s.register_params(ps, init);
      CHECK(stack_fd_error(s, random_tensor({5}, rng), ps) < 1e-4);
    }
    // Conv2D + ReLU + Conv2D + Flatten + Dense on an 8x8 two-channel image.
    {
      Stack s;
      s.conv2d("c1", 2, 3, 3, 2).relu().conv2d("c2", 3, 4, 2, 1).flatten();
      std::size_t flat = 4 * 2 * 2;
      s.dense("head", flat, 3);
      ParamSet ps;
      Rng init(seed + 100);
      s.register_params(ps, init);
      CHECK(stack_fd_error(s, random_tensor({2, 8, 8}, rng, 0.0, 1.0), ps) < 1e-4);
    }
  }
}

TEST_CASE("image encoder builder wires shapes correctly") {
  std::size_t flat = 0;
  Stack enc = image_encoder("enc", {2, 8, 8}, {4, 3, 2}, {4, 2, 1}, 6, &flat);
  CHECK(flat == 4 * 2 * 2);
  ParamSet ps;
  Rng init(9);
  enc.register_params(ps, init);
  Rng rng(10);
  const Tensor out = enc.forward(ps.copy_values(), random_tensor({2, 8, 8}, rng));
  CHECK(out.size() == 6);
}

TEST_CASE("apply_update follows the shared-statistics rule") {
  ParamSet ps;
  ps.create("theta", Tensor::from({1}, {1.0}));
  OptimizerState opt;
  opt.config().learning_rate = 0.5;
  opt.config().decay = 0.0;  // acc = g^2 exactly

  // Zero grads: params unchanged, version bumps.
  GradMap zero;
  zero.accum("theta", {1});
  ps.apply_update(zero, opt);
  CHECK(ps.version() == 1);
  CHECK(ps.copy_values().at("theta")[0] == 1.0);

  // Single scalar, decay 0: theta moves down by lr * g / sqrt(g^2 + eps),
  // a sign-consistent step of magnitude just under lr.
  GradMap g;
  g.accum("theta", {1})[0] = 2.0;
  ps.apply_update(g, opt);
  CHECK(ps.version() == 2);
  const double expected = 1.0 - 0.5 * 2.0 / std::sqrt(4.0 + opt.config().epsilon);
  CHECK(ps.copy_values().at("theta")[0] == doctest::Approx(expected).epsilon(1e-12));
  CHECK(ps.copy_values().at("theta")[0] < 1.0);
  // Grads were zeroed by the update.
  CHECK(g.entries().at("theta")[0] == 0.0);

  // NaN gradients are rejected and leave everything untouched.
  GradMap bad;
  bad.accum("theta", {1})[0] = std::nan("");
  CHECK_THROWS_AS(ps.apply_update(bad, opt), std::runtime_error);
  CHECK(ps.version() == 2);
}

TEST_CASE("rmsprop descends a quadratic bowl") {
  // loss = 0.5 * sum theta_i^2, gradient = theta.
  ParamSet ps;
  ps.create("theta", Tensor::from({3}, {2.0, -1.5, 0.7}));
  OptimizerState opt;
  opt.config().learning_rate = 0.05;
  double prev = 1e300;
  for (int step = 0; step < 100; ++step) {
    const NamedTensors v = ps.copy_values();
    const Tensor& t = v.at("theta");
    double loss = 0.5 * t.squared_norm();
    CHECK(loss < prev);  // strict decrease all the way down
    prev = loss;
    GradMap g;
    g.accum("theta", {3}) = t;
    ps.apply_update(g, opt);
  }
  CHECK(prev < 0.05);
  CHECK(ps.version() == 100);
}

TEST_CASE("grad_check over three seeds") {
  Rng rng(21);
  for (std::uint64_t seed : {10ull, 20ull, 30ull}) {
    Stack s;
    s.dense("f1", 6, 5).relu().dense("f2", 5, 2);
    ParamSet ps;
    Rng init(seed);
    s.register_params(ps, init);
    CHECK(stack_fd_error(s, random_tensor({6}, rng), ps) < 1e-4);
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  ParamSet ps;
  Rng rng(33);
  ps.create("agent/enc/w", random_tensor({3, 2, 2, 2}, rng));
  ps.create("omega/fc/b", random_tensor({5}, rng, -100.0, 100.0));
  // Awkward values must survive exactly.
  Tensor odd({4});
  odd[0] = 0.1 + 0.2;
  odd[1] = -0.0;
  odd[2] = 1e-308;
  odd[3] = 12345.6789e100;
  ps.create("odd", odd);

  const auto path = (std::filesystem::temp_directory_path() / "hausr_ck_test.bin").string();
  save_checkpoint(path, ps);
  const Checkpoint ck = load_checkpoint(path);
  const NamedTensors original = ps.copy_values();
  CHECK(ck.version == ps.version());
  REQUIRE(ck.entries.size() == original.size());
  for (const auto& [name, t] : original) {
    REQUIRE(ck.entries.count(name));
    CHECK(ck.entries.at(name) == t);
  }

  // A second save of the loaded state is byte-identical.
  const auto path2 = (std::filesystem::temp_directory_path() / "hausr_ck_test2.bin").string();
  save_checkpoint(path2, ck.entries, ck.version);
  std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
  std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
  std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
  CHECK(sa == sb);

  // Structural defects are rejected.
  std::ofstream f(path, std::ios::binary | std::ios::app);
  f << "x";
  f.close();
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
}

TEST_CASE("paramset version counts every update exactly once") {
  Stack s;
  s.dense("p", 3, 3);
  ParamSet ps;
  Rng init(40);
  s.register_params(ps, init);
  CHECK(ps.version() == 0);
  OptimizerState opt;
  Rng rng(41);
  for (int i = 1; i <= 17; ++i) {
    GradMap g;
    g.accum("p/w", {3, 3}) = random_tensor({3, 3}, rng);
    ps.apply_update(g, opt);
    CHECK(ps.version() == static_cast<std::uint64_t>(i));
  }
}
