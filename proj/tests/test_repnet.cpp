#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hausr/repnet.hpp"

using namespace hausr;
using nn::GradMap;
using nn::NamedTensors;
using nn::ParamSet;
using nn::Tensor;

namespace {

const std::string kMapsDir = std::string(HAUSR_SOURCE_DIR) + "/maps/";

/// Tiny configuration: d=4 features over 8x8 single-frame observations.
RepNetConfig tiny_config() {
  RepNetConfig cfg;
  cfg.obs_shape = {1, 8, 8};
  cfg.conv1 = {3, 3, 2};
  cfg.conv2 = {4, 2, 1};
  cfg.d = 4;
  cfg.decoder_hidden = 8;
  cfg.forward_hidden = 8;
  cfg.inverse_hidden = 8;
  return cfg;
}

struct TinyWorld {
  GridSpec grid;
  RenderCache cache;
  std::vector<TransitionRecord> records;

  TinyWorld()
      : grid(GridSpec::from_file(kMapsDir + "empty5.map", 8, 8, 1)),
        cache(grid) {
    Rng rng(3);
    records = collect_random(cache, make_goal(cache, Pose{3, 3, Heading::N}),
                             64, 25, rng);
  }

  std::vector<const TransitionRecord*> batch(std::size_t n) const {
    std::vector<const TransitionRecord*> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(&records[i]);
    return out;
  }
};

}  // namespace

TEST_CASE("encode is deterministic and shape-checked") {
  TinyWorld w;
  RepNet net(tiny_config());
  ParamSet ps;
  Rng init(1);
  net.register_params(ps, init);
  const NamedTensors v = ps.copy_values();

  const Tensor obs = w.cache.replicated_obs(Pose{1, 1, Heading::N});
  const Tensor a = net.encode(v, obs);
  const Tensor b = net.encode(v, obs);
  CHECK(a == b);
  CHECK(a.size() == 4);
  CHECK_THROWS(net.encode(v, Tensor({2, 8, 8})));
}

TEST_CASE("zero parameters map zero input to the zero feature vector") {
  RepNet net(tiny_config());
  ParamSet ps;
  Rng init(2);
  net.register_params(ps, init);
  NamedTensors v = ps.copy_values();
  for (auto& [name, t] : v) t.zero();
  const Tensor phi = net.encode(v, Tensor({1, 8, 8}));
  for (std::size_t i = 0; i < phi.size(); ++i) CHECK(phi[i] == 0.0);

  // Zero phi and zero parameters give a zero forward prediction.
  const Tensor pred = net.forward_dynamics(v, Tensor({4}), 2);
  for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i] == 0.0);

  // Symmetric inputs on zero parameters give uniform inverse logits.
  const Tensor logits = net.inverse_dynamics(v, Tensor({4}), Tensor({4}));
  const Tensor p = nn::softmax(logits);
  for (std::size_t i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25));
}

TEST_CASE("blocked transitions keep the loss well defined") {
  TinyWorld w;
  RepNet net(tiny_config());
  ParamSet ps;
  Rng init(4);
  net.register_params(ps, init);
  const NamedTensors v = ps.copy_values();

  // A fabricated blocked move: pose unchanged, so phi targets equal phi.
  TransitionRecord rec;
  rec.goal = Pose{3, 3, Heading::N};
  rec.obs_stack = {Pose{1, 1, Heading::W}};
  rec.pose = rec.obs_stack.back();
  rec.action = Action::Forward;
  rec.reward = -0.01;
  rec.next_pose = rec.pose;

  const auto report = net.batch_loss(v, {&rec}, w.cache);
  CHECK(std::isfinite(report.ae));
  CHECK(std::isfinite(report.fwd));
  CHECK(std::isfinite(report.inv));
  CHECK(report.ae >= 0.0);
  CHECK(report.fwd >= 0.0);
  CHECK(report.inv >= 0.0);

  // The forward target collapses to phi(s_t): the loss equals
  // |pred - phi(s_t)|^2 / d for this identity transition.
  const Tensor phi = net.encode(v, w.cache.stacked_obs(rec.obs_stack));
  const Tensor pred = net.forward_dynamics(v, phi, 0);
  double expect = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - phi[i];
    expect += e * e;
  }
  expect /= static_cast<double>(pred.size());
  CHECK(report.fwd == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("combined pretraining gradient passes finite differences") {
  TinyWorld w;

  // Checked per component and combined: each weight vector isolates one loss.
  struct WeightCase {
    double ae, fwd, inv;
  };
  for (const WeightCase wc : {WeightCase{1, 0, 0}, WeightCase{0, 1, 0},
                              WeightCase{0, 0, 1}, WeightCase{1, 1, 1}}) {
    RepNetConfig cfg = tiny_config();
    cfg.ae_weight = wc.ae;
    cfg.forward_weight = wc.fwd;
    cfg.inverse_weight = wc.inv;
    RepNet net(cfg);
    ParamSet ps;
    Rng init(7);
    net.register_params(ps, init);

    const auto batch = w.batch(3);
    const NamedTensors frozen = ps.copy_values();  // stop-gradient target source
    GradMap analytic;
    net.batch_gradients(frozen, batch, w.cache, analytic);
    const auto report = nn::grad_check(
        ps,
        [&](const NamedTensors& values) {
          return net.batch_loss(values, batch, w.cache, &frozen).combined;
        },
        analytic);
    INFO("weights ae=", wc.ae, " fwd=", wc.fwd, " inv=", wc.inv, " worst at ",
         report.worst_param);
    CHECK(report.max_rel_error < 1e-4);
  }
}

TEST_CASE("pretrain_step reduces the combined loss on a small world") {
  TinyWorld w;
  RepNetConfig cfg = tiny_config();
  RepNet net(cfg);
  ParamSet ps;
  Rng init(11);
  net.register_params(ps, init);
  nn::OptimizerState opt;
  opt.config().learning_rate = 1e-3;

  Rng sample(12);
  ReplayBuffer buf(4096);
  for (const auto& r : w.records) buf.push(r);

  double first_window = 0.0, last_window = 0.0;
  const int steps = 400;
  for (int step = 0; step < steps; ++step) {
    const auto batch = buf.sample_uniform(8, sample);
    const auto report = net.pretrain_step(ps, opt, batch, w.cache);
    if (step < 40) first_window += report.combined;
    if (step >= steps - 40) last_window += report.combined;
  }
  CHECK(last_window < 0.5 * first_window);
  CHECK(ps.version() == static_cast<std::uint64_t>(steps));
}

TEST_CASE("empty batches are rejected") {
  TinyWorld w;
  RepNet net(tiny_config());
  ParamSet ps;
  Rng init(13);
  net.register_params(ps, init);
  CHECK_THROWS(net.batch_loss(ps.copy_values(), {}, w.cache));
}
