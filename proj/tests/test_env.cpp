#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <set>

#include "doctest.h"
#include "hausr/env.hpp"
#include "hausr/oracles.hpp"

using namespace hausr;

namespace {

const std::string kMapsDir = std::string(HAUSR_SOURCE_DIR) + "/maps/";

GridSpec empty5(int k = 2) { return GridSpec::from_file(kMapsDir + "empty5.map", 16, 16, k); }
GridSpec default9(int k = 2) { return GridSpec::from_file(kMapsDir + "default9.map", 16, 16, k); }

}  // namespace

TEST_CASE("step semantics: translation, rotation, blocked-move absorption") {
  GridSpec g = empty5();

  // Forward along N decreases y.
  CHECK(step_pose(g, {2, 3, Heading::N}, Action::Forward) == Pose{2, 2, Heading::N});
  // TurnLeft from N faces W and never moves.
  CHECK(step_pose(g, {2, 3, Heading::N}, Action::TurnLeft) == Pose{2, 3, Heading::W});
  // Blocked forward into the border wall is absorbed.
  CHECK(step_pose(g, {1, 1, Heading::W}, Action::Forward) == Pose{1, 1, Heading::W});

  // E increases x; Backward undoes Forward on open ground.
  CHECK(step_pose(g, {2, 2, Heading::E}, Action::Forward) == Pose{3, 2, Heading::E});
  CHECK(step_pose(g, {3, 2, Heading::E}, Action::Backward) == Pose{2, 2, Heading::E});

  // Closure: every (pose, action) lands on a valid pose, on both maps.
  for (const GridSpec& grid : {empty5(), default9()})
    for (const Pose& p : enumerate_states(grid))
      for (int a = 0; a < kNumActions; ++a)
        CHECK(grid.valid_pose(step_pose(grid, p, static_cast<Action>(a))));
}

TEST_CASE("enumerate_states counts free cells times headings") {
  CHECK(enumerate_states(empty5()).size() == 9 * 4);

  // Single-free-cell grid (built directly; the loader would reject it).
  GridSpec tiny;
  tiny.width = tiny.height = 3;
  tiny.walls = {1, 1, 1, 1, 0, 1, 1, 1, 1};
  CHECK(enumerate_states(tiny).size() == 4);

  // The shipped default map yields the full 180-state space.
  const auto states = enumerate_states(default9());
  CHECK(states.size() == 180);
  CHECK(states.size() == static_cast<std::size_t>(default9().free_cell_count()) * 4);

  // pose_index inverts enumerate_states.
  const GridSpec g = default9();
  for (std::size_t i = 0; i < states.size(); ++i)
    CHECK(pose_index(g, states[i]) == static_cast<int>(i));
}

TEST_CASE("default map is fully connected") {
  const GridSpec g = default9();
  const auto oracle = tabular_oracle(g, Pose{1, 1, Heading::N}, 0.99);
  CHECK(oracle.all_reachable);
}

TEST_CASE("map loader validates structure") {
  CHECK_THROWS(GridSpec::from_text("###\n#.#\n#.#\n"));        // open border row
  CHECK_THROWS(GridSpec::from_text("####\n#.##\n####\n####\n"));  // one free cell
  CHECK_THROWS(GridSpec::from_text("###\n#x#\n###\n"));        // bad character
  CHECK_THROWS(GridSpec::from_text("####\n#..#\n###\n####\n"));   // ragged row
  CHECK_THROWS(GridSpec::from_file(kMapsDir + "empty5.map", 4, 16, 2));  // tiny render
  CHECK_THROWS(GridSpec::from_file(kMapsDir + "empty5.map", 16, 16, 0)); // K < 1
  CHECK_NOTHROW(GridSpec::from_file(kMapsDir + "empty5.map", 8, 8, 1));
}

TEST_CASE("render determinism and value range") {
  const GridSpec g = default9();
  const Pose p{3, 3, Heading::E};
  const Tensor a = render_frame(g, p);
  const Tensor b = render_frame(g, p);
  CHECK(a == b);  // bit-identical
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] >= 0.0);
    CHECK(a[i] <= 1.0);
  }
}

TEST_CASE("facing a wall at distance 1 fills center columns") {
  const GridSpec g = empty5();
  const Tensor f = render_frame(g, Pose{1, 1, Heading::N});  // wall directly ahead
  const int H = g.render_h, W = g.render_w;
  // A full-height column has no ceiling pixel at the top row.
  const int c = W / 2;
  const double top = f[static_cast<std::size_t>(0) * W + c];
  const double bottom = f[static_cast<std::size_t>(H - 1) * W + c];
  // Wall shading differs from the fixed ceiling/floor gradients.
  CHECK(top != doctest::Approx(0.06).epsilon(1e-9));
  CHECK(bottom != doctest::Approx(0.30 - 0.12 * 0.0).epsilon(1e-9));
}

TEST_CASE("renders are pairwise distinct across all poses") {
  for (const GridSpec& g : {empty5(), default9()}) {
    const auto states = enumerate_states(g);
    std::vector<Tensor> frames;
    frames.reserve(states.size());
    for (const Pose& p : states) frames.push_back(render_frame(g, p));
    for (std::size_t i = 0; i < frames.size(); ++i)
      for (std::size_t j = i + 1; j < frames.size(); ++j)
        CHECK(!(frames[i] == frames[j]));
  }
}

TEST_CASE("env_step reward and termination contract") {
  const GridSpec g = empty5();
  const Pose goal{3, 1, Heading::N};

  // Reaching the goal pays +1 and terminates.
  const EnvStep hit = env_step(g, Pose{3, 2, Heading::N}, Action::Forward, goal, 3, 500);
  CHECK(hit.reward == 1.0);
  CHECK(hit.terminal);
  CHECK(hit.by_goal);

  // An ordinary step pays the constant time penalty.
  const EnvStep miss = env_step(g, Pose{1, 3, Heading::N}, Action::Forward, goal, 3, 500);
  CHECK(miss.reward == -0.01);
  CHECK(!miss.terminal);

  // The cap terminates without the goal bonus.
  const EnvStep capped = env_step(g, Pose{1, 3, Heading::N}, Action::TurnLeft, goal, 499, 500);
  CHECK(capped.reward == -0.01);
  CHECK(capped.terminal);
  CHECK(!capped.by_goal);

  // Stepping a finished episode is a contract violation.
  CHECK_THROWS_AS(env_step(g, Pose{1, 3, Heading::N}, Action::Forward, goal, 500, 500),
                  std::logic_error);
}

TEST_CASE("episode: reset replication, stack shift, return identity") {
  const GridSpec g = empty5(3);  // K = 3
  RenderCache cache(g);
  const Goal goal = make_goal(cache, Pose{3, 3, Heading::S});
  Rng rng(5);

  Episode ep(cache, goal, 500);
  const Pose start{1, 1, Heading::E};
  const Tensor obs0 = ep.reset(start, rng);
  const Tensor f0 = render_frame(g, start);
  REQUIRE(obs0.shape() == std::vector<std::size_t>{3, 16, 16});
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < f0.size(); ++i)
      CHECK(obs0[k * f0.size() + i] == f0[i]);

  // One step: frames 0..K-2 shift down, frame K-1 renders the new pose.
  const auto s1 = ep.step(Action::Forward);
  const Tensor f1 = render_frame(g, s1.pose);
  for (std::size_t i = 0; i < f0.size(); ++i) {
    CHECK(s1.obs[0 * f0.size() + i] == f0[i]);
    CHECK(s1.obs[1 * f0.size() + i] == f0[i]);
    CHECK(s1.obs[2 * f0.size() + i] == f1[i]);
  }

  // Optimal-path return: -0.01 * (n - 1) + 1, with exact reward constants.
  Episode run(cache, make_goal(cache, Pose{1, 3, Heading::S}), 500);
  run.reset(Pose{1, 1, Heading::S}, rng);
  int n = 0;
  for (Action a : {Action::Forward, Action::Forward}) {
    const auto s = run.step(a);
    ++n;
    CHECK((s.reward == 1.0 || s.reward == -0.01));
  }
  CHECK(run.done());
  CHECK(run.episode_return() == doctest::Approx(-0.01 * (n - 1) + 1.0).epsilon(1e-12));
}

TEST_CASE("goal images replicate the goal frame K times") {
  const GridSpec g = empty5(4);
  RenderCache cache(g);
  const Pose pose{2, 2, Heading::W};
  const Goal goal = make_goal(cache, pose);
  const Tensor f = render_frame(g, pose);
  REQUIRE(goal.image.size() == 4 * f.size());
  for (int k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < f.size(); ++i)
      CHECK(goal.image[k * f.size() + i] == f[i]);
  CHECK(goal.id == pose_index(g, pose));
}

TEST_CASE("random reset covers every free non-goal pose") {
  const GridSpec g = empty5();
  RenderCache cache(g);
  const Goal goal = make_goal(cache, Pose{2, 2, Heading::N});
  Rng rng(123);
  Episode ep(cache, goal, 500);
  std::set<std::pair<std::pair<int, int>, int>> seen;
  for (int i = 0; i < 10000; ++i) {
    ep.reset(std::nullopt, rng);
    CHECK(!(ep.pose() == goal.state));
    seen.insert({{ep.pose().x, ep.pose().y}, static_cast<int>(ep.pose().heading)});
  }
  CHECK(seen.size() == 9 * 4 - 1);  // every free pose except the goal
}

TEST_CASE("single free cell cannot host an episode") {
  GridSpec tiny;
  tiny.width = tiny.height = 3;
  tiny.walls = {1, 1, 1, 1, 0, 1, 1, 1, 1};
  tiny.render_h = tiny.render_w = 8;
  tiny.frame_stack = 1;
  RenderCache cache(tiny);
  const Goal goal = make_goal(cache, Pose{1, 1, Heading::N});
  CHECK_THROWS_AS(Episode(cache, goal, 500), std::invalid_argument);
}

TEST_CASE("identical seeds give identical transition streams") {
  const GridSpec g = default9();
  RenderCache cache(g);
  const Goal goal = make_goal(cache, Pose{5, 5, Heading::E});

  auto run = [&](std::uint64_t seed) {
    Rng rng(seed);
    Episode ep(cache, goal, 100);
    ep.reset(std::nullopt, rng);
    std::vector<double> rewards;
    std::vector<int> xs;
    for (int i = 0; i < 300 && !ep.done(); ++i) {
      const auto s = ep.step(static_cast<Action>(rng.uniform_index(4)));
      rewards.push_back(s.reward);
      xs.push_back(s.pose.x * 100 + s.pose.y * 10 + static_cast<int>(s.pose.heading));
    }
    return std::make_pair(rewards, xs);
  };
  CHECK(run(42) == run(42));
  CHECK(run(42) != run(43));
}
