#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>

#include "doctest.h"
#include "hausr/rollout.hpp"

using namespace hausr;

namespace {

const std::string kMapsDir = std::string(HAUSR_SOURCE_DIR) + "/maps/";

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("collection produces the exact requested count, deterministically") {
  const GridSpec g = GridSpec::from_file(kMapsDir + "empty5.map", 16, 16, 2);
  RenderCache cache(g);
  const Goal goal = make_goal(cache, Pose{3, 3, Heading::N});

  Rng r1(9), r2(9), r3(10);
  const auto a = collect_random(cache, goal, 1000, 50, r1);
  const auto b = collect_random(cache, goal, 1000, 50, r2);
  const auto c = collect_random(cache, goal, 1000, 50, r3);
  CHECK(a.size() == 1000);

  const auto pa = temp_path("hausr_roll_a.bin");
  const auto pb = temp_path("hausr_roll_b.bin");
  const auto pc = temp_path("hausr_roll_c.bin");
  save_archive(pa, a);
  save_archive(pb, b);
  save_archive(pc, c);
  auto bytes = [](const std::string& p) {
    std::ifstream f(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(f)),
                       std::istreambuf_iterator<char>());
  };
  CHECK(bytes(pa) == bytes(pb));  // same seed, bit-identical archives
  CHECK(bytes(pa) != bytes(pc));
}

TEST_CASE("archive round-trip restores transitions and frame stacks") {
  const GridSpec g = GridSpec::from_file(kMapsDir + "default9.map", 16, 16, 3);
  RenderCache cache(g);
  Rng rng(31);

  // Two goals back to back, with a mid-episode cutoff at the first boundary.
  std::vector<TransitionRecord> all;
  for (const Pose gp : {Pose{1, 1, Heading::N}, Pose{6, 6, Heading::S}}) {
    const auto part = collect_random(cache, make_goal(cache, gp), 137, 40, rng);
    all.insert(all.end(), part.begin(), part.end());
  }
  const auto path = temp_path("hausr_roll_rt.bin");
  save_archive(path, all);
  const auto loaded = load_archive(path, g.frame_stack);

  REQUIRE(loaded.size() == all.size());
  for (std::size_t i = 0; i < all.size(); ++i) {
    CHECK(loaded[i].goal == all[i].goal);
    CHECK(loaded[i].pose == all[i].pose);
    CHECK(loaded[i].action == all[i].action);
    CHECK(loaded[i].reward == all[i].reward);
    CHECK(loaded[i].next_pose == all[i].next_pose);
    CHECK(loaded[i].terminal == all[i].terminal);
    CHECK(loaded[i].by_goal == all[i].by_goal);
    CHECK(loaded[i].obs_stack == all[i].obs_stack);
  }

  // Corrupt tail is rejected.
  std::ofstream f(path, std::ios::binary | std::ios::app);
  f << "zz";
  f.close();
  CHECK_THROWS(load_archive(path, g.frame_stack));
}

TEST_CASE("replay buffer wraps and samples both classes") {
  const GridSpec g = GridSpec::from_file(kMapsDir + "empty5.map", 16, 16, 1);
  RenderCache cache(g);
  const Goal goal = make_goal(cache, Pose{2, 2, Heading::E});
  Rng rng(77);
  const auto recs = collect_random(cache, goal, 3000, 30, rng);

  ReplayBuffer buf(2048);
  for (const auto& r : recs) buf.push(r);
  CHECK(buf.size() == 2048);
  CHECK(buf.goal_terminal_count() > 0);

  Rng srng(5);
  const auto uni = buf.sample_uniform(64, srng);
  CHECK(uni.size() == 64);

  const auto bal = buf.sample_balanced(64, srng);
  int goal_hits = 0;
  for (const auto* r : bal) goal_hits += r->by_goal ? 1 : 0;
  CHECK(goal_hits == 32);  // exactly half the batch from goal-terminal slots
}

TEST_CASE("balanced sampling degrades to uniform without terminal examples") {
  const GridSpec g = GridSpec::from_file(kMapsDir + "empty5.map", 16, 16, 1);
  RenderCache cache(g);
  const Goal goal = make_goal(cache, Pose{2, 2, Heading::E});
  ReplayBuffer buf(64);
  TransitionRecord r;
  r.goal = goal.state;
  r.obs_stack = {Pose{1, 1, Heading::N}};
  r.pose = r.obs_stack.back();
  r.next_pose = Pose{1, 1, Heading::E};
  r.action = Action::TurnRight;
  r.reward = -0.01;
  buf.push(r);
  Rng rng(1);
  CHECK(buf.sample_balanced(8, rng).size() == 8);
}
