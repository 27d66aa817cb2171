#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "hausr/oracles.hpp"
#include "hausr/rng.hpp"

using namespace hausr;

namespace {

const std::string kMapsDir = std::string(HAUSR_SOURCE_DIR) + "/maps/";

std::vector<double> random_policy(int n, Rng& rng) {
  std::vector<double> pi(static_cast<std::size_t>(n) * 4);
  for (int s = 0; s < n; ++s) {
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) {
      const double w = 0.05 + rng.uniform();
      pi[static_cast<std::size_t>(s) * 4 + a] = w;
      sum += w;
    }
    for (int a = 0; a < 4; ++a) pi[static_cast<std::size_t>(s) * 4 + a] /= sum;
  }
  return pi;
}

GridSpec grid3x3() {
  // Smallest loadable map: a 3x4 interior would break symmetry; use 5x5 ring.
  return GridSpec::from_text("#####\n#...#\n#.#.#\n#...#\n#####\n", 8, 8, 1);
}

}  // namespace

TEST_CASE("value oracle hand cases") {
  const GridSpec g = GridSpec::from_file(kMapsDir + "empty5.map", 8, 8, 1);
  const Pose goal{2, 1, Heading::N};
  const auto oracle = tabular_oracle(g, goal, 0.99);

  // Goal adjacent and faced: one step earns +1, so V* = 1.0 exactly.
  const int adj = pose_index(g, Pose{2, 2, Heading::N});
  CHECK(oracle.v_star[adj] == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(oracle.bfs_steps[adj] == 1);

  // Two steps: -0.01 + 0.99 * 1.
  const int two = pose_index(g, Pose{2, 3, Heading::N});
  CHECK(oracle.v_star[two] == doctest::Approx(-0.01 + 0.99 * 1.0).epsilon(1e-10));
  CHECK(oracle.bfs_steps[two] == 2);

  // Bellman optimality residual at every state after convergence.
  const auto states = enumerate_states(g);
  const int gi = pose_index(g, goal);
  for (int s = 0; s < static_cast<int>(states.size()); ++s) {
    if (s == gi) continue;
    double best = -1e300;
    for (int a = 0; a < 4; ++a) {
      const int t = pose_index(g, step_pose(g, states[s], static_cast<Action>(a)));
      best = std::max(best, t == gi ? 1.0 : -0.01 + 0.99 * oracle.v_star[t]);
    }
    CHECK(std::abs(best - oracle.v_star[s]) < 1e-11);
  }
}

TEST_CASE("bfs policy is optimal everywhere on the default map") {
  const GridSpec g = GridSpec::from_file(kMapsDir + "default9.map", 8, 8, 1);
  const Pose goal{4, 5, Heading::W};
  const auto oracle = tabular_oracle(g, goal, 0.99);
  const auto policy = bfs_policy(g, goal);
  const auto states = enumerate_states(g);
  REQUIRE(oracle.all_reachable);
  for (std::size_t s = 0; s < states.size(); ++s) {
    if (oracle.bfs_steps[s] == 0) continue;
    // Walking the policy reaches the goal in exactly bfs_steps moves.
    Pose p = states[s];
    int steps = 0;
    while (!(p == goal) && steps <= oracle.bfs_steps[s]) {
      p = step_pose(g, p, static_cast<Action>(policy[static_cast<std::size_t>(
                            pose_index(g, p))]));
      ++steps;
    }
    CHECK(p == goal);
    CHECK(steps == oracle.bfs_steps[s]);
  }
}

TEST_CASE("successor fixed point reproduces the value function") {
  // The module's core equivalence: psi' omega == v_pi for one-hot features
  // and the exact expected-reward vector, checked on two maps and three
  // random policies, against an independently iterated v_pi.
  for (const GridSpec& g :
       {grid3x3(), GridSpec::from_file(kMapsDir + "empty5.map", 8, 8, 1)}) {
    const auto states = enumerate_states(g);
    const int n = static_cast<int>(states.size());
    const Pose goal = states[static_cast<std::size_t>(n / 3)];
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      Rng rng(seed);
      const auto policy = random_policy(n, rng);
      const SrOracle sr = tabular_sr_oracle(g, goal, policy, 0.99);
      for (int s = 0; s < n; ++s) {
        double v = 0.0;
        for (int j = 0; j < n; ++j) v += sr.psi_at(s, j) * sr.omega[j];
        CHECK(std::abs(v - sr.v_pi[s]) < 1e-10);
      }
    }
  }
}

TEST_CASE("gamma = 0 collapses psi to the one-hot features") {
  const GridSpec g = grid3x3();
  const int n = static_cast<int>(enumerate_states(g).size());
  Rng rng(4);
  const auto policy = random_policy(n, rng);
  const SrOracle sr = tabular_sr_oracle(g, Pose{1, 1, Heading::N}, policy, 0.0);
  for (int s = 0; s < n; ++s)
    for (int j = 0; j < n; ++j)
      CHECK(sr.psi_at(s, j) == doctest::Approx(s == j ? 1.0 : 0.0).epsilon(1e-12));
}

TEST_CASE("psi row sums equal the expected discounted episode length") {
  const GridSpec g = grid3x3();
  const auto states = enumerate_states(g);
  const int n = static_cast<int>(states.size());
  const Pose goal = states[5];
  const int gi = 5;
  Rng rng(9);
  const auto policy = random_policy(n, rng);
  const double gamma = 0.97;
  const SrOracle sr = tabular_sr_oracle(g, goal, policy, gamma);

  // Independent fixed point for L(s) = 1 + gamma * E[L(s')], absorbing goal.
  std::vector<double> len(static_cast<std::size_t>(n), 0.0);
  for (int iter = 0; iter < 100000; ++iter) {
    double residual = 0.0;
    for (int s = 0; s < n; ++s) {
      if (s == gi) continue;
      double v = 1.0;
      for (int a = 0; a < 4; ++a) {
        const int t = pose_index(g, step_pose(g, states[s], static_cast<Action>(a)));
        if (t != gi) v += gamma * policy[static_cast<std::size_t>(s) * 4 + a] * len[t];
      }
      residual = std::max(residual, std::abs(v - len[s]));
      len[s] = v;
    }
    if (residual < 1e-13) break;
  }
  len[gi] = 1.0;  // the goal row is phi(goal) alone

  for (int s = 0; s < n; ++s) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += sr.psi_at(s, j);
    CHECK(row == doctest::Approx(len[s]).epsilon(1e-9));
  }
}

TEST_CASE("successor advantage at the fixed point matches the value TD error") {
  // With the factored pseudo-reward phi' omega, the advantage
  // [phi + gamma_t psi(s') - psi(s)]' omega must equal
  // r_hat(s) + gamma_t v_pi(s') - v_pi(s) for every state-action pair, with
  // v_pi from the independent evaluation route.
  const GridSpec g = grid3x3();
  const auto states = enumerate_states(g);
  const int n = static_cast<int>(states.size());
  const Pose goal = states[7];
  const int gi = 7;
  Rng rng(13);
  const auto policy = random_policy(n, rng);
  const double gamma = 0.99;
  const SrOracle sr = tabular_sr_oracle(g, goal, policy, gamma);

  for (int s = 0; s < n; ++s) {
    if (s == gi) continue;
    for (int a = 0; a < 4; ++a) {
      const int t = pose_index(g, step_pose(g, states[s], static_cast<Action>(a)));
      const double gamma_t = t == gi ? 0.0 : gamma;
      double adv = 0.0;
      for (int j = 0; j < n; ++j) {
        const double phi_j = s == j ? 1.0 : 0.0;
        adv += (phi_j + gamma_t * sr.psi_at(t, j) - sr.psi_at(s, j)) * sr.omega[j];
      }
      const double r_hat = sr.omega[s];
      const double td = r_hat + gamma_t * sr.v_pi[t] - sr.v_pi[s];
      CHECK(std::abs(adv - td) < 1e-10);
    }
  }
}

TEST_CASE("unreachable goals are reported, not fatal") {
  // A walled-off pocket: the right cell cannot reach the left one.
  const GridSpec g = GridSpec::from_text("#####\n#.#.#\n#####\n", 8, 8, 1);
  const auto oracle = tabular_oracle(g, Pose{1, 1, Heading::N}, 0.99);
  CHECK(!oracle.all_reachable);
  const int far = pose_index(g, Pose{3, 1, Heading::N});
  CHECK(oracle.bfs_steps[far] == -1);
}
