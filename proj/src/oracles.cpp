#include "hausr/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace hausr {

namespace {

constexpr double kStepReward = -0.01;
constexpr double kGoalReward = 1.0;

struct PoseGraph {
  std::vector<Pose> states;
  std::vector<int> next;  // n x 4: successor pose index

  PoseGraph(const GridSpec& grid) {
    states = enumerate_states(grid);
    next.resize(states.size() * 4);
    for (std::size_t s = 0; s < states.size(); ++s)
      for (int a = 0; a < kNumActions; ++a)
        next[s * 4 + a] =
            pose_index(grid, step_pose(grid, states[s], static_cast<Action>(a)));
  }
};

}  // namespace

ValueOracle tabular_oracle(const GridSpec& grid, const Pose& goal, double gamma,
                           double tol) {
  const PoseGraph g(grid);
  const int n = static_cast<int>(g.states.size());
  const int gi = pose_index(grid, goal);
  if (gi < 0) throw std::invalid_argument("tabular_oracle: goal not a valid pose");

  ValueOracle out;
  out.states = n;

  // BFS on reversed edges from the goal.
  std::vector<std::vector<int>> rev(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s)
    for (int a = 0; a < 4; ++a) {
      const int t = g.next[static_cast<std::size_t>(s) * 4 + a];
      if (t != s) rev[static_cast<std::size_t>(t)].push_back(s);
    }
  out.bfs_steps.assign(static_cast<std::size_t>(n), -1);
  out.bfs_steps[static_cast<std::size_t>(gi)] = 0;
  std::deque<int> queue{gi};
  while (!queue.empty()) {
    const int s = queue.front();
    queue.pop_front();
    for (int p : rev[static_cast<std::size_t>(s)])
      if (out.bfs_steps[static_cast<std::size_t>(p)] < 0) {
        out.bfs_steps[static_cast<std::size_t>(p)] =
            out.bfs_steps[static_cast<std::size_t>(s)] + 1;
        queue.push_back(p);
      }
  }
  for (int s = 0; s < n; ++s)
    if (out.bfs_steps[static_cast<std::size_t>(s)] < 0) out.all_reachable = false;

  // Value iteration; the goal is absorbing with value 0.
  out.v_star.assign(static_cast<std::size_t>(n), 0.0);
  while (true) {
    double residual = 0.0;
    out.value_iterations += 1;
    for (int s = 0; s < n; ++s) {
      if (s == gi) continue;
      double best = -1e300;
      for (int a = 0; a < 4; ++a) {
        const int t = g.next[static_cast<std::size_t>(s) * 4 + a];
        const double q = t == gi
                             ? kGoalReward
                             : kStepReward + gamma * out.v_star[static_cast<std::size_t>(t)];
        best = std::max(best, q);
      }
      residual = std::max(residual, std::abs(best - out.v_star[static_cast<std::size_t>(s)]));
      out.v_star[static_cast<std::size_t>(s)] = best;
    }
    if (residual < tol) break;
    if (out.value_iterations > 2000000)
      throw std::runtime_error("tabular_oracle: value iteration failed to converge");
  }
  return out;
}

SrOracle tabular_sr_oracle(const GridSpec& grid, const Pose& goal,
                           const std::vector<double>& policy, double gamma) {
  const PoseGraph g(grid);
  const int n = static_cast<int>(g.states.size());
  const int gi = pose_index(grid, goal);
  if (gi < 0) throw std::invalid_argument("tabular_sr_oracle: invalid goal");
  if (policy.size() != static_cast<std::size_t>(n) * 4)
    throw std::invalid_argument("tabular_sr_oracle: policy must be n x 4");

  // Goal-gated transition matrix P[s][t] and expected one-step reward.
  std::vector<double> P(static_cast<std::size_t>(n) * n, 0.0);
  SrOracle out;
  out.n = n;
  out.omega.assign(static_cast<std::size_t>(n), 0.0);
  for (int s = 0; s < n; ++s) {
    if (s == gi) continue;  // absorbing
    for (int a = 0; a < 4; ++a) {
      const double pa = policy[static_cast<std::size_t>(s) * 4 + a];
      const int t = g.next[static_cast<std::size_t>(s) * 4 + a];
      out.omega[static_cast<std::size_t>(s)] +=
          pa * (t == gi ? kGoalReward : kStepReward);
      if (t != gi) P[static_cast<std::size_t>(s) * n + t] += pa;
    }
  }

  // psi = (I - gamma P)^{-1} by Gauss-Jordan elimination.
  std::vector<double> m(static_cast<std::size_t>(n) * 2 * n, 0.0);
  const std::size_t w = static_cast<std::size_t>(2 * n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j)
      m[i * w + j] = (i == j ? 1.0 : 0.0) - gamma * P[static_cast<std::size_t>(i) * n + j];
    m[i * w + n + i] = 1.0;
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(m[r * w + col]) > std::abs(m[pivot * w + col])) pivot = r;
    if (std::abs(m[pivot * w + col]) < 1e-14)
      throw std::runtime_error("tabular_sr_oracle: singular system");
    if (pivot != col)
      for (std::size_t j = 0; j < w; ++j) std::swap(m[col * w + j], m[pivot * w + j]);
    const double inv = 1.0 / m[col * w + col];
    for (std::size_t j = 0; j < w; ++j) m[col * w + j] *= inv;
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = m[r * w + col];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < w; ++j) m[r * w + j] -= f * m[col * w + j];
    }
  }
  out.psi.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      out.psi[static_cast<std::size_t>(i) * n + j] = m[i * w + n + j];

  // Independent route for v_pi: plain fixed-point policy evaluation.
  out.v_pi.assign(static_cast<std::size_t>(n), 0.0);
  for (int iter = 0; iter < 4000000; ++iter) {
    double residual = 0.0;
    for (int s = 0; s < n; ++s) {
      if (s == gi) continue;
      double v = out.omega[static_cast<std::size_t>(s)];
      for (int a = 0; a < 4; ++a) {
        const double pa = policy[static_cast<std::size_t>(s) * 4 + a];
        const int t = g.next[static_cast<std::size_t>(s) * 4 + a];
        if (t != gi) v += gamma * pa * out.v_pi[static_cast<std::size_t>(t)];
      }
      residual = std::max(residual, std::abs(v - out.v_pi[static_cast<std::size_t>(s)]));
      out.v_pi[static_cast<std::size_t>(s)] = v;
    }
    if (residual < 1e-14) return out;
  }
  throw std::runtime_error("tabular_sr_oracle: policy evaluation failed to converge");
}

std::vector<int> bfs_policy(const GridSpec& grid, const Pose& goal) {
  const PoseGraph g(grid);
  const ValueOracle oracle = tabular_oracle(grid, goal, 0.99, 1e-6);
  const int n = static_cast<int>(g.states.size());
  std::vector<int> action(static_cast<std::size_t>(n), 0);
  for (int s = 0; s < n; ++s) {
    const int ds = oracle.bfs_steps[static_cast<std::size_t>(s)];
    if (ds <= 0) continue;
    for (int a = 0; a < 4; ++a) {
      const int t = g.next[static_cast<std::size_t>(s) * 4 + a];
      if (oracle.bfs_steps[static_cast<std::size_t>(t)] == ds - 1) {
        action[static_cast<std::size_t>(s)] = a;
        break;
      }
    }
  }
  return action;
}

}  // namespace hausr
