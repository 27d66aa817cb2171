#pragma once

#include <vector>

#include "hausr/env.hpp"

namespace hausr {

/// Exact solutions of the goal-reaching MDP over enumerated poses.
/// Rewards: +1 on the transition into the goal pose, -0.01 otherwise; the
/// goal is absorbing, so nothing beyond it is discounted in.
struct ValueOracle {
  int states = 0;
  std::vector<double> v_star;   // optimal value per pose index
  std::vector<int> bfs_steps;   // shortest step count to goal, -1 unreachable
  bool all_reachable = true;
  int value_iterations = 0;
};

/// Value iteration to residual < tol plus breadth-first shortest paths.
ValueOracle tabular_oracle(const GridSpec& grid, const Pose& goal, double gamma,
                           double tol = 1e-12);

/// Exact successor-representation tables for a fixed stochastic policy with
/// one-hot state features. psi solves
///   psi(s) = e_s + gamma * sum_a pi(a|s) [s' != goal] psi(s')
/// by direct linear solve; v_pi comes from an independent fixed-point
/// iteration; omega is the expected one-step reward per state, the exact
/// reward vector for which psi' omega equals v_pi.
struct SrOracle {
  int n = 0;
  std::vector<double> psi;    // n x n, row s = psi(s)
  std::vector<double> v_pi;   // policy value, independent route
  std::vector<double> omega;  // expected immediate reward per state

  double psi_at(int s, int j) const { return psi[static_cast<std::size_t>(s) * n + j]; }
};

/// `policy` is row-major n x 4, rows summing to 1.
SrOracle tabular_sr_oracle(const GridSpec& grid, const Pose& goal,
                           const std::vector<double>& policy, double gamma);

/// An optimal goal-reaching action per pose, derived from BFS distances
/// (any action strictly decreasing the distance). Used as an oracle policy.
std::vector<int> bfs_policy(const GridSpec& grid, const Pose& goal);

}  // namespace hausr
