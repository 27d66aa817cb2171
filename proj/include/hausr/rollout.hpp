#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hausr/env.hpp"
#include "hausr/rng.hpp"

namespace hausr {

/// One collected transition. Observations are not stored as pixels: the
/// renderer is deterministic, so a transition keeps the K poses behind its
/// frame stack and re-renders through a RenderCache on demand.
struct TransitionRecord {
  Pose goal;
  std::vector<Pose> obs_stack;  // K poses, oldest first; back() == pose
  Pose pose;
  Action action = Action::Forward;
  double reward = 0.0;
  Pose next_pose;
  bool terminal = false;
  bool by_goal = false;

  std::vector<Pose> next_stack() const {
    std::vector<Pose> s(obs_stack.begin() + 1, obs_stack.end());
    s.push_back(next_pose);
    return s;
  }
};

/// In-memory transition history: a ring buffer with uniform and
/// class-balanced sampling. Goal-reaching transitions are rare, so the
/// balanced sampler draws half of each batch from them.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(TransitionRecord rec);
  std::size_t size() const { return store_.size(); }
  std::size_t capacity() const { return capacity_; }
  const TransitionRecord& at(std::size_t i) const { return store_[i]; }

  std::vector<const TransitionRecord*> sample_uniform(std::size_t n, Rng& rng) const;

  /// Half the batch from goal-terminal transitions, half from the rest.
  /// Falls back to uniform if either class is empty.
  std::vector<const TransitionRecord*> sample_balanced(std::size_t n, Rng& rng) const;

  std::size_t goal_terminal_count() const;

 private:
  void rebuild_index() const;

  std::size_t capacity_;
  std::size_t write_ = 0;
  std::vector<TransitionRecord> store_;
  mutable bool index_dirty_ = true;
  mutable std::vector<std::size_t> goal_slots_;
  mutable std::vector<std::size_t> other_slots_;
};

/// Binary rollout archive. Layout, little-endian:
///   magic "HROLL1" | u64 record count |
///   per record: goal pose, pose, u8 action, f64 reward, next pose,
///               u8 terminal   (poses as u16 x, u16 y, u8 heading)
/// Frame stacks are reconstructed on load by replaying episodes in file
/// order, so records of one episode must be contiguous.
void save_archive(const std::string& path,
                  const std::vector<TransitionRecord>& records);

/// Loads an archive and rebuilds each record's obs_stack for stack size K.
/// A record starts a new episode when the previous one was terminal, named a
/// different goal, or does not chain into it.
std::vector<TransitionRecord> load_archive(const std::string& path, int frame_stack);

/// Uniform-random rollouts toward one goal. Episodes run to the step cap or
/// the goal; collection cuts off mid-episode once `transitions` are taken.
std::vector<TransitionRecord> collect_random(const RenderCache& cache,
                                             const Goal& goal,
                                             std::size_t transitions,
                                             int step_cap, Rng& rng);

}  // namespace hausr
