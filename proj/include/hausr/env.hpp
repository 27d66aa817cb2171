#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hausr/rng.hpp"
#include "hausr/tensor.hpp"

namespace hausr {

using nn::Tensor;

enum class Heading : std::uint8_t { N = 0, E = 1, S = 2, W = 3 };
enum class Action : std::uint8_t { Forward = 0, Backward = 1, TurnLeft = 2, TurnRight = 3 };

constexpr int kNumActions = 4;

const char* heading_name(Heading h);
std::optional<Heading> heading_from_name(const std::string& s);
const char* action_name(Action a);

struct Pose {
  int x = 0;
  int y = 0;
  Heading heading = Heading::N;
  bool operator==(const Pose&) const = default;
};

/// Rectangular cell grid with first-person rendering parameters.
/// Border cells are always walls; one cell is one step of travel.
struct GridSpec {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> walls;  // row-major, 1 = wall
  int render_h = 32;
  int render_w = 32;
  int frame_stack = 4;  // K

  bool wall(int x, int y) const { return walls[static_cast<std::size_t>(y) * width + x] != 0; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width && y >= 0 && y < height; }
  bool free_cell(int x, int y) const { return in_bounds(x, y) && !wall(x, y); }
  bool valid_pose(const Pose& p) const { return free_cell(p.x, p.y); }
  int free_cell_count() const;

  /// Throws std::invalid_argument if the border is not all walls, fewer than
  /// two cells are free, K < 1, or the render target is under 8x8.
  void validate() const;

  /// Parses the plain-text map format: one row per line, '#' wall, '.' free.
  static GridSpec from_text(const std::string& text, int render_h = 32,
                            int render_w = 32, int frame_stack = 4);
  static GridSpec from_file(const std::string& path, int render_h = 32,
                            int render_w = 32, int frame_stack = 4);
};

/// All (free cell x heading) poses in stable row-major, heading-minor order.
std::vector<Pose> enumerate_states(const GridSpec& grid);

/// Index of `pose` in enumerate_states order, or -1 if not a valid pose.
int pose_index(const GridSpec& grid, const Pose& pose);

/// One MDP transition. Turns rotate in place; moves into walls are absorbed
/// (pose unchanged). N decreases y, E increases x.
Pose step_pose(const GridSpec& grid, Pose pose, Action action);

/// Deterministic first-person grayscale raycast of the pose's view,
/// shape (H, W), values in [0, 1]. Column height falls off with wall
/// distance; shading mixes a per-cell hash, the hit face and distance, which
/// keeps renders pairwise distinct across poses.
Tensor render_frame(const GridSpec& grid, const Pose& pose);

/// Reward/termination contract for a single step. steps_so_far counts steps
/// already taken; the episode ends at the goal pose (+1) or when the cap is
/// reached (-0.01, flagged separately for bootstrapping).
struct EnvStep {
  Pose pose;
  double reward = 0.0;
  bool terminal = false;
  bool by_goal = false;
};
EnvStep env_step(const GridSpec& grid, const Pose& state, Action action,
                 const Pose& goal, int steps_so_far, int cap);

/// Precomputed frames for every valid pose of one grid. Immutable after
/// construction, so concurrent reads from workers are safe.
class RenderCache {
 public:
  explicit RenderCache(const GridSpec& grid);

  const GridSpec& grid() const { return grid_; }
  const Tensor& frame(const Pose& pose) const;

  /// The K-replicated frame stack used for goal images and episode starts.
  Tensor replicated_obs(const Pose& pose) const;

  /// Stack of K frames, oldest first. `stack` must have exactly K poses.
  Tensor stacked_obs(const std::vector<Pose>& stack) const;

 private:
  GridSpec grid_;
  std::vector<Pose> states_;
  std::vector<Tensor> frames_;
};

/// A goal pose plus its image (the frame replicated across all K slots).
/// `id` is the pose's enumerate_states index.
struct Goal {
  Pose state;
  Tensor image;
  int id = -1;
};
Goal make_goal(const RenderCache& cache, const Pose& pose);

/// Goal-conditioned episode over one grid. Single-threaded; each worker owns
/// a private instance.
class Episode {
 public:
  Episode(const RenderCache& cache, Goal goal, int step_cap);

  /// Starts an episode. With no fixed start, draws a free pose != goal
  /// (redrawing as needed). Returns the initial observation: the start frame
  /// replicated K times.
  Tensor reset(std::optional<Pose> start, Rng& rng);

  struct StepResult {
    Tensor obs;       // (K, H, W), frames[K-1] most recent
    double reward = 0.0;
    bool terminal = false;
    bool by_goal = false;
    Pose pose;
  };
  /// Throws std::logic_error if the episode is already finished.
  StepResult step(Action action);

  const Goal& goal() const { return goal_; }
  const Pose& pose() const { return pose_; }
  int steps() const { return steps_; }
  int step_cap() const { return step_cap_; }
  bool started() const { return started_; }
  bool done() const { return done_; }
  double episode_return() const { return return_; }
  /// Poses backing the current frame stack, oldest first (K entries).
  const std::vector<Pose>& stack_poses() const { return stack_; }

 private:
  const RenderCache& cache_;
  Goal goal_;
  int step_cap_;
  Pose pose_;
  std::vector<Pose> stack_;
  int steps_ = 0;
  double return_ = 0.0;
  bool started_ = false;
  bool done_ = false;
};

/// Draws a uniformly random free pose distinct from `avoid`.
Pose random_free_pose(const GridSpec& grid, Rng& rng,
                      std::optional<Pose> avoid = std::nullopt);

}  // namespace hausr
