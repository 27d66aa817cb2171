#include "hausr/env.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hausr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFov = kPi / 3.0;  // 60 degree view cone
constexpr double kStepReward = -0.01;
constexpr double kGoalReward = 1.0;

double heading_angle(Heading h) {
  switch (h) {
    case Heading::E: return 0.0;
    case Heading::S: return kPi / 2.0;   // screen coordinates: y grows down
    case Heading::W: return kPi;
    case Heading::N: return -kPi / 2.0;
  }
  return 0.0;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

/// Deterministic hash of small integers into [0, 1).
double hash01(int a, int b, int c) {
  std::uint64_t key = (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 40) ^
                      (static_cast<std::uint64_t>(static_cast<std::uint32_t>(b)) << 20) ^
                      static_cast<std::uint64_t>(static_cast<std::uint32_t>(c));
  return static_cast<double>(mix64(key) >> 11) * 0x1.0p-53;
}

}  // namespace

const char* heading_name(Heading h) {
  switch (h) {
    case Heading::N: return "N";
    case Heading::E: return "E";
    case Heading::S: return "S";
    case Heading::W: return "W";
  }
  return "?";
}

std::optional<Heading> heading_from_name(const std::string& s) {
  if (s == "N") return Heading::N;
  if (s == "E") return Heading::E;
  if (s == "S") return Heading::S;
  if (s == "W") return Heading::W;
  return std::nullopt;
}

const char* action_name(Action a) {
  switch (a) {
    case Action::Forward: return "forward";
    case Action::Backward: return "backward";
    case Action::TurnLeft: return "turn_left";
    case Action::TurnRight: return "turn_right";
  }
  return "?";
}

int GridSpec::free_cell_count() const {
  int n = 0;
  for (std::uint8_t w : walls) n += (w == 0);
  return n;
}

void GridSpec::validate() const {
  if (width < 3 || height < 3)
    throw std::invalid_argument("grid: must be at least 3x3");
  if (walls.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("grid: wall mask size mismatch");
  for (int x = 0; x < width; ++x)
    if (!wall(x, 0) || !wall(x, height - 1))
      throw std::invalid_argument("grid: border cells must be walls");
  for (int y = 0; y < height; ++y)
    if (!wall(0, y) || !wall(width - 1, y))
      throw std::invalid_argument("grid: border cells must be walls");
  if (free_cell_count() < 2)
    throw std::invalid_argument("grid: needs at least 2 free cells");
  if (frame_stack < 1) throw std::invalid_argument("grid: frame stack K must be >= 1");
  if (render_h < 8 || render_w < 8)
    throw std::invalid_argument("grid: render size must be at least 8x8");
}

GridSpec GridSpec::from_text(const std::string& text, int render_h,
                             int render_w, int frame_stack) {
  std::vector<std::string> rows;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    rows.push_back(line);
  }
  if (rows.empty()) throw std::invalid_argument("map: empty");
  GridSpec g;
  g.height = static_cast<int>(rows.size());
  g.width = static_cast<int>(rows[0].size());
  g.render_h = render_h;
  g.render_w = render_w;
  g.frame_stack = frame_stack;
  g.walls.assign(static_cast<std::size_t>(g.width) * g.height, 0);
  for (int y = 0; y < g.height; ++y) {
    if (static_cast<int>(rows[y].size()) != g.width)
      throw std::invalid_argument("map: ragged row " + std::to_string(y));
    for (int x = 0; x < g.width; ++x) {
      const char c = rows[y][static_cast<std::size_t>(x)];
      if (c == '#')
        g.walls[static_cast<std::size_t>(y) * g.width + x] = 1;
      else if (c != '.')
        throw std::invalid_argument(std::string("map: unexpected character '") + c + "'");
    }
  }
  g.validate();
  return g;
}

GridSpec GridSpec::from_file(const std::string& path, int render_h,
                             int render_w, int frame_stack) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("map: cannot open " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return from_text(ss.str(), render_h, render_w, frame_stack);
}

std::vector<Pose> enumerate_states(const GridSpec& grid) {
  std::vector<Pose> out;
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x)
      if (!grid.wall(x, y))
        for (int h = 0; h < 4; ++h)
          out.push_back(Pose{x, y, static_cast<Heading>(h)});
  return out;
}

int pose_index(const GridSpec& grid, const Pose& pose) {
  if (!grid.valid_pose(pose)) return -1;
  int cell = 0;
  for (int y = 0; y < grid.height; ++y)
    for (int x = 0; x < grid.width; ++x) {
      if (grid.wall(x, y)) continue;
      if (x == pose.x && y == pose.y)
        return cell * 4 + static_cast<int>(pose.heading);
      ++cell;
    }
  return -1;
}

Pose step_pose(const GridSpec& grid, Pose pose, Action action) {
  static constexpr int dx[4] = {0, 1, 0, -1};   // N E S W
  static constexpr int dy[4] = {-1, 0, 1, 0};
  const int h = static_cast<int>(pose.heading);
  switch (action) {
    case Action::TurnLeft:
      pose.heading = static_cast<Heading>((h + 3) % 4);
      return pose;
    case Action::TurnRight:
      pose.heading = static_cast<Heading>((h + 1) % 4);
      return pose;
    case Action::Forward:
    case Action::Backward: {
      const int sign = action == Action::Forward ? 1 : -1;
      const int nx = pose.x + sign * dx[h];
      const int ny = pose.y + sign * dy[h];
      if (grid.free_cell(nx, ny)) {
        pose.x = nx;
        pose.y = ny;
      }
      return pose;  // blocked moves are absorbed
    }
  }
  return pose;
}

Tensor render_frame(const GridSpec& grid, const Pose& pose) {
  const int H = grid.render_h, W = grid.render_w;
  Tensor frame({static_cast<std::size_t>(H), static_cast<std::size_t>(W)});
  const double px = pose.x + 0.5, py = pose.y + 0.5;
  const double view = heading_angle(pose.heading);

  for (int col = 0; col < W; ++col) {
    const double offset = kFov * ((col + 0.5) / W - 0.5);
    const double a = view + offset;
    const double dirx = std::cos(a), diry = std::sin(a);

    // DDA over grid cells until a wall is hit. The border is all walls, so
    // the march always terminates.
    int cx = pose.x, cy = pose.y;
    const int stepx = dirx >= 0.0 ? 1 : -1;
    const int stepy = diry >= 0.0 ? 1 : -1;
    const double inv_dx = dirx != 0.0 ? std::abs(1.0 / dirx) : 1e30;
    const double inv_dy = diry != 0.0 ? std::abs(1.0 / diry) : 1e30;
    double tx = (dirx >= 0.0 ? (cx + 1.0 - px) : (px - cx)) * inv_dx;
    double ty = (diry >= 0.0 ? (cy + 1.0 - py) : (py - cy)) * inv_dy;
    double dist = 0.0;
    bool x_face = false;
    while (true) {
      if (tx < ty) {
        dist = tx;
        tx += inv_dx;
        cx += stepx;
        x_face = true;
      } else {
        dist = ty;
        ty += inv_dy;
        cy += stepy;
        x_face = false;
      }
      if (!grid.in_bounds(cx, cy) || grid.wall(cx, cy)) break;
    }

    const double perp = std::max(dist * std::cos(offset), 1e-6);
    int colh = static_cast<int>(static_cast<double>(H) / perp);
    colh = std::clamp(colh, 1, H);
    const int top = (H - colh) / 2;

    // Texture coordinate along the wall face.
    const double hitx = px + dirx * dist, hity = py + diry * dist;
    const double u = x_face ? hity - std::floor(hity) : hitx - std::floor(hitx);
    const int ustripe = static_cast<int>(u * 8.0) & 7;

    const double cell_tone = 0.20 + 0.80 * hash01(cx, cy, ustripe);
    const double face_tone = x_face ? 1.0 : 0.78;
    const double dim = 1.0 / (1.0 + 0.12 * perp);

    for (int row = 0; row < H; ++row) {
      double v;
      if (row < top) {
        v = 0.04 + 0.06 * (static_cast<double>(row) / H);  // ceiling
      } else if (row >= top + colh) {
        // Floor casting: project the pixel onto the ground plane and shade
        // by the floor cell it lands in, so floor pixels carry pose
        // information too.
        const double denom = 2.0 * (row + 1) - H;
        const double floor_dist = denom > 0.0 ? static_cast<double>(H) / denom : 1e6;
        const double along = floor_dist / std::max(std::cos(offset), 1e-6);
        const int fx = static_cast<int>(std::floor(px + dirx * along));
        const int fy = static_cast<int>(std::floor(py + diry * along));
        const double tone = 0.15 + 0.45 * hash01(fx, fy, 9);
        v = tone / (1.0 + 0.25 * floor_dist);
      } else {
        const int vstripe = ((row - top) * 4) / std::max(colh, 1);
        const double fleck = 0.10 * hash01(cx * 7 + vstripe, cy * 13 + ustripe, 5);
        v = cell_tone * face_tone * dim + fleck;
      }
      frame[static_cast<std::size_t>(row) * W + col] = std::clamp(v, 0.0, 1.0);
    }
  }
  return frame;
}

EnvStep env_step(const GridSpec& grid, const Pose& state, Action action,
                 const Pose& goal, int steps_so_far, int cap) {
  if (steps_so_far >= cap)
    throw std::logic_error("env_step: episode already at step cap");
  EnvStep out;
  out.pose = step_pose(grid, state, action);
  if (out.pose == goal) {
    out.reward = kGoalReward;
    out.terminal = true;
    out.by_goal = true;
  } else {
    out.reward = kStepReward;
    out.terminal = steps_so_far + 1 >= cap;
  }
  return out;
}

RenderCache::RenderCache(const GridSpec& grid) : grid_(grid) {
  states_ = enumerate_states(grid_);
  // One frame per free cell x heading; heading-minor order matches
  // pose_index.
  frames_.reserve(states_.size());
  for (const Pose& p : states_) frames_.push_back(render_frame(grid_, p));
}

const Tensor& RenderCache::frame(const Pose& pose) const {
  const int idx = pose_index(grid_, pose);
  if (idx < 0) throw std::invalid_argument("RenderCache: invalid pose");
  return frames_[static_cast<std::size_t>(idx)];
}

Tensor RenderCache::replicated_obs(const Pose& pose) const {
  const Tensor& f = frame(pose);
  const std::size_t K = static_cast<std::size_t>(grid_.frame_stack);
  const std::size_t hw = f.size();
  Tensor obs({K, f.dim(0), f.dim(1)});
  for (std::size_t k = 0; k < K; ++k)
    std::copy(f.data(), f.data() + hw, obs.data() + k * hw);
  return obs;
}

Tensor RenderCache::stacked_obs(const std::vector<Pose>& stack) const {
  const std::size_t K = static_cast<std::size_t>(grid_.frame_stack);
  if (stack.size() != K)
    throw std::invalid_argument("RenderCache: stack must hold K poses");
  const Tensor& f0 = frame(stack[0]);
  const std::size_t hw = f0.size();
  Tensor obs({K, f0.dim(0), f0.dim(1)});
  for (std::size_t k = 0; k < K; ++k) {
    const Tensor& f = frame(stack[k]);
    std::copy(f.data(), f.data() + hw, obs.data() + k * hw);
  }
  return obs;
}

Goal make_goal(const RenderCache& cache, const Pose& pose) {
  if (!cache.grid().valid_pose(pose))
    throw std::invalid_argument("make_goal: pose is not a free cell");
  return Goal{pose, cache.replicated_obs(pose), pose_index(cache.grid(), pose)};
}

Episode::Episode(const RenderCache& cache, Goal goal, int step_cap)
    : cache_(cache), goal_(std::move(goal)), step_cap_(step_cap) {
  if (step_cap_ < 1) throw std::invalid_argument("Episode: step cap must be >= 1");
  if (cache_.grid().free_cell_count() < 2)
    throw std::invalid_argument("Episode: no free non-goal cell available");
}

Tensor Episode::reset(std::optional<Pose> start, Rng& rng) {
  pose_ = start ? *start : random_free_pose(cache_.grid(), rng, goal_.state);
  if (!cache_.grid().valid_pose(pose_))
    throw std::invalid_argument("Episode::reset: invalid start pose");
  stack_.assign(static_cast<std::size_t>(cache_.grid().frame_stack), pose_);
  steps_ = 0;
  return_ = 0.0;
  started_ = true;
  done_ = false;
  return cache_.replicated_obs(pose_);
}

Episode::StepResult Episode::step(Action action) {
  if (!started_) throw std::logic_error("Episode::step: reset() not called");
  if (done_) throw std::logic_error("Episode::step: episode already finished");
  EnvStep s = env_step(cache_.grid(), pose_, action, goal_.state, steps_, step_cap_);
  pose_ = s.pose;
  steps_ += 1;
  return_ += s.reward;
  done_ = s.terminal;
  stack_.erase(stack_.begin());
  stack_.push_back(pose_);
  StepResult out;
  out.obs = cache_.stacked_obs(stack_);
  out.reward = s.reward;
  out.terminal = s.terminal;
  out.by_goal = s.by_goal;
  out.pose = pose_;
  return out;
}

Pose random_free_pose(const GridSpec& grid, Rng& rng, std::optional<Pose> avoid) {
  if (grid.free_cell_count() < (avoid ? 2 : 1))
    throw std::invalid_argument("random_free_pose: no eligible cell");
  while (true) {
    const int x = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(grid.width)));
    const int y = static_cast<int>(rng.uniform_index(static_cast<std::size_t>(grid.height)));
    if (!grid.free_cell(x, y)) continue;
    const Pose p{x, y, static_cast<Heading>(rng.uniform_index(4))};
    if (avoid && p == *avoid) continue;
    return p;
  }
}

}  // namespace hausr
