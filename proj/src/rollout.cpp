#include "hausr/rollout.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hausr {

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: zero capacity");
  store_.reserve(capacity_);
}

void ReplayBuffer::push(TransitionRecord rec) {
  if (store_.size() < capacity_) {
    store_.push_back(std::move(rec));
  } else {
    store_[write_] = std::move(rec);
    write_ = (write_ + 1) % capacity_;
  }
  index_dirty_ = true;
}

void ReplayBuffer::rebuild_index() const {
  goal_slots_.clear();
  other_slots_.clear();
  for (std::size_t i = 0; i < store_.size(); ++i)
    (store_[i].by_goal ? goal_slots_ : other_slots_).push_back(i);
  index_dirty_ = false;
}

std::size_t ReplayBuffer::goal_terminal_count() const {
  if (index_dirty_) rebuild_index();
  return goal_slots_.size();
}

std::vector<const TransitionRecord*> ReplayBuffer::sample_uniform(std::size_t n,
                                                                  Rng& rng) const {
  if (store_.empty()) throw std::logic_error("ReplayBuffer: empty");
  std::vector<const TransitionRecord*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(&store_[rng.uniform_index(store_.size())]);
  return out;
}

std::vector<const TransitionRecord*> ReplayBuffer::sample_balanced(std::size_t n,
                                                                   Rng& rng) const {
  if (index_dirty_) rebuild_index();
  if (goal_slots_.empty() || other_slots_.empty()) return sample_uniform(n, rng);
  std::vector<const TransitionRecord*> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& slots = (i % 2 == 0) ? goal_slots_ : other_slots_;
    out.push_back(&store_[slots[rng.uniform_index(slots.size())]]);
  }
  return out;
}

namespace {

constexpr char kMagic[6] = {'H', 'R', 'O', 'L', 'L', '1'};

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}
void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_pose(std::string& out, const Pose& p) {
  put_u16(out, static_cast<std::uint16_t>(p.x));
  put_u16(out, static_cast<std::uint16_t>(p.y));
  out.push_back(static_cast<char>(p.heading));
}

struct Cursor {
  const std::string& buf;
  const std::string& path;
  std::size_t pos = 0;

  void need(std::size_t n) const {
    if (pos + n > buf.size())
      throw std::runtime_error("archive " + path + ": truncated file");
  }
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(buf[pos++]);
  }
  std::uint16_t u16() {
    need(2);
    std::uint16_t v = static_cast<std::uint16_t>(
        static_cast<unsigned char>(buf[pos]) |
        (static_cast<unsigned char>(buf[pos + 1]) << 8));
    pos += 2;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  double f64() {
    std::uint64_t bits = u64();
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
  }
  Pose pose() {
    Pose p;
    p.x = u16();
    p.y = u16();
    const std::uint8_t h = u8();
    if (h > 3) throw std::runtime_error("archive " + path + ": bad heading");
    p.heading = static_cast<Heading>(h);
    return p;
  }
};

}  // namespace

void save_archive(const std::string& path,
                  const std::vector<TransitionRecord>& records) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u64(out, records.size());
  for (const TransitionRecord& r : records) {
    put_pose(out, r.goal);
    put_pose(out, r.pose);
    out.push_back(static_cast<char>(r.action));
    std::uint64_t bits;
    std::memcpy(&bits, &r.reward, sizeof bits);
    put_u64(out, bits);
    put_pose(out, r.next_pose);
    out.push_back(static_cast<char>(r.terminal ? 1 : 0));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("archive: cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw std::runtime_error("archive: short write to " + path);
}

std::vector<TransitionRecord> load_archive(const std::string& path,
                                           int frame_stack) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("archive: cannot open " + path);
  std::string buf((std::istreambuf_iterator<char>(f)),
                  std::istreambuf_iterator<char>());
  Cursor c{buf, path};
  c.need(sizeof kMagic);
  if (std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("archive " + path + ": bad magic");
  c.pos = sizeof kMagic;

  const std::uint64_t count = c.u64();
  std::vector<TransitionRecord> out;
  out.reserve(count);
  std::vector<Pose> stack;
  for (std::uint64_t i = 0; i < count; ++i) {
    TransitionRecord r;
    r.goal = c.pose();
    r.pose = c.pose();
    const std::uint8_t a = c.u8();
    if (a > 3) throw std::runtime_error("archive " + path + ": bad action");
    r.action = static_cast<Action>(a);
    r.reward = c.f64();
    r.next_pose = c.pose();
    r.terminal = c.u8() != 0;
    r.by_goal = r.terminal && r.reward > 0.0;

    const bool fresh = out.empty() || out.back().terminal ||
                       !(out.back().goal == r.goal) ||
                       !(out.back().next_pose == r.pose);
    if (fresh)
      stack.assign(static_cast<std::size_t>(frame_stack), r.pose);
    else {
      stack.erase(stack.begin());
      stack.push_back(r.pose);
    }
    r.obs_stack = stack;
    out.push_back(std::move(r));
  }
  if (c.pos != buf.size())
    throw std::runtime_error("archive " + path + ": trailing bytes");
  return out;
}

std::vector<TransitionRecord> collect_random(const RenderCache& cache,
                                             const Goal& goal,
                                             std::size_t transitions,
                                             int step_cap, Rng& rng) {
  std::vector<TransitionRecord> out;
  out.reserve(transitions);
  Episode ep(cache, goal, step_cap);
  while (out.size() < transitions) {
    ep.reset(std::nullopt, rng);
    while (!ep.done() && out.size() < transitions) {
      TransitionRecord r;
      r.goal = goal.state;
      r.obs_stack = ep.stack_poses();
      r.pose = ep.pose();
      r.action = static_cast<Action>(rng.uniform_index(kNumActions));
      auto s = ep.step(r.action);
      r.reward = s.reward;
      r.next_pose = s.pose;
      r.terminal = s.terminal;
      r.by_goal = s.by_goal;
      out.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace hausr
