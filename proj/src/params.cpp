#include "hausr/params.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <stdexcept>

namespace hausr::nn {

Tensor& GradMap::accum(const std::string& name,
                       const std::vector<std::size_t>& shape) {
  auto it = entries_.find(name);
  if (it == entries_.end())
    it = entries_.emplace(name, Tensor(shape)).first;
  else if (it->second.shape() != shape)
    throw std::invalid_argument("GradMap::accum: shape mismatch for " + name);
  return it->second;
}

void GradMap::zero_all() {
  for (auto& [name, t] : entries_) t.zero();
}

bool GradMap::all_finite() const {
  for (const auto& [name, t] : entries_)
    if (!t.all_finite()) return false;
  return true;
}

void GradMap::add_scaled(const GradMap& other, Scalar a) {
  for (const auto& [name, t] : other.entries())
    accum(name, t.shape()).add_scaled(t, a);
}

void ParamSet::create(const std::string& name, Tensor init) {
  std::unique_lock lock(mu_);
  if (entries_.count(name))
    throw std::invalid_argument("ParamSet::create: duplicate name " + name);
  entries_.emplace(name, std::move(init));
  if (checked_) last_checksum_ = checksum_locked();
}

bool ParamSet::contains(const std::string& name) const {
  std::shared_lock lock(mu_);
  return entries_.count(name) != 0;
}

std::size_t ParamSet::total_elements() const {
  std::shared_lock lock(mu_);
  std::size_t n = 0;
  for (const auto& [name, t] : entries_) n += t.size();
  return n;
}

Snapshot ParamSet::snapshot() const {
  std::shared_lock lock(mu_);
  return Snapshot{entries_, version_.load(std::memory_order_relaxed)};
}

std::vector<std::string> ParamSet::names() const {
  std::shared_lock lock(mu_);
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, t] : entries_) out.push_back(name);
  return out;
}

void ParamSet::apply_update(GradMap& grads, OptimizerState& opt) {
  std::unique_lock lock(mu_);
  if (!grads.all_finite())
    throw std::runtime_error("apply_update: non-finite gradient, update rejected");
  for (const auto& [name, g] : grads.entries())
    if (!entries_.count(name))
      throw std::invalid_argument("apply_update: gradient for unknown parameter " + name);

  if (checked_ && last_checksum_ != checksum_locked())
    throw std::runtime_error("apply_update: parameter checksum mismatch (torn write?)");

  const OptimizerConfig& cfg = opt.config();
  for (auto& [name, theta] : entries_) {
    auto git = grads.entries().find(name);
    const Tensor* g = git == grads.entries().end() ? nullptr : &git->second;
    if (cfg.algo == OptimizerConfig::Algo::Sgd) {
      if (g) theta.add_scaled(*g, -cfg.learning_rate);
      continue;
    }
    auto ait = opt.acc_.find(name);
    if (ait == opt.acc_.end())
      ait = opt.acc_.emplace(name, Tensor(theta.shape())).first;
    Tensor& acc = ait->second;
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const Scalar gi = g ? (*g)[i] : 0.0;
      acc[i] = cfg.decay * acc[i] + (1.0 - cfg.decay) * gi * gi;
      theta[i] -= cfg.learning_rate * gi / std::sqrt(acc[i] + cfg.epsilon);
    }
  }
  grads.zero_all();
  version_.fetch_add(1, std::memory_order_release);
  if (checked_) last_checksum_ = checksum_locked();
}

void ParamSet::load_values(const NamedTensors& values, std::uint64_t version) {
  std::unique_lock lock(mu_);
  for (const auto& [name, t] : values) {
    auto it = entries_.find(name);
    if (it == entries_.end())
      entries_.emplace(name, t);
    else if (it->second.shape() != t.shape())
      throw std::invalid_argument("ParamSet::load_values: shape mismatch for " + name);
    else
      it->second = t;
  }
  version_.store(version, std::memory_order_release);
  if (checked_) last_checksum_ = checksum_locked();
}

void ParamSet::set_checked(bool on) {
  std::unique_lock lock(mu_);
  checked_ = on;
  if (on) last_checksum_ = checksum_locked();
}

std::uint64_t ParamSet::checksum_locked() const {
  // FNV-1a over the raw bit patterns of every tensor, in name order.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& [name, t] : entries_) {
    for (std::size_t i = 0; i < t.size(); ++i) {
      const Scalar v = t[i];
      std::uint64_t bits;
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xff;
        h *= 0x100000001b3ull;
      }
    }
  }
  return h;
}

}  // namespace hausr::nn
