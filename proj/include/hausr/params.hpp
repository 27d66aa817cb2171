#pragma once

#include <atomic>
#include <cstdint>
#include <shared_mutex>
#include <string>
#include <vector>

#include "hausr/tensor.hpp"

namespace hausr::nn {

/// Gradient accumulator keyed by parameter name. backward() calls += into
/// entries; apply_update consumes and zeroes them.
class GradMap {
 public:
  /// Returns the accumulator for `name`, creating a zero tensor on first use.
  Tensor& accum(const std::string& name, const std::vector<std::size_t>& shape);

  const NamedTensors& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  void zero_all();
  void clear() { entries_.clear(); }
  bool all_finite() const;

  /// this += a * other, matching entries by name (missing entries created).
  void add_scaled(const GradMap& other, Scalar a);

 private:
  NamedTensors entries_;
};

struct OptimizerConfig {
  enum class Algo { RmsProp, Sgd };
  Algo algo = Algo::RmsProp;
  double learning_rate = 7e-4;
  double decay = 0.99;   // accumulator decay rho
  double epsilon = 1e-5;
};

/// Per-parameter squared-gradient accumulators for the shared-statistics
/// RMSProp rule. Mutated only inside ParamSet::apply_update, under the same
/// lock that serializes parameter writes.
class OptimizerState {
 public:
  explicit OptimizerState(OptimizerConfig cfg = {}) : cfg_(cfg) {}

  const OptimizerConfig& config() const { return cfg_; }
  OptimizerConfig& config() { return cfg_; }
  const NamedTensors& accumulators() const { return acc_; }

 private:
  friend class ParamSet;
  OptimizerConfig cfg_;
  NamedTensors acc_;
};

/// A consistent copy of a ParamSet taken at one version.
struct Snapshot {
  NamedTensors values;
  std::uint64_t version = 0;
};

/// Versioned named-tensor store shared by asynchronous workers.
/// Readers copy a consistent snapshot; apply_update calls are mutually
/// exclusive and are the only mutation path once training starts.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;

  /// Registers a parameter. Names are unique and shapes immutable afterwards.
  /// Creation does not bump the version.
  void create(const std::string& name, Tensor init);

  bool contains(const std::string& name) const;
  std::uint64_t version() const { return version_.load(std::memory_order_acquire); }
  std::size_t total_elements() const;

  Snapshot snapshot() const;
  NamedTensors copy_values() const { return snapshot().values; }
  std::vector<std::string> names() const;

  /// RMSProp-style update: acc <- rho*acc + (1-rho)*g^2, theta <- theta -
  /// lr*g / sqrt(acc+eps). Grads with no entry for a parameter are treated as
  /// zero. Increments the version exactly once and zeroes `grads`.
  /// Throws on non-finite gradients (update rejected, params untouched).
  void apply_update(GradMap& grads, OptimizerState& opt);

  /// Overwrites values (checkpoint restore). Shapes must match if the name
  /// already exists; new names are created.
  void load_values(const NamedTensors& values, std::uint64_t version);

  /// Torn-write detection: verify a checksum of all parameter bytes before
  /// every update and refresh it after. Any mutation that bypassed
  /// apply_update surfaces as a checksum mismatch.
  void set_checked(bool on);

 private:
  std::uint64_t checksum_locked() const;

  mutable std::shared_mutex mu_;
  NamedTensors entries_;
  std::atomic<std::uint64_t> version_{0};
  bool checked_ = false;
  std::uint64_t last_checksum_ = 0;
};

}  // namespace hausr::nn
