#pragma once

// The data buffer between rollout workers and the trainer.
//
// Every rollout job is keyed by (policy version, slot). Workers submit one
// resolution per key: an accepted group, or a rejection that still carries the
// group's rewards for bookkeeping. The trainer consumes keys in slot order
// within a version and never skips an unresolved slot, so which groups form a
// batch depends only on the keys, not on worker timing. Only accepted groups
// occupy capacity.

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string_view>
#include <vector>

#include "forge/grpo.hpp"

namespace forge::orchestrator {

enum class SubmitStatus { accepted, rejected_zero_variance, rejected_stale, rejected_filter, full };

std::string_view to_string(SubmitStatus status);

/// Extra admission predicate; returning false rejects the group.
using GroupFilter = std::function<bool(const grpo::Group&)>;

struct BufferOptions {
  std::size_t capacity = 64;
  std::size_t max_lag = 0;
  bool drop_zero_variance = true;
};

struct Batch {
  /// Ordered by (version, slot).
  std::vector<grpo::Group> groups;
  /// Rewards of every non-stale group the batch walked over, accepted or not.
  double reward_sum = 0.0;
  std::size_t reward_count = 0;
  std::uint64_t max_staleness = 0;
};

class DataBuffer {
 public:
  explicit DataBuffer(BufferOptions options);

  void add_filter(GroupFilter filter);

  /// Admits or rejects the group. Returns `full` (and records nothing) when
  /// no capacity is left; the producer is expected to retry.
  SubmitStatus submit(grpo::Group group);

  /// Claims capacity ahead of a rollout. A reserved submit never returns `full`.
  bool try_reserve();
  /// Blocks until capacity is reserved, the stop token fires, or `timeout` passes.
  bool reserve(std::stop_token stop, std::chrono::milliseconds timeout);
  SubmitStatus submit_reserved(grpo::Group group);
  void cancel_reservation();
  /// Resolves a key whose rollout could not be produced.
  void mark_failed(std::uint64_t version, std::uint64_t slot, bool reserved);

  /// Advances the trainer version and drops groups older than version - max_lag.
  void set_current_version(std::uint64_t version);
  std::uint64_t current_version() const;

  std::size_t size() const;
  std::size_t capacity() const { return options_.capacity; }

  /// Takes up to `groups` accepted groups. Ready when that many are committed,
  /// or when all `slots_per_version` keys of the current version are resolved.
  std::optional<Batch> try_take(std::size_t groups, std::size_t slots_per_version);
  /// Blocking form of try_take; returns nullopt once `stop` is requested.
  std::optional<Batch> take(std::size_t groups, std::size_t slots_per_version, std::stop_token stop);

  /// Wakes every waiter (used at shutdown).
  void notify_all();

 private:
  struct Entry {
    std::optional<grpo::Group> group;
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    bool stale = false;
  };
  struct VersionLog {
    std::map<std::uint64_t, Entry> entries;
    std::uint64_t cursor = 0;
  };

  SubmitStatus admit(grpo::Group group);
  std::optional<Batch> try_take_locked(std::size_t groups, std::size_t slots_per_version);
  std::uint64_t oldest_allowed() const;

  BufferOptions options_;
  std::vector<GroupFilter> filters_;
  mutable std::mutex mutex_;
  std::condition_variable_any changed_;
  std::map<std::uint64_t, VersionLog> logs_;
  std::uint64_t current_version_ = 0;
  std::size_t size_ = 0;
  std::size_t reserved_ = 0;
};

}  // namespace forge::orchestrator
