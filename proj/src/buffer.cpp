#include "forge/buffer.hpp"

#include <algorithm>
#include <numeric>

namespace forge::orchestrator {

namespace {

bool zero_variance(const grpo::Group& g) {
  return std::all_of(g.rewards.begin(), g.rewards.end(), [&](double r) { return r == g.rewards.front(); });
}

}  // namespace

std::string_view to_string(SubmitStatus status) {
  switch (status) {
    case SubmitStatus::accepted: return "accepted";
    case SubmitStatus::rejected_zero_variance: return "rejected_zero_variance";
    case SubmitStatus::rejected_stale: return "rejected_stale";
    case SubmitStatus::rejected_filter: return "rejected_filter";
    case SubmitStatus::full: return "full";
  }
  return "unknown";
}

DataBuffer::DataBuffer(BufferOptions options) : options_(options) {}

void DataBuffer::add_filter(GroupFilter filter) {
  std::lock_guard lock(mutex_);
  filters_.push_back(std::move(filter));
}

std::uint64_t DataBuffer::oldest_allowed() const {
  return current_version_ >= options_.max_lag ? current_version_ - options_.max_lag : 0;
}

SubmitStatus DataBuffer::admit(grpo::Group group) {
  Entry entry;
  entry.reward_sum = std::accumulate(group.rewards.begin(), group.rewards.end(), 0.0);
  entry.reward_count = group.rewards.size();
  SubmitStatus status = SubmitStatus::accepted;
  if (group.policy_version < oldest_allowed()) {
    status = SubmitStatus::rejected_stale;
    entry.stale = true;
  } else if (options_.drop_zero_variance && !group.rewards.empty() && zero_variance(group)) {
    status = SubmitStatus::rejected_zero_variance;
  } else if (std::any_of(filters_.begin(), filters_.end(), [&](const GroupFilter& f) { return !f(group); })) {
    status = SubmitStatus::rejected_filter;
  }
  const auto version = group.policy_version;
  const auto slot = group.slot;
  if (status == SubmitStatus::accepted) {
    entry.group = std::move(group);
    ++size_;
  }
  if (!entry.stale) logs_[version].entries[slot] = std::move(entry);
  changed_.notify_all();
  return status;
}

SubmitStatus DataBuffer::submit(grpo::Group group) {
  std::lock_guard lock(mutex_);
  if (size_ + reserved_ >= options_.capacity) return SubmitStatus::full;
  return admit(std::move(group));
}

bool DataBuffer::try_reserve() {
  std::lock_guard lock(mutex_);
  if (size_ + reserved_ >= options_.capacity) return false;
  ++reserved_;
  return true;
}

bool DataBuffer::reserve(std::stop_token stop, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  const bool ok = changed_.wait_for(lock, stop, timeout, [&] { return size_ + reserved_ < options_.capacity; });
  if (!ok) return false;
  ++reserved_;
  return true;
}

SubmitStatus DataBuffer::submit_reserved(grpo::Group group) {
  std::lock_guard lock(mutex_);
  if (reserved_ > 0) --reserved_;
  return admit(std::move(group));
}

void DataBuffer::cancel_reservation() {
  std::lock_guard lock(mutex_);
  if (reserved_ > 0) --reserved_;
  changed_.notify_all();
}

void DataBuffer::mark_failed(std::uint64_t version, std::uint64_t slot, bool reserved) {
  std::lock_guard lock(mutex_);
  if (reserved && reserved_ > 0) --reserved_;
  if (version >= oldest_allowed()) logs_[version].entries[slot] = Entry{};
  changed_.notify_all();
}

void DataBuffer::set_current_version(std::uint64_t version) {
  std::lock_guard lock(mutex_);
  current_version_ = version;
  const auto oldest = oldest_allowed();
  for (auto it = logs_.begin(); it != logs_.end() && it->first < oldest;) {
    for (const auto& [slot, e] : it->second.entries)
      if (e.group) --size_;
    it = logs_.erase(it);
  }
  changed_.notify_all();
}

std::uint64_t DataBuffer::current_version() const {
  std::lock_guard lock(mutex_);
  return current_version_;
}

std::size_t DataBuffer::size() const {
  std::lock_guard lock(mutex_);
  return size_;
}

std::optional<Batch> DataBuffer::try_take_locked(std::size_t groups, std::size_t slots_per_version) {
  struct Pick {
    VersionLog* log;
    std::uint64_t cursor;
  };
  std::vector<Pick> picks;
  std::vector<std::pair<VersionLog*, std::uint64_t>> taken;
  Batch batch;
  std::size_t count = 0;
  bool current_exhausted = false;
  for (auto it = logs_.lower_bound(oldest_allowed()); it != logs_.end() && it->first <= current_version_; ++it) {
    auto& log = it->second;
    auto cursor = log.cursor;
    while (count < groups && cursor < slots_per_version) {
      auto e = log.entries.find(cursor);
      if (e == log.entries.end()) break;
      batch.reward_sum += e->second.reward_sum;
      batch.reward_count += e->second.reward_count;
      if (e->second.group) {
        taken.emplace_back(&log, cursor);
        ++count;
      }
      ++cursor;
    }
    picks.push_back({&log, cursor});
    if (it->first == current_version_ && cursor >= slots_per_version) current_exhausted = true;
    if (count == groups) break;
  }
  if (count < groups && !current_exhausted) return std::nullopt;

  for (auto& [log, slot] : taken) {
    auto& g = *log->entries.at(slot).group;
    batch.max_staleness = std::max(batch.max_staleness, current_version_ - g.policy_version);
    batch.groups.push_back(std::move(g));
    --size_;
  }
  for (auto& p : picks) {
    p.log->entries.erase(p.log->entries.begin(), p.log->entries.lower_bound(p.cursor));
    p.log->cursor = p.cursor;
  }
  changed_.notify_all();
  return batch;
}

std::optional<Batch> DataBuffer::try_take(std::size_t groups, std::size_t slots_per_version) {
  std::lock_guard lock(mutex_);
  return try_take_locked(groups, slots_per_version);
}

std::optional<Batch> DataBuffer::take(std::size_t groups, std::size_t slots_per_version, std::stop_token stop) {
  std::unique_lock lock(mutex_);
  std::optional<Batch> batch;
  changed_.wait(lock, stop, [&] {
    batch = try_take_locked(groups, slots_per_version);
    return batch.has_value();
  });
  return batch;
}

void DataBuffer::notify_all() {
  std::lock_guard lock(mutex_);
  changed_.notify_all();
}

}  // namespace forge::orchestrator
