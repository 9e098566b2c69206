#include "forge/curriculum.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "forge/error.hpp"

namespace forge::curriculum {

double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
  if (c > n || k < 1 || k > n)
    throw DomainError("pass@k needs 0 <= c <= n and 1 <= k <= n (n=" + std::to_string(n) +
                      ", c=" + std::to_string(c) + ", k=" + std::to_string(k) + ")");
  if (c == 0) return 0.0;
  if (n - c < k) return 1.0;
  // C(n-c, k) / C(n, k) = prod_{i<k} (1 - c / (n - i))
  double log_miss = 0.0;
  for (std::size_t i = 0; i < k; ++i)
    log_miss += std::log1p(-static_cast<double>(c) / static_cast<double>(n - i));
  return -std::expm1(log_miss);
}

DifficultyRecord make_record(TaskId task, std::size_t n, std::size_t c, bool verified, bool oracle_solvable,
                             std::span<const std::size_t> ks) {
  DifficultyRecord r{std::move(task), n, c, {}, verified, oracle_solvable};
  for (auto k : ks)
    if (k >= 1 && k <= n) r.pass_at[k] = pass_at_k(n, c, k);
  return r;
}

nlohmann::json to_json(const DifficultyRecord& r) {
  nlohmann::json pass = nlohmann::json::object();
  for (const auto& [k, v] : r.pass_at) pass[std::to_string(k)] = v;
  return {{"task", r.task},
          {"n_samples", r.n_samples},
          {"n_correct", r.n_correct},
          {"pass_at", std::move(pass)},
          {"answer_verified", r.answer_verified},
          {"oracle_solvable", r.oracle_solvable}};
}

std::string_view to_string(Difficulty d) {
  switch (d) {
    case Difficulty::too_easy: return "too_easy";
    case Difficulty::moderate: return "moderate";
    case Difficulty::extreme: return "extreme";
    case Difficulty::unusable: return "unusable";
  }
  return "unknown";
}

std::string_view to_string(Stage s) { return s == Stage::one ? "one" : "two"; }

Difficulty classify(const DifficultyRecord& r, const Thresholds& t) {
  if (r.n_samples < t.min_samples)
    throw InsufficientSamples("task " + r.task + " has " + std::to_string(r.n_samples) + " samples, need " +
                              std::to_string(t.min_samples));
  if (!r.answer_verified) return Difficulty::unusable;
  auto estimate = [&](std::size_t k) {
    auto it = r.pass_at.find(k);
    return it != r.pass_at.end() ? it->second : pass_at_k(r.n_samples, r.n_correct, std::min(k, r.n_samples));
  };
  const double probe = estimate(t.probe_k);
  const bool deep_positive = r.oracle_solvable || (r.n_samples >= t.deep_k && estimate(t.deep_k) > 0.0);
  if (probe == 0.0 && deep_positive) return Difficulty::extreme;
  if (probe > t.easy) return Difficulty::too_easy;
  return Difficulty::moderate;
}

CurriculumState build_state(std::span<const DifficultyRecord> records, const Thresholds& thresholds) {
  CurriculumState s;
  for (const auto& r : records) {
    switch (classify(r, thresholds)) {
      case Difficulty::moderate: s.stage1_pool.push_back(r.task); break;
      case Difficulty::extreme: s.stage2_pool.push_back(r.task); break;
      default: break;
    }
  }
  return s;
}

CurriculumState maybe_switch(const CurriculumState& state, std::span<const double> reward_history, std::size_t step,
                             const SwitchPolicy& policy) {
  if (state.stage == Stage::two || state.stage2_pool.empty()) return state;
  const bool fire = policy.trigger == SwitchTrigger::plateau ? temperature::plateau(reward_history, policy.plateau)
                                                             : step >= policy.fixed_step;
  if (!fire) return state;
  CurriculumState next = state;
  next.stage = Stage::two;
  next.switch_step = step;
  return next;
}

}  // namespace forge::curriculum
