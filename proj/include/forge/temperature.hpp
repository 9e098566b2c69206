#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <span>
#include <vector>

namespace forge::temperature {

struct PlateauConfig {
  std::size_t window = 20;
  double epsilon = 0.005;
};

/// True iff the history holds at least `window` entries and the range of the
/// last `window` of them is below `epsilon`.
bool plateau(std::span<const double> history, const PlateauConfig& config);

/// Ring of recent mean rewards feeding `plateau`.
class PlateauDetector {
 public:
  explicit PlateauDetector(PlateauConfig config = {}) : config_(config) {}

  void push(double mean_reward);
  bool fires() const;
  void clear() { history_.clear(); }

  const PlateauConfig& config() const { return config_; }
  std::vector<double> history() const { return {history_.begin(), history_.end()}; }

 private:
  PlateauConfig config_;
  std::deque<double> history_;
};

struct TempSchedule {
  double current = 1.0;
  /// Strictly increasing.
  std::vector<double> candidates;
  /// Held-out validation score per candidate temperature.
  std::map<double, double> eval_scores;
};

/// Picks the largest candidate whose score is at least 99% of the best score,
/// stores it in `schedule.current` and returns it. Throws MissingScores when a
/// candidate has no score and DomainError when candidates are not strictly
/// increasing.
double select_temperature(TempSchedule& schedule);

}  // namespace forge::temperature
