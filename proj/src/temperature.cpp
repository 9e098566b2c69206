#include "forge/temperature.hpp"

#include <algorithm>
#include <string>

#include "forge/error.hpp"

namespace forge::temperature {

namespace {
constexpr double kMaxRelativeDrop = 0.01;
}

bool plateau(std::span<const double> history, const PlateauConfig& config) {
  if (config.window == 0 || history.size() < config.window) return false;
  const auto recent = history.last(config.window);
  const auto [lo, hi] = std::minmax_element(recent.begin(), recent.end());
  return *hi - *lo < config.epsilon;
}

void PlateauDetector::push(double mean_reward) {
  history_.push_back(mean_reward);
  while (history_.size() > config_.window) history_.pop_front();
}

bool PlateauDetector::fires() const {
  const std::vector<double> h(history_.begin(), history_.end());
  return plateau(h, config_);
}

double select_temperature(TempSchedule& schedule) {
  if (schedule.candidates.empty()) throw MissingScores("no candidate temperatures");
  for (std::size_t i = 1; i < schedule.candidates.size(); ++i) {
    if (!(schedule.candidates[i - 1] < schedule.candidates[i]))
      throw DomainError("candidate temperatures must be strictly increasing");
  }
  double best = 0.0;
  bool first = true;
  for (double t : schedule.candidates) {
    auto it = schedule.eval_scores.find(t);
    if (it == schedule.eval_scores.end())
      throw MissingScores("no validation score for temperature " + std::to_string(t));
    best = first ? it->second : std::max(best, it->second);
    first = false;
  }
  const double cutoff = (1.0 - kMaxRelativeDrop) * best;
  for (auto t = schedule.candidates.rbegin(); t != schedule.candidates.rend(); ++t) {
    if (schedule.eval_scores.at(*t) >= cutoff) {
      schedule.current = *t;
      break;
    }
  }
  return schedule.current;
}

}  // namespace forge::temperature
