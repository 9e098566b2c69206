#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "forge/rng.hpp"
#include "forge/trajectory.hpp"

namespace forge {

/// Tabular softmax policy: pi(a|s) = softmax(theta[s] / temperature)[a].
/// Parameters are stored row-major, one row of `num_actions` logits per state.
class TabularPolicy {
 public:
  TabularPolicy(std::size_t num_states, std::size_t num_actions, double temperature = 1.0);
  TabularPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> params,
                double temperature = 1.0);

  std::size_t num_states() const { return num_states_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t size() const { return params_.size(); }

  double temperature() const { return temperature_; }
  void set_temperature(double temperature);

  std::span<const double> params() const { return params_; }
  std::span<double> mutable_params() { return params_; }
  std::span<const double> row(std::size_t state) const;

  std::vector<double> probabilities(std::size_t state) const;
  double log_prob(std::size_t state, std::size_t action) const;

  std::size_t sample(std::size_t state, Rng& rng) const;
  /// Highest-logit action; ties go to the lowest index.
  std::size_t greedy(std::size_t state) const;

  /// grad += scale * d log pi(action|state) / d theta.
  void accumulate_grad_log_prob(std::size_t state, std::size_t action, double scale, std::span<double> grad) const;

 private:
  std::size_t num_states_;
  std::size_t num_actions_;
  double temperature_;
  std::vector<double> params_;
};

using TokenMask = std::vector<bool>;

/// Sum over masked model tokens of (onehot(a) - pi(.|s)) / temperature,
/// placed in each token's state row.
std::vector<double> grad_log_prob(const TabularPolicy& policy, const Trajectory& trace, const TokenMask& mask);

/// Sum of log pi over the masked tokens.
double masked_log_prob(const TabularPolicy& policy, const Trajectory& trace, const TokenMask& mask);

}  // namespace forge
