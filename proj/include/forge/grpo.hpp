#pragma once

// Group-relative policy gradient without a KL term and without ratio clipping.
//
// For a group of K traces with rewards r_i, the advantage is A_i = r_i - mean(r)
// and l_i is the summed log-probability of trace i's model tokens M_i.
//   sequence_mean:  loss = -(1/K) * sum_i A_i * l_i / |M_i|
//   token_weighted: loss = -(1/sum_i |M_i|) * sum_i A_i * l_i
// Environment tokens never contribute.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "forge/policy.hpp"
#include "forge/trajectory.hpp"

namespace forge::grpo {

enum class LossMode { token_weighted, sequence_mean };

std::string_view to_string(LossMode mode);
LossMode loss_mode_from_string(std::string_view name);

struct Group {
  TaskId task;
  std::vector<Trajectory> trajectories;
  std::vector<double> rewards;
  std::uint64_t policy_version = 0;
  /// Rollout slot within its version; orders groups deterministically.
  std::uint64_t slot = 0;
  double temperature = 1.0;
};

struct AdvantageOptions {
  /// Divide by the group's reward standard deviation (classic GRPO). Off by default.
  bool normalize_std = false;
  double std_epsilon = 1e-6;
};

/// A_i = r_i - mean(r). Throws EmptyGroup on an empty input.
std::vector<double> group_advantages(std::span<const double> rewards, const AdvantageOptions& options = {});

/// True exactly on model-origin tokens.
TokenMask mask_model_tokens(const Trajectory& trace);

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Exact loss and analytic gradient at `policy` (and its temperature).
/// Throws EmptyGroup for K == 0 and EmptyMask when a trace has no model tokens.
LossAndGradient loss_and_gradient(const Group& group, const TabularPolicy& policy, LossMode mode,
                                  const AdvantageOptions& options = {});

/// Loss only, for finite-difference checks.
double loss_value(const Group& group, const TabularPolicy& policy, LossMode mode,
                  const AdvantageOptions& options = {});

}  // namespace forge::grpo
