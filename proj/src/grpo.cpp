#include "forge/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "forge/error.hpp"

namespace forge::grpo {

namespace {

// Per-trace weight w_i such that loss = -sum_i w_i * l_i.
std::vector<double> trace_weights(const Group& group, LossMode mode, const AdvantageOptions& options,
                                  std::vector<TokenMask>& masks) {
  const std::size_t k = group.trajectories.size();
  if (k == 0) throw EmptyGroup();
  const auto advantages = group_advantages(group.rewards, options);
  masks.clear();
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < k; ++i) {
    masks.push_back(mask_model_tokens(group.trajectories[i]));
    counts.push_back(static_cast<std::size_t>(std::count(masks.back().begin(), masks.back().end(), true)));
    if (counts.back() == 0) throw EmptyMask(i);
  }
  std::vector<double> w(k);
  if (mode == LossMode::sequence_mean) {
    for (std::size_t i = 0; i < k; ++i) w[i] = advantages[i] / static_cast<double>(counts[i]) / static_cast<double>(k);
  } else {
    const auto total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
    for (std::size_t i = 0; i < k; ++i) w[i] = advantages[i] / total;
  }
  return w;
}

}  // namespace

std::string_view to_string(LossMode mode) {
  return mode == LossMode::token_weighted ? "token_weighted" : "sequence_mean";
}

LossMode loss_mode_from_string(std::string_view name) {
  if (name == "token_weighted") return LossMode::token_weighted;
  if (name == "sequence_mean") return LossMode::sequence_mean;
  throw DomainError("unknown loss mode '" + std::string(name) + "'");
}

std::vector<double> group_advantages(std::span<const double> rewards, const AdvantageOptions& options) {
  if (rewards.empty()) throw EmptyGroup();
  const double n = static_cast<double>(rewards.size());
  const double mean = std::accumulate(rewards.begin(), rewards.end(), 0.0) / n;
  std::vector<double> a(rewards.size());
  for (std::size_t i = 0; i < rewards.size(); ++i) a[i] = rewards[i] - mean;
  if (options.normalize_std) {
    double var = 0.0;
    for (double x : a) var += x * x;
    const double sd = std::sqrt(var / n);
    for (double& x : a) x /= sd + options.std_epsilon;
  }
  return a;
}

TokenMask mask_model_tokens(const Trajectory& trace) {
  TokenMask mask(trace.tokens.size());
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) mask[i] = trace.tokens[i].origin == Origin::model;
  return mask;
}

LossAndGradient loss_and_gradient(const Group& group, const TabularPolicy& policy, LossMode mode,
                                  const AdvantageOptions& options) {
  std::vector<TokenMask> masks;
  const auto w = trace_weights(group, mode, options, masks);
  LossAndGradient out{0.0, std::vector<double>(policy.size(), 0.0)};
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] == 0.0) continue;
    const auto& trace = group.trajectories[i];
    for (std::size_t t = 0; t < trace.tokens.size(); ++t) {
      if (!masks[i][t]) continue;
      const auto& tok = trace.tokens[t];
      out.loss -= w[i] * policy.log_prob(tok.state, tok.symbol);
      policy.accumulate_grad_log_prob(tok.state, tok.symbol, -w[i], out.gradient);
    }
  }
  return out;
}

double loss_value(const Group& group, const TabularPolicy& policy, LossMode mode, const AdvantageOptions& options) {
  std::vector<TokenMask> masks;
  const auto w = trace_weights(group, mode, options, masks);
  double loss = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) loss -= w[i] * masked_log_prob(policy, group.trajectories[i], masks[i]);
  return loss;
}

}  // namespace forge::grpo
