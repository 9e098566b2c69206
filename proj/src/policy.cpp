#include "forge/policy.hpp"

#include <algorithm>
#include <cmath>

#include "forge/error.hpp"

namespace forge {

namespace {

void softmax_into(std::span<const double> logits, double temperature, std::vector<double>& out) {
  out.resize(logits.size());
  const double top = *std::max_element(logits.begin(), logits.end()) / temperature;
  double total = 0.0;
  for (std::size_t a = 0; a < logits.size(); ++a) {
    out[a] = std::exp(logits[a] / temperature - top);
    total += out[a];
  }
  for (auto& p : out) p /= total;
}

}  // namespace

TabularPolicy::TabularPolicy(std::size_t num_states, std::size_t num_actions, double temperature)
    : TabularPolicy(num_states, num_actions, std::vector<double>(num_states * num_actions, 0.0), temperature) {}

TabularPolicy::TabularPolicy(std::size_t num_states, std::size_t num_actions, std::vector<double> params,
                             double temperature)
    : num_states_(num_states), num_actions_(num_actions), temperature_(temperature), params_(std::move(params)) {
  if (num_states == 0 || num_actions == 0) throw DomainError("policy table must be non-empty");
  if (params_.size() != num_states * num_actions) throw DomainError("parameter vector size does not match table");
  set_temperature(temperature);
}

void TabularPolicy::set_temperature(double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw DomainError("temperature must be positive");
  temperature_ = temperature;
}

std::span<const double> TabularPolicy::row(std::size_t state) const {
  return std::span<const double>(params_).subspan(state * num_actions_, num_actions_);
}

std::vector<double> TabularPolicy::probabilities(std::size_t state) const {
  std::vector<double> p;
  softmax_into(row(state), temperature_, p);
  return p;
}

double TabularPolicy::log_prob(std::size_t state, std::size_t action) const {
  const auto logits = row(state);
  const double top = *std::max_element(logits.begin(), logits.end()) / temperature_;
  double total = 0.0;
  for (double z : logits) total += std::exp(z / temperature_ - top);
  return logits[action] / temperature_ - top - std::log(total);
}

std::size_t TabularPolicy::sample(std::size_t state, Rng& rng) const {
  const auto p = probabilities(state);
  double u = rng.uniform();
  for (std::size_t a = 0; a + 1 < p.size(); ++a) {
    if (u < p[a]) return a;
    u -= p[a];
  }
  return p.size() - 1;
}

std::size_t TabularPolicy::greedy(std::size_t state) const {
  const auto logits = row(state);
  return static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
}

void TabularPolicy::accumulate_grad_log_prob(std::size_t state, std::size_t action, double scale,
                                             std::span<double> grad) const {
  const auto p = probabilities(state);
  const double k = scale / temperature_;
  double* out = grad.data() + state * num_actions_;
  for (std::size_t a = 0; a < num_actions_; ++a) out[a] -= k * p[a];
  out[action] += k;
}

std::vector<double> grad_log_prob(const TabularPolicy& policy, const Trajectory& trace, const TokenMask& mask) {
  std::vector<double> grad(policy.size(), 0.0);
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    if (mask[i]) policy.accumulate_grad_log_prob(trace.tokens[i].state, trace.tokens[i].symbol, 1.0, grad);
  }
  return grad;
}

double masked_log_prob(const TabularPolicy& policy, const Trajectory& trace, const TokenMask& mask) {
  double total = 0.0;
  for (std::size_t i = 0; i < trace.tokens.size(); ++i) {
    if (mask[i]) total += policy.log_prob(trace.tokens[i].state, trace.tokens[i].symbol);
  }
  return total;
}

}  // namespace forge
