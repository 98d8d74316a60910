// SPDX-License-Identifier: Apache-2.0
//
// Reference policies: multi-connectivity handover (probe everything, switch
// to the strongest on failure), UCB1 backup selection standing in for the
// SMART baseline, and the fixed-Euclidean-distance skeleton refresh rule.

#ifndef MMHSIM_BASELINES_HPP
#define MMHSIM_BASELINES_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmhsim/errors.hpp"

namespace mmhsim {

/// Multi-connectivity rule: keep the serving BS while its level exceeds the
/// threshold; otherwise switch to the highest level (ties to lowest id).
inline int multi_connectivity_step(std::span<const int> levels, int serving,
                                   int threshold_level) {
  if (serving < 0 || serving >= static_cast<int>(levels.size()))
    throw std::out_of_range("multi_connectivity_step: bad serving id");
  if (levels[serving] > threshold_level) return serving;
  int best = 0;
  for (int j = 1; j < static_cast<int>(levels.size()); ++j)
    if (levels[j] > levels[best]) best = j;
  return best;
}

/// Per-(state, action) visit counts and running mean rewards for UCB1.
class UcbStats {
public:
  UcbStats(int num_states, int num_actions)
      : num_states_(num_states), num_actions_(num_actions),
        counts_(static_cast<std::size_t>(num_states) * num_actions, 0),
        means_(static_cast<std::size_t>(num_states) * num_actions, 0.0) {
    if (num_states < 1 || num_actions < 1)
      throw ConfigError("UcbStats: dimensions must be positive");
  }

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::int64_t count(int s, int a) const { return counts_[flat(s, a)]; }
  double mean(int s, int a) const { return means_[flat(s, a)]; }

  std::int64_t state_total(int s) const {
    std::int64_t t = 0;
    for (int a = 0; a < num_actions_; ++a) t += count(s, a);
    return t;
  }

  std::int64_t total() const { return total_; }

  void update(int s, int a, double reward) {
    const std::size_t i = flat(s, a);
    ++counts_[i];
    ++total_;
    means_[i] += (reward - means_[i]) / static_cast<double>(counts_[i]);
  }

private:
  std::size_t flat(int s, int a) const {
    if (s < 0 || s >= num_states_ || a < 0 || a >= num_actions_)
      throw std::out_of_range("UcbStats: index out of range");
    return static_cast<std::size_t>(s) * num_actions_ + a;
  }

  int num_states_;
  int num_actions_;
  std::vector<std::int64_t> counts_;
  std::vector<double> means_;
  std::int64_t total_ = 0;
};

/// UCB1: unvisited actions first (in index order), then
/// argmax mean + c sqrt(2 ln t / n) with t the state's visit total.
inline int ucb_select(const UcbStats& stats, int s, double c) {
  for (int a = 0; a < stats.num_actions(); ++a)
    if (stats.count(s, a) == 0) return a;
  const double log_t = std::log(static_cast<double>(stats.state_total(s)));
  int best = 0;
  double best_score = 0.0;
  for (int a = 0; a < stats.num_actions(); ++a) {
    const double bonus = c * std::sqrt(2.0 * log_t / static_cast<double>(stats.count(s, a)));
    const double score = stats.mean(s, a) + bonus;
    if (a == 0 || score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

/// UCB1 over the action set minus `excluded` (backup must differ from the
/// serving BS). Falls back to `excluded` when it is the only action.
inline int ucb_select_excluding(const UcbStats& stats, int s, double c, int excluded) {
  if (stats.num_actions() < 2) return ucb_select(stats, s, c);
  for (int a = 0; a < stats.num_actions(); ++a)
    if (a != excluded && stats.count(s, a) == 0) return a;
  double log_t = 0.0;
  std::int64_t t = 0;
  for (int a = 0; a < stats.num_actions(); ++a)
    if (a != excluded) t += stats.count(s, a);
  log_t = std::log(static_cast<double>(t));
  int best = -1;
  double best_score = 0.0;
  for (int a = 0; a < stats.num_actions(); ++a) {
    if (a == excluded) continue;
    const double bonus = c * std::sqrt(2.0 * log_t / static_cast<double>(stats.count(s, a)));
    const double score = stats.mean(s, a) + bonus;
    if (best < 0 || score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

/// Fixed-Euclidean-distance skeleton refresh.
struct EdPolicy {
  double refresh_distance_m = 10.0;
};

inline bool ed_should_refresh(double distance_since_last_refresh_m,
                              const EdPolicy& policy) {
  if (distance_since_last_refresh_m < 0.0)
    throw std::domain_error("ed_should_refresh: negative distance");
  if (policy.refresh_distance_m <= 0.0)
    throw ConfigError("EdPolicy: refresh distance must be positive");
  return distance_since_last_refresh_m >= policy.refresh_distance_m;
}

}  // namespace mmhsim

#endif  // MMHSIM_BASELINES_HPP
