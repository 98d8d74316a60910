// SPDX-License-Identifier: Apache-2.0
//
// Tabular Q-learning over (location, serving BS, SNR level) states with
// backup-BS actions: the epsilon-greedy training loop, greedy policy
// extraction, table serialization, and a small explicit-MDP value-iteration
// solver used as a convergence oracle.

#ifndef MMHSIM_LEARNING_HPP
#define MMHSIM_LEARNING_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "mmhsim/errors.hpp"
#include "mmhsim/rng.hpp"

namespace mmhsim {

/// s = (location index, serving BS, quantized SNR level). Locations and BS
/// ids are 0-based; levels are 1-based as reported by quantize_snr.
struct RlState {
  int location = 0;
  int serving_bs = 0;
  int snr_level = 1;
};

/// Action values over [M] x [N] x [L] states and A actions (A = N in the
/// handover problem; generic MDP tests may use other shapes).
class QTable {
public:
  QTable(int locations, int num_bs, int levels, int actions)
      : m_(locations), n_(num_bs), l_(levels), a_(actions),
        values_(static_cast<std::size_t>(locations) * num_bs * levels * actions, 0.0) {
    if (locations < 1 || num_bs < 1 || levels < 1 || actions < 1)
      throw ConfigError("QTable: all dimensions must be positive");
  }

  int locations() const { return m_; }
  int num_bs() const { return n_; }
  int levels() const { return l_; }
  int actions() const { return a_; }

  std::size_t state_index(const RlState& s) const {
    if (s.location < 0 || s.location >= m_ || s.serving_bs < 0 ||
        s.serving_bs >= n_ || s.snr_level < 1 || s.snr_level > l_)
      throw std::out_of_range("QTable: state out of range");
    return (static_cast<std::size_t>(s.location) * n_ + s.serving_bs) * l_ +
           (s.snr_level - 1);
  }

  double at(const RlState& s, int action) const { return values_[flat(s, action)]; }
  double& at(const RlState& s, int action) { return values_[flat(s, action)]; }

  double max_over_actions(const RlState& s) const {
    const std::size_t base = state_index(s) * a_;
    double best = values_[base];
    for (int a = 1; a < a_; ++a) best = std::max(best, values_[base + a]);
    return best;
  }

  /// Greedy action, ties broken by lowest index.
  int argmax_action(const RlState& s) const {
    const std::size_t base = state_index(s) * a_;
    int best = 0;
    for (int a = 1; a < a_; ++a)
      if (values_[base + a] > values_[base + best]) best = a;
    return best;
  }

  /// Greedy action excluding one index (used when the backup BS must differ
  /// from the serving BS). Falls back to `excluded` when it is the only action.
  int argmax_action_excluding(const RlState& s, int excluded) const {
    const std::size_t base = state_index(s) * a_;
    int best = -1;
    for (int a = 0; a < a_; ++a) {
      if (a == excluded) continue;
      if (best < 0 || values_[base + a] > values_[base + best]) best = a;
    }
    return best < 0 ? excluded : best;
  }

  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

private:
  std::size_t flat(const RlState& s, int action) const {
    if (action < 0 || action >= a_) throw std::out_of_range("QTable: action out of range");
    return state_index(s) * a_ + action;
  }

  int m_, n_, l_, a_;
  std::vector<double> values_;
};

/// One Q-learning update; touches exactly the (s, a) entry. A null
/// `s_next` marks the episode boundary and bootstraps from zero.
inline void q_update(QTable& q, const RlState& s, int action, double reward,
                     const RlState* s_next, double alpha, double gamma) {
  const double bootstrap = s_next ? q.max_over_actions(*s_next) : 0.0;
  double& cell = q.at(s, action);
  cell += alpha * (reward + gamma * bootstrap - cell);
}

/// Same update with the bootstrap max taken over the valid action set of
/// the next state (the backup BS must differ from the serving BS, so the
/// serving action can never be executed and must not feed the target).
inline void q_update_masked(QTable& q, const RlState& s, int action, double reward,
                            const RlState* s_next, double alpha, double gamma) {
  double bootstrap = 0.0;
  if (s_next) {
    const int excluded = q.actions() > 1 ? s_next->serving_bs : -1;
    const int best = q.argmax_action_excluding(*s_next, excluded);
    bootstrap = q.at(*s_next, best);
  }
  double& cell = q.at(s, action);
  cell += alpha * (reward + gamma * bootstrap - cell);
}

/// Epsilon-greedy: uniform over all actions with probability epsilon,
/// greedy (ties to lowest index) otherwise.
inline int select_action(const QTable& q, const RlState& s, double epsilon,
                         RngStream& rng) {
  if (epsilon > 0.0 && rng.uniform() < epsilon) return rng.uniform_int(q.actions());
  return q.argmax_action(s);
}

/// Epsilon-greedy over the action set minus `excluded`.
inline int select_action_excluding(const QTable& q, const RlState& s,
                                   double epsilon, RngStream& rng, int excluded) {
  if (q.actions() < 2) return q.argmax_action(s);
  if (epsilon > 0.0 && rng.uniform() < epsilon) {
    const int draw = rng.uniform_int(q.actions() - 1);
    return draw >= excluded ? draw + 1 : draw;
  }
  return q.argmax_action_excluding(s, excluded);
}

struct LearningConfig {
  double alpha = 0.1;
  double gamma = 0.99;
  double epsilon = 0.01;
  std::int64_t episodes = 200000;
  // Initial action value. An optimistic start makes every arm get tried:
  // with strictly positive rewards and a small epsilon, a zero start locks
  // onto whichever action happens to be exploited first.
  double q_init = 0.0;
};

/// Episodic environment driven by the training loop.
class EpisodeEnv {
public:
  virtual ~EpisodeEnv() = default;
  virtual RlState reset(std::int64_t episode_index) = 0;

  struct Step {
    RlState next;
    double reward = 0.0;
    bool done = false;
  };
  virtual Step step(int action) = 0;
};

/// Runs the epsilon-greedy Q-learning loop for cfg.episodes episodes.
/// When `exclude_serving` is set the executed action never equals the
/// state's serving BS (the backup must differ); the update's max still
/// ranges over the full action set.
inline void train(EpisodeEnv& env, QTable& q, const LearningConfig& cfg,
                  RngStream& explore_rng, bool exclude_serving = false) {
  for (std::int64_t ep = 0; ep < cfg.episodes; ++ep) {
    RlState s = env.reset(ep);
    bool done = false;
    while (!done) {
      const int a = exclude_serving
                        ? select_action_excluding(q, s, cfg.epsilon, explore_rng,
                                                  s.serving_bs)
                        : select_action(q, s, cfg.epsilon, explore_rng);
      const EpisodeEnv::Step st = env.step(a);
      const RlState* next = st.done ? nullptr : &st.next;
      if (exclude_serving)
        q_update_masked(q, s, a, st.reward, next, cfg.alpha, cfg.gamma);
      else
        q_update(q, s, a, st.reward, next, cfg.alpha, cfg.gamma);
      s = st.next;
      done = st.done;
    }
  }
}

/// Greedy policy pi(s) = argmax_a Q(s, a), stored flat over states.
struct Policy {
  int locations = 0, num_bs = 0, levels = 0;
  std::vector<int> actions;

  int at(const RlState& s) const {
    const std::size_t idx =
        (static_cast<std::size_t>(s.location) * num_bs + s.serving_bs) * levels +
        (s.snr_level - 1);
    return actions.at(idx);
  }
};

inline Policy extract_policy(const QTable& q) {
  Policy pi;
  pi.locations = q.locations();
  pi.num_bs = q.num_bs();
  pi.levels = q.levels();
  pi.actions.reserve(static_cast<std::size_t>(q.locations()) * q.num_bs() * q.levels());
  for (int m = 0; m < q.locations(); ++m)
    for (int n = 0; n < q.num_bs(); ++n)
      for (int l = 1; l <= q.levels(); ++l)
        pi.actions.push_back(q.argmax_action({m, n, l}));
  return pi;
}

/// Undiscounted episode return R_traj = sum_i R(i).
inline double trajectory_return(std::span<const double> rewards) {
  return std::accumulate(rewards.begin(), rewards.end(), 0.0);
}

// ---------------------------------------------------------------------------
// QTable serialization (versioned structured text)
// ---------------------------------------------------------------------------

inline nlohmann::json qtable_to_json(const QTable& q) {
  return nlohmann::json{{"format", "mmhsim-qtable"},
                        {"version", 1},
                        {"dims", {q.locations(), q.num_bs(), q.levels(), q.actions()}},
                        {"values", q.values()}};
}

inline QTable qtable_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "mmhsim-qtable")
    throw ConfigError("qtable_from_json: unrecognized format");
  if (j.value("version", 0) != 1)
    throw ConfigError("qtable_from_json: unsupported version");
  const auto dims = j.at("dims");
  QTable q(dims.at(0).get<int>(), dims.at(1).get<int>(), dims.at(2).get<int>(),
           dims.at(3).get<int>());
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != q.values().size())
    throw ConfigError("qtable_from_json: value count does not match dims");
  q.values() = values;
  return q;
}

// ---------------------------------------------------------------------------
// Explicit-MDP value iteration (test oracle)
// ---------------------------------------------------------------------------

/// Small finite MDP with explicit tables. Transition rows may sum to less
/// than one; the missing mass terminates the episode (zero future value).
struct TabularMdp {
  int num_states = 0;
  int num_actions = 0;
  // transitions[s][a] = list of (probability, next state)
  std::vector<std::vector<std::vector<std::pair<double, int>>>> transitions;
  std::vector<std::vector<double>> rewards;  // expected immediate reward r(s, a)
};

/// Bellman-optimality iteration to sup-norm tolerance `tol`. Throws
/// NonConvergenceError when the iteration cap is hit (e.g. gamma = 1 with
/// recurrent nonzero rewards).
inline std::vector<std::vector<double>> value_iteration(const TabularMdp& mdp,
                                                        double gamma, double tol,
                                                        int max_iter = 1000000) {
  std::vector<std::vector<double>> q(
      mdp.num_states, std::vector<double>(mdp.num_actions, 0.0));
  std::vector<double> v(mdp.num_states, 0.0);
  for (int iter = 0; iter < max_iter; ++iter) {
    double diff = 0.0;
    for (int s = 0; s < mdp.num_states; ++s)
      for (int a = 0; a < mdp.num_actions; ++a) {
        double value = mdp.rewards[s][a];
        for (const auto& [p, next] : mdp.transitions[s][a])
          value += gamma * p * v[next];
        diff = std::max(diff, std::abs(value - q[s][a]));
        q[s][a] = value;
      }
    for (int s = 0; s < mdp.num_states; ++s)
      v[s] = *std::max_element(q[s].begin(), q[s].end());
    if (diff < tol) return q;
  }
  throw NonConvergenceError("value_iteration: tolerance not reached");
}

}  // namespace mmhsim

#endif  // MMHSIM_LEARNING_HPP
