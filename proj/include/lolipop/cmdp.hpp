#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lolipop/prob.hpp"

namespace lolipop {

inline constexpr double kValueTol = 1e-10;  // value/occupancy tolerance

// Randomized non-stationary policy: one action distribution per (layer,
// state).
class Policy {
 public:
  Policy() = default;
  Policy(int horizon, int num_states, int num_actions)
      : horizon_(horizon),
        num_states_(num_states),
        num_actions_(num_actions),
        tables_(static_cast<std::size_t>(horizon) * num_states * num_actions,
                0.0) {}

  static Policy uniform(int horizon, int num_states, int num_actions) {
    Policy pi(horizon, num_states, num_actions);
    const double w = 1.0 / num_actions;
    std::fill(pi.tables_.begin(), pi.tables_.end(), w);
    return pi;
  }

  // Deterministic policy from an action table indexed [h][s].
  static Policy deterministic(int horizon, int num_states, int num_actions,
                              const std::vector<std::vector<int>>& actions) {
    Policy pi(horizon, num_states, num_actions);
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states; ++s)
        pi.set(h, s, actions[static_cast<std::size_t>(h)]
                         [static_cast<std::size_t>(s)]);
    return pi;
  }

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  std::span<const double> row(int h, int s) const {
    return {&tables_[idx(h, s, 0)], static_cast<std::size_t>(num_actions_)};
  }
  double prob(int h, int s, int a) const { return tables_[idx(h, s, a)]; }

  void set_row(int h, int s, std::span<const double> probs) {
    std::copy(probs.begin(), probs.end(), &tables_[idx(h, s, 0)]);
  }
  // Point mass on one action.
  void set(int h, int s, int a) {
    for (int b = 0; b < num_actions_; ++b) tables_[idx(h, s, b)] = 0.0;
    tables_[idx(h, s, a)] = 1.0;
  }

  void validate() const {
    for (int h = 0; h < horizon_; ++h)
      for (int s = 0; s < num_states_; ++s)
        require_probability_vector(row(h, s), "policy row");
  }

  bool operator==(const Policy& o) const {
    return horizon_ == o.horizon_ && num_states_ == o.num_states_ &&
           num_actions_ == o.num_actions_ && tables_ == o.tables_;
  }

 private:
  std::size_t idx(int h, int s, int a) const {
    return (static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ + a;
  }

  int horizon_ = 0;
  int num_states_ = 0;
  int num_actions_ = 0;
  std::vector<double> tables_;
};

// Replaceable reward table: one finite-support distribution per
// (context, layer, state, action), support within [0, 1/H].
class RewardFunction {
 public:
  RewardFunction() = default;
  RewardFunction(int num_contexts, int horizon, int num_states,
                 int num_actions)
      : num_contexts_(num_contexts),
        horizon_(horizon),
        num_states_(num_states),
        num_actions_(num_actions),
        dists_(static_cast<std::size_t>(num_contexts) * horizon * num_states *
               num_actions) {}

  static RewardFunction zero(int num_contexts, int horizon, int num_states,
                             int num_actions) {
    RewardFunction r(num_contexts, horizon, num_states, num_actions);
    for (auto& d : r.dists_) d = DiscreteDistribution::point_mass(0.0);
    return r;
  }

  int num_contexts() const { return num_contexts_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }

  const DiscreteDistribution& at(int c, int h, int s, int a) const {
    return dists_[idx(c, h, s, a)];
  }
  DiscreteDistribution& at(int c, int h, int s, int a) {
    return dists_[idx(c, h, s, a)];
  }

  void validate() const {
    const double cap = 1.0 / horizon_;
    for (const auto& d : dists_) {
      if (d.values().empty())
        throw std::invalid_argument("reward distribution unset");
      if (d.min_value() < 0.0 || d.max_value() > cap + kProbTol)
        throw std::invalid_argument("reward support outside [0, 1/H]");
    }
  }

  bool all_zero() const {
    for (const auto& d : dists_)
      if (d.values().size() != 1 || d.values()[0] != 0.0) return false;
    return true;
  }

 private:
  std::size_t idx(int c, int h, int s, int a) const {
    return ((static_cast<std::size_t>(c) * horizon_ + h) * num_states_ + s) *
               num_actions_ +
           a;
  }

  int num_contexts_ = 0, horizon_ = 0, num_states_ = 0, num_actions_ = 0;
  std::vector<DiscreteDistribution> dists_;
};

// Tabular contextual MDP: per-context layered transition kernels and
// finite-support step rewards. Immutable in use; all operations on it are
// pure functions.
class TabularCMDP {
 public:
  TabularCMDP() = default;
  TabularCMDP(int num_contexts, int horizon, int num_states, int num_actions,
              int start_state)
      : num_contexts_(num_contexts),
        horizon_(horizon),
        num_states_(num_states),
        num_actions_(num_actions),
        start_state_(start_state),
        context_probs_(num_contexts, 1.0 / num_contexts),
        transitions_(static_cast<std::size_t>(num_contexts) * horizon *
                         num_states * num_actions * num_states,
                     0.0),
        rewards_(num_contexts, horizon, num_states, num_actions) {}

  // Uniform kernels with identically-zero rewards (the epoch-0 estimate).
  static TabularCMDP uniform_zero(int num_contexts, int horizon,
                                  int num_states, int num_actions,
                                  int start_state) {
    TabularCMDP m(num_contexts, horizon, num_states, num_actions, start_state);
    std::fill(m.transitions_.begin(), m.transitions_.end(),
              1.0 / num_states);
    m.rewards_ = RewardFunction::zero(num_contexts, horizon, num_states,
                                      num_actions);
    m.refresh_reward_means();
    return m;
  }

  int num_contexts() const { return num_contexts_; }
  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  int start_state() const { return start_state_; }

  const std::vector<double>& context_probs() const { return context_probs_; }
  void set_context_probs(std::vector<double> probs) {
    if (static_cast<int>(probs.size()) != num_contexts_)
      throw std::invalid_argument("context_probs size mismatch");
    context_probs_ = std::move(probs);
  }

  std::span<const double> transition_row(int c, int h, int s, int a) const {
    return {&transitions_[tidx(c, h, s, a)],
            static_cast<std::size_t>(num_states_)};
  }
  void set_transition_row(int c, int h, int s, int a,
                          std::span<const double> row) {
    std::copy(row.begin(), row.end(), &transitions_[tidx(c, h, s, a)]);
  }

  const DiscreteDistribution& reward(int c, int h, int s, int a) const {
    return rewards_.at(c, h, s, a);
  }
  void set_reward(int c, int h, int s, int a, DiscreteDistribution d) {
    rewards_.at(c, h, s, a) = std::move(d);
    reward_means_.clear();
  }
  const RewardFunction& rewards() const { return rewards_; }

  double mean_reward(int c, int h, int s, int a) const {
    if (reward_means_.empty()) refresh_reward_means();
    return reward_means_[ridx(c, h, s, a)];
  }

  // Copy layer h (all contexts) of `src` into this model.
  void set_layer_from(const TabularCMDP& src, int h) {
    for (int c = 0; c < num_contexts_; ++c)
      for (int s = 0; s < num_states_; ++s)
        for (int a = 0; a < num_actions_; ++a) {
          set_transition_row(c, h, s, a, src.transition_row(c, h, s, a));
          rewards_.at(c, h, s, a) = src.reward(c, h, s, a);
        }
    reward_means_.clear();
  }

  // Same dynamics with the reward table replaced by `r`.
  TabularCMDP with_rewards(const RewardFunction& r) const {
    if (r.num_contexts() != num_contexts_ || r.horizon() != horizon_ ||
        r.num_states() != num_states_ || r.num_actions() != num_actions_)
      throw std::invalid_argument("with_rewards: shape mismatch");
    TabularCMDP m = *this;
    m.rewards_ = r;
    m.reward_means_.clear();
    return m;
  }

  bool same_shape(const TabularCMDP& o) const {
    return num_contexts_ == o.num_contexts_ && horizon_ == o.horizon_ &&
           num_states_ == o.num_states_ && num_actions_ == o.num_actions_ &&
           start_state_ == o.start_state_;
  }

  void validate() const {
    if (num_contexts_ <= 0 || horizon_ <= 0 || num_states_ <= 0 ||
        num_actions_ <= 0)
      throw std::invalid_argument("model dimensions must be positive");
    if (start_state_ < 0 || start_state_ >= num_states_)
      throw std::invalid_argument("start_state out of range");
    require_probability_vector(context_probs_, "context_probs");
    for (int c = 0; c < num_contexts_; ++c)
      for (int h = 0; h < horizon_; ++h)
        for (int s = 0; s < num_states_; ++s)
          for (int a = 0; a < num_actions_; ++a)
            require_probability_vector(transition_row(c, h, s, a),
                                       "transition row");
    rewards_.validate();
  }

  void check_context(int c) const {
    if (c < 0 || c >= num_contexts_)
      throw std::out_of_range("context index out of range");
  }

 private:
  std::size_t tidx(int c, int h, int s, int a) const {
    return (((static_cast<std::size_t>(c) * horizon_ + h) * num_states_ + s) *
                num_actions_ +
            a) *
           num_states_;
  }
  std::size_t ridx(int c, int h, int s, int a) const {
    return ((static_cast<std::size_t>(c) * horizon_ + h) * num_states_ + s) *
               num_actions_ +
           a;
  }
  void refresh_reward_means() const {
    reward_means_.resize(static_cast<std::size_t>(num_contexts_) * horizon_ *
                         num_states_ * num_actions_);
    for (int c = 0; c < num_contexts_; ++c)
      for (int h = 0; h < horizon_; ++h)
        for (int s = 0; s < num_states_; ++s)
          for (int a = 0; a < num_actions_; ++a)
            reward_means_[ridx(c, h, s, a)] = rewards_.at(c, h, s, a).mean();
  }

  int num_contexts_ = 0, horizon_ = 0, num_states_ = 0, num_actions_ = 0;
  int start_state_ = 0;
  std::vector<double> context_probs_;
  std::vector<double> transitions_;  // [c][h][s][a] -> row over s'
  RewardFunction rewards_;
  mutable std::vector<double> reward_means_;
};

// Q/V tables from backward induction. v has H+1 layers, v[H] = 0.
struct ValueTable {
  int horizon = 0, num_states = 0, num_actions = 0;
  std::vector<double> q;  // [H][S][A]
  std::vector<double> v;  // [H+1][S]

  double q_at(int h, int s, int a) const {
    return q[(static_cast<std::size_t>(h) * num_states + s) * num_actions + a];
  }
  double v_at(int h, int s) const {
    return v[static_cast<std::size_t>(h) * num_states + s];
  }
  double initial_value(int start_state) const { return v_at(0, start_state); }
};

// Layer occupancies d^h(s, a) with the state-marginal view.
struct OccupancyTable {
  int horizon = 0, num_states = 0, num_actions = 0;
  std::vector<double> values;  // [H][S][A]

  double at(int h, int s, int a) const {
    return values[(static_cast<std::size_t>(h) * num_states + s) *
                      num_actions +
                  a];
  }
  double& at(int h, int s, int a) {
    return values[(static_cast<std::size_t>(h) * num_states + s) *
                      num_actions +
                  a];
  }
  double state_marginal(int h, int s) const {
    double sum = 0.0;
    for (int a = 0; a < num_actions; ++a) sum += at(h, s, a);
    return sum;
  }
  double layer_mass(int h) const {
    double sum = 0.0;
    for (int s = 0; s < num_states; ++s) sum += state_marginal(h, s);
    return sum;
  }
};

// Exact policy evaluation by backward induction:
// q[h][s][a] = mean R^h(s,a;c) + sum_s' P^h(s'|s,a;c) v[h+1][s'].
inline ValueTable evaluate_policy(const TabularCMDP& model, int context,
                                  const Policy& policy) {
  model.check_context(context);
  const int H = model.horizon(), S = model.num_states(),
            A = model.num_actions();
  ValueTable t{H, S, A,
               std::vector<double>(static_cast<std::size_t>(H) * S * A, 0.0),
               std::vector<double>(static_cast<std::size_t>(H + 1) * S, 0.0)};
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      double vs = 0.0;
      for (int a = 0; a < A; ++a) {
        double qa = model.mean_reward(context, h, s, a);
        if (h + 1 < H) {
          auto row = model.transition_row(context, h, s, a);
          for (int sp = 0; sp < S; ++sp) qa += row[sp] * t.v_at(h + 1, sp);
        }
        t.q[(static_cast<std::size_t>(h) * S + s) * A + a] = qa;
        vs += policy.prob(h, s, a) * qa;
      }
      t.v[static_cast<std::size_t>(h) * S + s] = vs;
    }
  }
  return t;
}

// Optimal values and a deterministic greedy policy; argmax ties break to
// the smallest action index.
inline std::pair<ValueTable, Policy> optimal_values(const TabularCMDP& model,
                                                    int context) {
  model.check_context(context);
  const int H = model.horizon(), S = model.num_states(),
            A = model.num_actions();
  ValueTable t{H, S, A,
               std::vector<double>(static_cast<std::size_t>(H) * S * A, 0.0),
               std::vector<double>(static_cast<std::size_t>(H + 1) * S, 0.0)};
  Policy greedy(H, S, A);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      int best = 0;
      double best_q = -1.0;
      for (int a = 0; a < A; ++a) {
        double qa = model.mean_reward(context, h, s, a);
        if (h + 1 < H) {
          auto row = model.transition_row(context, h, s, a);
          for (int sp = 0; sp < S; ++sp) qa += row[sp] * t.v_at(h + 1, sp);
        }
        t.q[(static_cast<std::size_t>(h) * S + s) * A + a] = qa;
        if (qa > best_q) {
          best_q = qa;
          best = a;
        }
      }
      greedy.set(h, s, best);
      t.v[static_cast<std::size_t>(h) * S + s] = best_q;
    }
  }
  return {std::move(t), std::move(greedy)};
}

// Pseudo-regret V*(c) - V(pi, c), clamped at 0.
inline double regret_of(const TabularCMDP& model, int context,
                        const Policy& policy) {
  const double vstar =
      optimal_values(model, context).first.initial_value(model.start_state());
  const double vpi =
      evaluate_policy(model, context, policy).initial_value(model.start_state());
  return std::max(0.0, vstar - vpi);
}

// Forward occupancy recursion; each layer sums to 1.
inline OccupancyTable occupancy_of(const TabularCMDP& model, int context,
                                   const Policy& policy) {
  model.check_context(context);
  const int H = model.horizon(), S = model.num_states(),
            A = model.num_actions();
  OccupancyTable d{H, S, A,
                   std::vector<double>(static_cast<std::size_t>(H) * S * A,
                                       0.0)};
  std::vector<double> state(S, 0.0);
  state[model.start_state()] = 1.0;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        d.at(h, s, a) = state[s] * policy.prob(h, s, a);
    if (h + 1 < H) {
      std::vector<double> next(S, 0.0);
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          const double mass = d.at(h, s, a);
          if (mass == 0.0) continue;
          auto row = model.transition_row(context, h, s, a);
          for (int sp = 0; sp < S; ++sp) next[sp] += mass * row[sp];
        }
      state = std::move(next);
    }
  }
  return d;
}

// Local simulation-lemma diagnostic. Bounds |V_m1 - V_m2| by occupancy-
// weighted per-step Hellinger distances under m2. Uses the Hellinger
// distance without the 1/2 normalization (sqrt(2 * hellinger_sq)); with
// values and step rewards in [0,1] the bound is exact mathematics:
// |E_P f - E_Q f| <= TV(P,Q) <= D_H(P,Q) for f in [0,1].
inline std::pair<double, double> simulation_gap_bound(const TabularCMDP& m1,
                                                      const TabularCMDP& m2,
                                                      int context,
                                                      const Policy& policy) {
  if (!m1.same_shape(m2))
    throw std::invalid_argument("simulation_gap_bound: shape mismatch");
  const double v1 =
      evaluate_policy(m1, context, policy).initial_value(m1.start_state());
  const double v2 =
      evaluate_policy(m2, context, policy).initial_value(m2.start_state());
  const double lhs = std::abs(v1 - v2);

  const OccupancyTable d2 = occupancy_of(m2, context, policy);
  const int H = m1.horizon(), S = m1.num_states(), A = m1.num_actions();
  double rhs = 0.0;
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const double w = d2.at(h, s, a);
        if (w == 0.0) continue;
        const double dp =
            h + 1 < H ? std::sqrt(2.0 * hellinger_sq(
                                            m1.transition_row(context, h, s, a),
                                            m2.transition_row(context, h, s, a)))
                      : 0.0;
        const double dr = std::sqrt(
            2.0 * hellinger_sq(m1.reward(context, h, s, a),
                               m2.reward(context, h, s, a)));
        rhs += w * (dp + dr);
      }
  return {lhs, rhs};
}

}  // namespace lolipop
