#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lolipop/cmdp.hpp"
#include "lolipop/lp.hpp"

namespace lolipop {

// Membership flags for (s, a, s') triples per layer h in [0, H-2]
// (transitions out of layer h). Default: nothing trusted.
class TrustedTransitionSet {
 public:
  TrustedTransitionSet() = default;
  TrustedTransitionSet(int horizon, int num_states, int num_actions)
      : horizon_(horizon),
        num_states_(num_states),
        num_actions_(num_actions),
        flags_(horizon > 1 ? static_cast<std::size_t>(horizon - 1) *
                                 num_states * num_actions * num_states
                           : 0,
               0) {}

  static TrustedTransitionSet all(int horizon, int num_states,
                                  int num_actions) {
    TrustedTransitionSet t(horizon, num_states, num_actions);
    std::fill(t.flags_.begin(), t.flags_.end(), 1);
    return t;
  }

  int horizon() const { return horizon_; }

  bool trusted(int h, int s, int a, int sp) const {
    return flags_[idx(h, s, a, sp)] != 0;
  }
  void set(int h, int s, int a, int sp, bool value) {
    flags_[idx(h, s, a, sp)] = value ? 1 : 0;
  }
  void set_layer_all(int h, bool value) {
    const std::size_t stride =
        static_cast<std::size_t>(num_states_) * num_actions_ * num_states_;
    std::fill_n(flags_.begin() + static_cast<std::ptrdiff_t>(h * stride),
                stride, value ? 1 : 0);
  }

  // T1 subset of T2, layerwise.
  static bool subset(const TrustedTransitionSet& t1,
                     const TrustedTransitionSet& t2) {
    for (std::size_t i = 0; i < t1.flags_.size(); ++i)
      if (t1.flags_[i] && !t2.flags_[i]) return false;
    return true;
  }

 private:
  std::size_t idx(int h, int s, int a, int sp) const {
    return ((static_cast<std::size_t>(h) * num_states_ + s) * num_actions_ +
            a) *
               num_states_ +
           sp;
  }

  int horizon_ = 0, num_states_ = 0, num_actions_ = 0;
  std::vector<std::uint8_t> flags_;
};

// Occupancy recursion that propagates mass only through trusted
// transitions; dropped mass is lost, not renormalized. With `kernels` set
// to the current estimate this is the trusted occupancy measure; with the
// true model it is the observable occupancy measure.
inline OccupancyTable clipped_occupancy(const TabularCMDP& kernels,
                                        const TrustedTransitionSet& trusted,
                                        const Policy& policy, int context) {
  kernels.check_context(context);
  const int H = kernels.horizon(), S = kernels.num_states(),
            A = kernels.num_actions();
  OccupancyTable d{H, S, A,
                   std::vector<double>(static_cast<std::size_t>(H) * S * A,
                                       0.0)};
  std::vector<double> state(S, 0.0);
  state[kernels.start_state()] = 1.0;
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
          auto row = kernels.transition_row(context, h, s, a);
          for (int sp = 0; sp < S; ++sp)
            if (trusted.trusted(h, s, a, sp)) next[sp] += mass * row[sp];
        }
      state = std::move(next);
    }
  }
  return d;
}

inline OccupancyTable trusted_occupancy(const TabularCMDP& estimate,
                                        const TrustedTransitionSet& trusted,
                                        const Policy& policy, int context) {
  return clipped_occupancy(estimate, trusted, policy, context);
}

// Test-only counterpart running the true kernels through the same set.
inline OccupancyTable observable_occupancy(const TabularCMDP& truth,
                                           const TrustedTransitionSet& trusted,
                                           const Policy& policy, int context) {
  return clipped_occupancy(truth, trusted, policy, context);
}

// Per-epoch, per-context inputs for cover construction.
struct CoverInputs {
  const TabularCMDP* estimate_cur = nullptr;   // layers < target filled
  const TabularCMDP* estimate_prev = nullptr;  // previous-epoch estimate
  const TrustedTransitionSet* trusted = nullptr;
  int context = 0;
  double eta = 0.0;
  double vhat_prev = 0.0;  // optimal value of estimate_prev at this context
};

struct CoverMemberResult {
  Policy policy;
  double objective = 0.0;  // achievable value, re-evaluated at `policy`
  double lp_value = 0.0;   // optimum of the fractional program as printed
};

namespace detail {

// Extract action rows from an occupancy block; uniform on zero-mass states.
inline void fill_policy_rows(Policy& pi, int layer, int num_states,
                             int num_actions, const double* block) {
  for (int s = 0; s < num_states; ++s) {
    double mass = 0.0;
    for (int a = 0; a < num_actions; ++a)
      mass += block[static_cast<std::size_t>(s) * num_actions + a];
    if (mass > 1e-300) {
      std::vector<double> row(static_cast<std::size_t>(num_actions));
      for (int a = 0; a < num_actions; ++a)
        row[static_cast<std::size_t>(a)] =
            block[static_cast<std::size_t>(s) * num_actions + a] / mass;
      // Renormalize away division dust so the row is an exact distribution.
      double sum = 0.0;
      for (double v : row) sum += v;
      for (double& v : row) v /= sum;
      pi.set_row(layer, s, row);
    } else {
      std::vector<double> row(static_cast<std::size_t>(num_actions),
                              1.0 / num_actions);
      pi.set_row(layer, s, row);
    }
  }
}

}  // namespace detail

// Builds and solves the cover-member fractional program for target
// (hbar, sbar, abar), 0-based layer index:
//
//   maximize  dtil[hbar, sbar, abar] / (SA + eta * (Vhat - <dhat, rbar>))
//
// over two independent occupancy blocks: dtil (layers 0..hbar, flowing
// through trusted transitions under the current estimate) and dhat (all
// layers under the previous estimate). The policy is read off the dtil
// block for layers <= hbar and off the dhat block beyond, the true
// objective is re-evaluated at that policy, and the caller keeps the
// better of this and the previous epoch's member.
//
// If the program's optimum is 0 (target unreachable through trusted
// transitions) any policy attains it; we return `fallback`, which keeps
// the deduplicated cover small.
inline CoverMemberResult cover_member(const CoverInputs& in, int hbar,
                                      int sbar, int abar,
                                      const Policy& fallback) {
  const TabularCMDP& cur = *in.estimate_cur;
  const TabularCMDP& prev = *in.estimate_prev;
  const int H = cur.horizon(), S = cur.num_states(), A = cur.num_actions();
  const int c = in.context;
  const int sa = S * A;
  const int n_til = (hbar + 1) * sa;
  const int n_hat = H * sa;
  const int n = n_til + n_hat;
  const auto til = [&](int j, int s, int a) { return (j * S + s) * A + a; };
  const auto hat = [&](int h, int s, int a) {
    return n_til + (h * S + s) * A + a;
  };

  LinearFractionalProgram lfp;
  lfp.numerator.assign(static_cast<std::size_t>(n), 0.0);
  lfp.numerator[static_cast<std::size_t>(til(hbar, sbar, abar))] = 1.0;
  lfp.denominator.assign(static_cast<std::size_t>(n), 0.0);
  for (int h = 0; h < H; ++h)
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a)
        lfp.denominator[static_cast<std::size_t>(hat(h, s, a))] =
            -in.eta * prev.mean_reward(c, h, s, a);
  lfp.denominator_const = sa + in.eta * in.vhat_prev;

  auto add_row = [&](std::vector<double> row, double rhs) {
    lfp.rows.push_back(std::move(row));
    lfp.rhs.push_back(rhs);
  };

  // dtil block: start layer, then flow through trusted transitions.
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < A; ++a) row[static_cast<std::size_t>(til(0, s, a))] = 1.0;
    add_row(std::move(row), s == cur.start_state() ? 1.0 : 0.0);
  }
  for (int j = 1; j <= hbar; ++j) {
    for (int sp = 0; sp < S; ++sp) {
      std::vector<double> row(static_cast<std::size_t>(n), 0.0);
      for (int a = 0; a < A; ++a)
        row[static_cast<std::size_t>(til(j, sp, a))] = 1.0;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          if (in.trusted->trusted(j - 1, s, a, sp))
            row[static_cast<std::size_t>(til(j - 1, s, a))] -=
                cur.transition_row(c, j - 1, s, a)[sp];
      add_row(std::move(row), 0.0);
    }
  }
  // dhat block: ordinary occupancy polytope of the previous estimate.
  for (int s = 0; s < S; ++s) {
    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    for (int a = 0; a < A; ++a) row[static_cast<std::size_t>(hat(0, s, a))] = 1.0;
    add_row(std::move(row), s == prev.start_state() ? 1.0 : 0.0);
  }
  for (int h = 1; h < H; ++h) {
    for (int sp = 0; sp < S; ++sp) {
      std::vector<double> row(static_cast<std::size_t>(n), 0.0);
      for (int a = 0; a < A; ++a)
        row[static_cast<std::size_t>(hat(h, sp, a))] = 1.0;
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a)
          row[static_cast<std::size_t>(hat(h - 1, s, a))] -=
              prev.transition_row(c, h - 1, s, a)[sp];
      add_row(std::move(row), 0.0);
    }
  }

  const LpSolution sol = solve_lfp(lfp);

  CoverMemberResult out;
  out.lp_value = sol.value;
  if (sol.value <= 1e-12) {
    out.policy = fallback;
  } else {
    Policy pi(H, S, A);
    for (int j = 0; j <= hbar; ++j)
      detail::fill_policy_rows(pi, j, S, A, &sol.x[static_cast<std::size_t>(til(j, 0, 0))]);
    for (int h = hbar + 1; h < H; ++h)
      detail::fill_policy_rows(pi, h, S, A, &sol.x[static_cast<std::size_t>(hat(h, 0, 0))]);
    out.policy = std::move(pi);
  }
  const double reach =
      clipped_occupancy(cur, *in.trusted, out.policy, c).at(hbar, sbar, abar);
  const double reg =
      std::max(0.0, in.vhat_prev - evaluate_policy(prev, c, out.policy)
                                       .initial_value(prev.start_state()));
  out.objective = reach / (sa + in.eta * reg);
  return out;
}

// Threshold test of the trusted-transition definition for one layer:
// (s, a, s') is trusted iff objective(h,s,a) * Phat^h(s'|s,a) >= 1/zeta,
// with >= evaluated at tolerance 1e-12. `objectives` is the [S][A] table
// of attained cover-member objectives at layer h.
inline void trusted_transition_test(const TabularCMDP& estimate_cur,
                                    int context, int h,
                                    const std::vector<double>& objectives,
                                    double zeta,
                                    TrustedTransitionSet& trusted) {
  const int S = estimate_cur.num_states(), A = estimate_cur.num_actions();
  const double threshold = 1.0 / zeta;
  for (int s = 0; s < S; ++s)
    for (int a = 0; a < A; ++a) {
      const double obj = objectives[static_cast<std::size_t>(s) * A + a];
      auto row = estimate_cur.transition_row(context, h, s, a);
      for (int sp = 0; sp < S; ++sp)
        trusted.set(h, s, a, sp, obj * row[sp] >= threshold - 1e-12);
    }
}

// Policy cover: estimated-optimal policy at index 0 plus the per-(s,a)
// reach maximizers, deduplicated; at most SA+1 distinct members.
struct PolicyCover {
  std::vector<Policy> policies;
  std::vector<double> est_regrets;  // reghat_{m-1}(pi, c), aligned

  // Adds a policy unless it is already present; keeps index of the copy.
  int add(Policy pi, double est_regret) {
    for (std::size_t i = 0; i < policies.size(); ++i)
      if (policies[i] == pi) return static_cast<int>(i);
    policies.push_back(std::move(pi));
    est_regrets.push_back(est_regret);
    return static_cast<int>(policies.size() - 1);
  }
  int size() const { return static_cast<int>(policies.size()); }
};

struct IGWDistribution {
  std::vector<double> weights;
  double lambda = 0.0;

  int sample(RngStream& rng) const { return rng.next_categorical(weights); }
};

// Inverse Gap Weighting: weights 1/(lambda + eta * reghat(pi)) with lambda
// normalizing to a probability distribution. u(lambda) = sum of weights is
// strictly decreasing with u(0+) = inf (the cover holds a zero-regret
// member) and u(SA+1) <= 1, so bisection on (0, SA+1] finds the root.
inline IGWDistribution igw_distribution(const std::vector<double>& est_regrets,
                                        double eta, double lambda_max) {
  if (est_regrets.empty())
    throw std::invalid_argument("igw: empty cover");
  double min_reg = est_regrets[0];
  for (double r : est_regrets) min_reg = std::min(min_reg, r);
  if (min_reg > 1e-12)
    throw std::logic_error("igw: cover lacks a zero-regret member");
  if (static_cast<double>(est_regrets.size()) > lambda_max + 1e-9)
    throw std::logic_error("igw: cover larger than lambda bound");

  const auto u = [&](double lambda) {
    double sum = 0.0;
    for (double r : est_regrets) sum += 1.0 / (lambda + eta * r);
    return sum;
  };

  double lo = 0.0, hi = lambda_max, mid = lambda_max;
  double val = u(hi);
  if (val >= 1.0) {
    mid = hi;  // root at the boundary (all regrets ~ 0, full cover)
  } else {
    for (int it = 0; it < 200; ++it) {
      mid = 0.5 * (lo + hi);
      val = u(mid);
      if (std::abs(val - 1.0) <= 1e-12) break;
      if (val > 1.0)
        lo = mid;
      else
        hi = mid;
    }
  }

  IGWDistribution dist;
  dist.lambda = mid;
  dist.weights.resize(est_regrets.size());
  for (std::size_t i = 0; i < est_regrets.size(); ++i)
    dist.weights[i] = 1.0 / (mid + eta * est_regrets[i]);
  return dist;
}

// Closed-form alternative normalization: suboptimal members get weight
// 1/(2SA + eta*reghat) and the optimal member (index 0) collects the
// remainder. Provided as an option, not the default path.
inline IGWDistribution igw_distribution_falcon(
    const std::vector<double>& est_regrets, double eta, int sa) {
  IGWDistribution dist;
  dist.lambda = 2.0 * sa;
  dist.weights.resize(est_regrets.size());
  double rest = 0.0;
  for (std::size_t i = 1; i < est_regrets.size(); ++i) {
    dist.weights[i] = 1.0 / (2.0 * sa + eta * est_regrets[i]);
    rest += dist.weights[i];
  }
  dist.weights[0] = 1.0 - rest;
  return dist;
}

}  // namespace lolipop
