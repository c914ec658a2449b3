#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "lolipop/oracle.hpp"
#include "lolipop/rng.hpp"

namespace lolipop {

enum class RewardMode { kBernoulliStep, kZero };

struct GenSpec {
  int num_states = 2;
  int num_actions = 2;
  int horizon = 2;
  int num_contexts = 1;
  int class_size = 1;
  double separation = 0.0;  // min pairwise max-slot squared Hellinger
  RewardMode reward_mode = RewardMode::kBernoulliStep;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_states < 1 || num_actions < 1 || horizon < 1 || num_contexts < 1)
      throw std::invalid_argument("gen spec: dimensions must be positive");
    if (class_size < 1)
      throw std::invalid_argument("gen spec: class_size must be >= 1");
    if (separation < 0.0)
      throw std::invalid_argument("gen spec: separation must be >= 0");
  }
};

namespace detail {

// Dirichlet(1) row via normalized exponentials; gamma-free so the draw is
// reproducible from the shared RNG family alone.
inline std::vector<double> dirichlet_row(RngStream& rng, int n) {
  std::vector<double> row(static_cast<std::size_t>(n));
  double sum = 0.0;
  for (double& v : row) {
    v = -std::log(rng.next_double_open());
    sum += v;
  }
  for (double& v : row) v /= sum;
  return row;
}

inline TabularCMDP random_model(const GenSpec& spec, RngStream& rng) {
  TabularCMDP m(spec.num_contexts, spec.horizon, spec.num_states,
                spec.num_actions, 0);
  for (int c = 0; c < spec.num_contexts; ++c)
    for (int h = 0; h < spec.horizon; ++h)
      for (int s = 0; s < spec.num_states; ++s)
        for (int a = 0; a < spec.num_actions; ++a) {
          m.set_transition_row(c, h, s, a,
                               dirichlet_row(rng, spec.num_states));
          if (spec.reward_mode == RewardMode::kZero) {
            m.set_reward(c, h, s, a, DiscreteDistribution::point_mass(0.0));
          } else {
            const double p = rng.next_double();
            m.set_reward(c, h, s, a, DiscreteDistribution::bernoulli_scaled(
                                         1.0 / spec.horizon, p));
          }
        }
  return m;
}

// max over (c,h,s,a) of the single-step squared Hellinger between two
// models, over both transition rows and reward distributions.
inline double max_slot_hellinger(const TabularCMDP& a, const TabularCMDP& b) {
  double best = 0.0;
  for (int c = 0; c < a.num_contexts(); ++c)
    for (int h = 0; h < a.horizon(); ++h)
      for (int s = 0; s < a.num_states(); ++s)
        for (int x = 0; x < a.num_actions(); ++x) {
          best = std::max(best, hellinger_sq(a.transition_row(c, h, s, x),
                                             b.transition_row(c, h, s, x)));
          best = std::max(best, hellinger_sq(a.reward(c, h, s, x),
                                             b.reward(c, h, s, x)));
        }
  return best;
}

}  // namespace detail

// Samples a realizable class of `class_size` models with Dirichlet(1)
// transition rows and Bernoulli step rewards, enforcing pairwise
// separation by rejection (whole-class resample). Deterministic in seed.
inline ModelClass generate_class(const GenSpec& spec, int max_retries = 500) {
  spec.validate();
  RngStream rng(spec.seed, 10);
  for (int attempt = 0; attempt < max_retries; ++attempt) {
    ModelClass mc;
    for (int k = 0; k < spec.class_size; ++k)
      mc.models.push_back(detail::random_model(spec, rng));
    bool separated = true;
    for (std::size_t i = 0; i + 1 < mc.models.size() && separated; ++i)
      for (std::size_t j = i + 1; j < mc.models.size(); ++j)
        if (detail::max_slot_hellinger(mc.models[i], mc.models[j]) <
            spec.separation) {
          separated = false;
          break;
        }
    if (!separated) continue;
    mc.truth_index =
        rng.next_categorical(std::vector<double>(
            static_cast<std::size_t>(spec.class_size),
            1.0 / spec.class_size));
    mc.validate();
    return mc;
  }
  throw std::runtime_error("generate_class: separation unreachable");
}

// A chain of needle instances: `class_size` models sharing every
// transition row and all-zero rewards except one slot (the needle), where
// the means sit on the positive grid (k+1)/((K+1) H). Adjacent members
// differ by exactly gap = 1/((K+1) H) at a single (h,s,a): each pair is a
// classic hard pair. Layer-1 transitions out of the start state are
// action-independent, so steering the first action is free.
inline ModelClass needle_class(int num_states, int num_actions, int horizon,
                               int num_contexts, int class_size,
                               std::uint64_t seed) {
  if (num_states < 1 || num_actions < 1 || horizon < 1 || class_size < 2)
    throw std::invalid_argument("needle_class: bad dimensions");
  RngStream rng(seed, 11);
  TabularCMDP base(num_contexts, horizon, num_states, num_actions, 0);
  for (int c = 0; c < num_contexts; ++c)
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states; ++s) {
        std::vector<double> shared =
            detail::dirichlet_row(rng, num_states);
        if (h == 0 && s == 0 && num_states >= 2) {
          // Tilt the shared start-state row toward the needle state and
          // vary its reach across contexts.
          const double reach =
              0.65 + 0.3 * (num_contexts > 1
                                ? static_cast<double>(c) / (num_contexts - 1)
                                : 0.0);
          std::vector<double> row(static_cast<std::size_t>(num_states), 0.0);
          row[1] = reach;
          row[0] = 1.0 - reach;
          shared = row;
        }
        for (int a = 0; a < num_actions; ++a) {
          base.set_transition_row(c, h, s, a, shared);
          base.set_reward(c, h, s, a, DiscreteDistribution::point_mass(0.0));
        }
      }
  const int needle_h = horizon - 1;
  const int needle_s = horizon == 1 ? 0 : std::min(1, num_states - 1);
  const int needle_a = num_actions - 1;
  ModelClass mc;
  for (int k = 0; k < class_size; ++k) {
    TabularCMDP m = base;
    const double p = static_cast<double>(k + 1) / (class_size + 1);
    for (int c = 0; c < num_contexts; ++c)
      m.set_reward(c, needle_h, needle_s, needle_a,
                   DiscreteDistribution::bernoulli_scaled(1.0 / horizon, p));
    mc.models.push_back(std::move(m));
  }
  mc.truth_index = class_size - 1;
  mc.validate();
  return mc;
}

// Two models differing only in one (h,s,a) reward mean by `gap`; the
// bandit-style needle instance used by the regret sanity checks.
inline ModelClass hard_pair(int num_states, int num_actions, int horizon,
                            double gap, int num_contexts = 1,
                            std::uint64_t seed = 0) {
  if (!(gap > 0.0 && gap <= 1.0 / horizon + kProbTol))
    throw std::invalid_argument("hard_pair: gap must lie in (0, 1/H]");
  RngStream rng(seed, 12);
  TabularCMDP base(num_contexts, horizon, num_states, num_actions, 0);
  for (int c = 0; c < num_contexts; ++c)
    for (int h = 0; h < horizon; ++h)
      for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) {
          base.set_transition_row(c, h, s, a,
                                  detail::dirichlet_row(rng, num_states));
          base.set_reward(c, h, s, a, DiscreteDistribution::point_mass(0.0));
        }
  const int needle_h = horizon - 1;
  const int needle_s = horizon == 1 ? 0 : std::min(1, num_states - 1);
  const int needle_a = num_actions - 1;
  const double cap = 1.0 / horizon;
  const double base_mean = (cap - gap) / 2.0;
  ModelClass mc;
  for (int k = 0; k < 2; ++k) {
    TabularCMDP m = base;
    const double mean = base_mean + k * gap;
    for (int c = 0; c < num_contexts; ++c)
      m.set_reward(c, needle_h, needle_s, needle_a,
                   DiscreteDistribution::bernoulli_scaled(cap, mean / cap));
    mc.models.push_back(std::move(m));
  }
  mc.truth_index = 1;
  mc.validate();
  return mc;
}

}  // namespace lolipop
