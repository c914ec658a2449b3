#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "lolipop/cmdp.hpp"
#include "lolipop/env.hpp"

namespace lolipop {

// Finite model class sharing (C, H, S, A, start state). truth_index marks
// the data-generating member in realizable experiments.
struct ModelClass {
  std::vector<TabularCMDP> models;
  std::optional<int> truth_index;

  int size() const { return static_cast<int>(models.size()); }

  void validate() const {
    if (models.empty()) throw std::invalid_argument("empty model class");
    for (const auto& m : models) {
      m.validate();
      if (!m.same_shape(models.front()))
        throw std::invalid_argument("model class: inconsistent shapes");
    }
    if (truth_index &&
        (*truth_index < 0 || *truth_index >= static_cast<int>(models.size())))
      throw std::invalid_argument("truth_index out of range");
  }

  const TabularCMDP& truth() const {
    if (!truth_index) throw std::logic_error("model class has no truth_index");
    return models[static_cast<std::size_t>(*truth_index)];
  }

  bool all_zero_reward() const {
    for (const auto& m : models)
      if (!m.rewards().all_zero()) return false;
    return true;
  }
};

struct OracleEstimate {
  int model_index = 0;
  double log_likelihood = 0.0;
  std::int64_t call_id = 0;
};

// Log-likelihood of a trajectory under a model. Policy factors are common
// to every model and cancel in the argmax, so they are omitted. Any
// zero-probability factor yields -infinity; a reward value outside the
// model's support is such a factor, not an error.
inline double log_likelihood(const TabularCMDP& model, const Trajectory& traj) {
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (static_cast<int>(traj.steps.size()) != model.horizon())
    throw std::invalid_argument("trajectory horizon mismatch");
  model.check_context(traj.context);
  const int H = model.horizon();
  double ll = 0.0;
  for (int h = 0; h < H; ++h) {
    const auto& st = traj.steps[static_cast<std::size_t>(h)];
    const double pr =
        model.reward(traj.context, h, st.state, st.action).prob_of(st.reward);
    if (pr == 0.0) return kNegInf;
    ll += std::log(pr);
    if (h + 1 < H) {
      const double pt = model.transition_row(traj.context, h, st.state,
                                             st.action)[traj.steps[h + 1].state];
      if (pt == 0.0) return kNegInf;
      ll += std::log(pt);
    }
  }
  return ll;
}

// Exact maximum-likelihood selection over a finite class. Ties (including
// the all -infinity case) resolve to the smallest index; an empty batch
// returns index 0 with log-likelihood 0 (the vacuous epoch-1 input). Each
// call bumps the shared counter by exactly one.
class MleOracle {
 public:
  explicit MleOracle(const ModelClass& model_class) : class_(&model_class) {}

  OracleEstimate estimate(std::span<const Trajectory> trajectories) {
    const std::int64_t id = ++calls_;
    if (trajectories.empty()) return {0, 0.0, id};
    int best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < class_->size(); ++k) {
      double ll = 0.0;
      for (const auto& traj : trajectories) {
        ll += log_likelihood(class_->models[static_cast<std::size_t>(k)], traj);
        if (std::isinf(ll)) break;
      }
      if (ll > best_ll) {
        best_ll = ll;
        best = k;
      }
    }
    return {best, best_ll, id};
  }

  std::int64_t calls() const { return calls_.load(); }

 private:
  const ModelClass* class_;
  std::atomic<std::int64_t> calls_{0};
};

// Oracle error budget E(n) = min(1, c_E * log(class_size / delta) / n),
// clamped at 1 because squared Hellinger is bounded by 1; n = 0 means no
// data and maximal uncertainty.
inline double oracle_error_budget(int class_size, double delta,
                                  std::int64_t n, double c_e = 1.0) {
  if (class_size < 1) throw std::invalid_argument("class_size must be >= 1");
  if (!(delta > 0.0 && delta < 0.5))
    throw std::invalid_argument("delta must lie in (0, 1/2)");
  if (n < 0) throw std::invalid_argument("n must be nonnegative");
  const double raw =
      c_e * std::log(static_cast<double>(class_size) / delta) /
      static_cast<double>(std::max<std::int64_t>(n, 1));
  return std::min(1.0, n == 0 ? 1.0 : raw);
}

}  // namespace lolipop
