#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "lolipop/rng.hpp"

namespace lolipop {

inline constexpr double kProbTol = 1e-12;  // probability-vector validation

inline bool is_probability_vector(std::span<const double> p,
                                  double tol = kProbTol) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

inline void require_probability_vector(std::span<const double> p,
                                       const char* what) {
  if (!is_probability_vector(p))
    throw std::invalid_argument(std::string(what) +
                                ": not a probability vector");
}

// Finite-support distribution over real values. Canonical form: support
// sorted ascending, duplicate values merged.
class DiscreteDistribution {
 public:
  DiscreteDistribution() = default;

  DiscreteDistribution(std::vector<double> values, std::vector<double> probs) {
    if (values.size() != probs.size() || values.empty())
      throw std::invalid_argument("distribution: size mismatch or empty");
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    for (std::size_t i : order) {
      if (!values_.empty() && values[i] == values_.back()) {
        probs_.back() += probs[i];
      } else {
        values_.push_back(values[i]);
        probs_.push_back(probs[i]);
      }
    }
    require_probability_vector(probs_, "distribution");
    mean_ = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i)
      mean_ += values_[i] * probs_[i];
  }

  static DiscreteDistribution point_mass(double value) {
    return DiscreteDistribution({value}, {1.0});
  }

  // Two-point distribution on {0, high} with P(high) = p.
  static DiscreteDistribution bernoulli_scaled(double high, double p) {
    return DiscreteDistribution({0.0, high}, {1.0 - p, p});
  }

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& probs() const { return probs_; }
  double mean() const { return mean_; }

  double min_value() const { return values_.front(); }
  double max_value() const { return values_.back(); }

  // Probability of an exact support value (0 if absent).
  double prob_of(double value) const {
    auto it = std::lower_bound(values_.begin(), values_.end(), value);
    if (it == values_.end() || *it != value) return 0.0;
    return probs_[static_cast<std::size_t>(it - values_.begin())];
  }

  double sample(RngStream& rng) const {
    return values_[static_cast<std::size_t>(rng.next_categorical(probs_))];
  }

  bool operator==(const DiscreteDistribution& o) const {
    return values_ == o.values_ && probs_ == o.probs_;
  }

 private:
  std::vector<double> values_;
  std::vector<double> probs_;
  double mean_ = 0.0;
};

// Squared Hellinger distance with the 1/2 normalization:
// D^2(p, q) = 1 - sum_x sqrt(p(x) q(x)), in [0, 1].
inline double hellinger_sq(std::span<const double> p,
                           std::span<const double> q) {
  if (p.size() != q.size())
    throw std::invalid_argument("hellinger_sq: size mismatch");
  double bc = 0.0;  // Bhattacharyya coefficient
  for (std::size_t i = 0; i < p.size(); ++i) bc += std::sqrt(p[i] * q[i]);
  return std::clamp(1.0 - bc, 0.0, 1.0);
}

// Same on finite-support distributions, over the union of supports.
inline double hellinger_sq(const DiscreteDistribution& p,
                           const DiscreteDistribution& q) {
  double bc = 0.0;
  std::size_t i = 0, j = 0;
  const auto& pv = p.values();
  const auto& qv = q.values();
  while (i < pv.size() && j < qv.size()) {
    if (pv[i] < qv[j]) {
      ++i;  // q-mass 0 there
    } else if (qv[j] < pv[i]) {
      ++j;
    } else {
      bc += std::sqrt(p.probs()[i] * q.probs()[j]);
      ++i;
      ++j;
    }
  }
  return std::clamp(1.0 - bc, 0.0, 1.0);
}

}  // namespace lolipop
