#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lolipop/cover.hpp"
#include "lolipop/env.hpp"
#include "lolipop/oracle.hpp"

namespace lolipop {

// Multiplier knobs on the epoch parameters; defaults reproduce the
// formulas as stated, c_gamma < 1 gives the "practical mode" used by the
// regret experiments.
struct AlgoConstants {
  double c_e = 1.0;
  double c_gamma = 1.0;
  double c_eta = 1.0;
  double c_zeta = 1.0;
};

// Epoch boundaries tau_1 < ... < tau_N = T/H (units of segment rounds).
class EpochSchedule {
 public:
  enum class Kind { kDoubling, kLogLog, kRewardFree };

  static EpochSchedule doubling(std::int64_t total_rounds, int horizon) {
    EpochSchedule s(Kind::kDoubling, total_rounds, horizon);
    const std::int64_t cap = s.segment_budget();
    for (std::int64_t tau = 2; tau < cap; tau *= 2) s.taus_.push_back(tau);
    s.taus_.push_back(cap);
    return s;
  }

  // Known-T schedule tau_m = ceil(2 (T/H)^(1 - 2^-m)), capped at T/H.
  static EpochSchedule loglog(std::int64_t total_rounds, int horizon) {
    EpochSchedule s(Kind::kLogLog, total_rounds, horizon);
    const std::int64_t cap = s.segment_budget();
    const double base = static_cast<double>(cap);
    for (int m = 1;; ++m) {
      const double raw = 2.0 * std::pow(base, 1.0 - std::pow(2.0, -m));
      std::int64_t tau = static_cast<std::int64_t>(std::ceil(raw - 1e-9));
      if (!s.taus_.empty() && tau <= s.taus_.back())
        tau = s.taus_.back() + 1;
      if (tau >= cap) {
        s.taus_.push_back(cap);
        break;
      }
      s.taus_.push_back(tau);
    }
    return s;
  }

  // Two epochs at tau_1 = T/(2H), tau_2 = T/H (pure exploration).
  static EpochSchedule reward_free(std::int64_t total_rounds, int horizon) {
    EpochSchedule s(Kind::kRewardFree, total_rounds, horizon);
    if (total_rounds % (2 * static_cast<std::int64_t>(horizon)) != 0)
      throw std::invalid_argument(
          "reward-free schedule requires T divisible by 2H");
    s.taus_ = {s.segment_budget() / 2, s.segment_budget()};
    return s;
  }

  Kind kind() const { return kind_; }
  std::int64_t total_rounds() const { return total_rounds_; }
  int horizon() const { return horizon_; }
  int num_epochs() const { return static_cast<int>(taus_.size()); }
  const std::vector<std::int64_t>& taus() const { return taus_; }

  // tau_m with tau_0 = tau_{-1} = 0; m is 1-based.
  std::int64_t tau(int m) const {
    if (m <= 0) return 0;
    return taus_[static_cast<std::size_t>(m - 1)];
  }

 private:
  EpochSchedule(Kind kind, std::int64_t total_rounds, int horizon)
      : kind_(kind), total_rounds_(total_rounds), horizon_(horizon) {
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
    if (total_rounds % horizon != 0)
      throw std::invalid_argument("schedule requires T divisible by H");
    if (total_rounds < 2 * static_cast<std::int64_t>(horizon))
      throw std::invalid_argument("schedule truncation: T < H * tau_1");
  }

  std::int64_t segment_budget() const { return total_rounds_ / horizon_; }

  Kind kind_;
  std::int64_t total_rounds_;
  int horizon_;
  std::vector<std::int64_t> taus_;
};

struct EpochParams {
  double budget = 1.0;  // oracle error budget E_m
  double gamma = 0.0;
  double eta = 0.0;
  double zeta = 0.0;
  std::int64_t n = 0;        // trajectories behind the previous estimate
  double delta_split = 0.0;  // per-epoch confidence
};

// Parameters for epoch m (1-based): E_m from the oracle budget at
// n = tau_{m-1} - tau_{m-2}, then
//   gamma_m = c_gamma sqrt(H^6 S^4 A^3 / E_m),
//   eta_m   = c_eta  gamma_m / (720 e H^5 S^3 A^2),
//   zeta_m  = c_zeta gamma_m / (8 e H (H+1)^2).
// Under doubling the N in the delta/(2N^2) split uses the running proxy
// N(m) = m; with a known-T schedule it is the exact epoch count.
inline EpochParams epoch_parameters(int m, const EpochSchedule& schedule,
                                    int class_size, double delta,
                                    const AlgoConstants& constants, int horizon,
                                    int num_states, int num_actions) {
  if (m < 1) throw std::invalid_argument("epoch index must be >= 1");
  EpochParams p;
  p.n = schedule.tau(m - 1) - schedule.tau(m - 2);
  const int n_split = schedule.kind() == EpochSchedule::Kind::kDoubling
                          ? m
                          : schedule.num_epochs();
  p.delta_split = delta / (2.0 * n_split * n_split);
  p.budget = oracle_error_budget(class_size, p.delta_split, p.n, constants.c_e);
  const double e = std::numbers::e;
  const double h = horizon, s = num_states, a = num_actions;
  const double hsa_power =
      std::pow(h, 6) * std::pow(s, 4) * std::pow(a, 3);
  p.gamma = constants.c_gamma * std::sqrt(hsa_power / p.budget);
  p.eta = constants.c_eta * p.gamma /
          (720.0 * e * std::pow(h, 5) * std::pow(s, 3) * a * a);
  p.zeta = constants.c_zeta * p.gamma / (8.0 * e * h * (h + 1.0) * (h + 1.0));
  return p;
}

struct RoundRow {
  std::int64_t t = 0;
  int epoch = 0;
  int segment = 0;
  int context = 0;
  double exp_regret = 0.0;
  double cum_regret = 0.0;
  std::int64_t oracle_calls = 0;
};

struct EpochRecord {
  int m = 0;
  std::int64_t tau = 0;
  EpochParams params;
};

struct RunRecord {
  std::vector<RoundRow> rows;
  std::vector<EpochRecord> epochs;
  std::int64_t total_oracle_calls = 0;
  bool realizability_warning = false;
  std::vector<Trajectory> trajectories;  // only when logging is enabled
};

// End-of-epoch snapshot used by the diagnostic suites.
struct EpochArtifacts {
  int m = 0;
  EpochParams params;
  TabularCMDP estimate_prev;
  TabularCMDP estimate_cur;
  std::map<int, TrustedTransitionSet> trusted;            // by context
  std::map<int, double> vhat_prev;                        // by context
  std::map<int, Policy> pihat_prev;                       // by context
  std::map<std::pair<int, int>, PolicyCover> covers;      // by (segment, c)
  std::map<std::pair<int, int>, IGWDistribution> weights;  // by (segment, c)
};

struct LolipopOptions {
  double delta = 0.05;
  AlgoConstants constants;
  std::uint64_t master_seed = 0;
  bool greedy_only = false;      // etc-greedy: play pihat, no cover, no IGW
  bool capture_epochs = false;   // build EpochArtifacts per epoch
  bool log_trajectories = false;
};

// The epoch/segment driver. One instance per run; not reusable.
class LolipopRunner {
 public:
  LolipopRunner(const TabularCMDP& truth, const ModelClass& model_class,
                const EpochSchedule& schedule, LolipopOptions options)
      : truth_(truth),
        class_(model_class),
        schedule_(schedule),
        options_(std::move(options)),
        oracle_(model_class),
        context_rng_(options_.master_seed, 0),
        policy_rng_(options_.master_seed, 1),
        rollout_rng_(options_.master_seed, 2) {
    truth_.validate();
    class_.validate();
    if (!class_.models.front().same_shape(truth_))
      throw std::invalid_argument("model class does not match truth shape");
    if (schedule_.horizon() != truth_.horizon())
      throw std::invalid_argument("schedule horizon mismatch");
    record_.realizability_warning = !class_.truth_index.has_value();
    estimate_prev_ = TabularCMDP::uniform_zero(
        truth_.num_contexts(), truth_.horizon(), truth_.num_states(),
        truth_.num_actions(), truth_.start_state());
    estimate_prev_.set_context_probs(truth_.context_probs());
  }

  RunRecord run() {
    const int H = truth_.horizon();
    const int C = truth_.num_contexts();
    std::int64_t t = 0;
    double cum = 0.0;
    for (int m = 1; m <= schedule_.num_epochs(); ++m) {
      begin_epoch(m);
      const std::int64_t seg_len = schedule_.tau(m) - schedule_.tau(m - 1);
      for (int hb = 0; hb < H; ++hb) {
        std::vector<Trajectory> batch;
        batch.reserve(static_cast<std::size_t>(seg_len));
        for (std::int64_t r = 0; r < seg_len; ++r) {
          ++t;
          const int c = sample_context(context_rng_, truth_.context_probs());
          double exp_regret = 0.0;
          const Policy* pi = nullptr;
          std::uint32_t pid = 0;
          if (options_.greedy_only) {
            ContextCache& cache = context_cache(c);
            pi = &cache.pihat;
            exp_regret = true_regret(c, cache.pihat, cache.pihat_true_regret);
          } else {
            SegmentCover& sc = segment_cover(hb, c);
            for (int i = 0; i < sc.cover.size(); ++i)
              exp_regret += sc.weights.weights[static_cast<std::size_t>(i)] *
                            sc.true_regrets[static_cast<std::size_t>(i)];
            const int k = sc.weights.sample(policy_rng_);
            pi = &sc.cover.policies[static_cast<std::size_t>(k)];
            pid = static_cast<std::uint32_t>(k);
          }
          Trajectory traj = rollout(truth_, c, *pi, rollout_rng_, pid);
          cum += exp_regret;
          record_.rows.push_back(
              {t, m, hb + 1, c, exp_regret, cum, oracle_.calls()});
          if (options_.log_trajectories) record_.trajectories.push_back(traj);
          batch.push_back(std::move(traj));
        }
        const OracleEstimate est = oracle_.estimate(batch);
        estimate_cur_.set_layer_from(
            class_.models[static_cast<std::size_t>(est.model_index)], hb);
      }
      finish_epoch(m, C);
    }
    record_.total_oracle_calls = oracle_.calls();
    return std::move(record_);
  }

  const std::vector<EpochArtifacts>& artifacts() const { return artifacts_; }
  const TabularCMDP& final_estimate() const { return estimate_prev_; }

 private:
  struct ContextCache {
    double vhat = 0.0;
    Policy pihat;
    double pihat_true_regret = -1.0;
    TrustedTransitionSet trusted;
    int member_layers = 0;   // cover members built for layers [0, this)
    int trusted_layers = 0;  // trusted sets built for layers [0, this)
    std::vector<std::vector<CoverMemberResult>> members;  // [layer][s*A+a]
  };

  struct SegmentCover {
    PolicyCover cover;
    IGWDistribution weights;
    std::vector<double> true_regrets;
  };

  void begin_epoch(int m) {
    params_ = epoch_parameters(m, schedule_, class_.size(), options_.delta,
                               options_.constants, truth_.horizon(),
                               truth_.num_states(), truth_.num_actions());
    record_.epochs.push_back({m, schedule_.tau(m), params_});
    estimate_cur_ = estimate_prev_;
    caches_.clear();
    segment_covers_.clear();
  }

  void finish_epoch(int m, int num_contexts) {
    if (options_.capture_epochs) {
      EpochArtifacts art;
      art.m = m;
      art.params = params_;
      art.estimate_prev = estimate_prev_;
      art.estimate_cur = estimate_cur_;
      for (int c = 0; c < num_contexts; ++c) {
        // Completing the cascade here is side-effect free: it only fills
        // this epoch's caches, which are discarded next.
        ContextCache& cache = context_cache(c);
        ensure_layers(cache, c, truth_.horizon() - 1);
        for (int hb = 0; hb < truth_.horizon(); ++hb) {
          SegmentCover& sc = segment_cover(hb, c);
          art.covers[{hb, c}] = sc.cover;
          art.weights[{hb, c}] = sc.weights;
        }
        art.trusted[c] = cache.trusted;
        art.vhat_prev[c] = cache.vhat;
        art.pihat_prev[c] = cache.pihat;
      }
      artifacts_.push_back(std::move(art));
    }
    // Persist this epoch's members as the next epoch's comparison point.
    for (auto& [c, cache] : caches_) {
      auto& slot = prev_members_[c];
      slot.resize(static_cast<std::size_t>(truth_.horizon()));
      for (int j = 0; j < cache.member_layers; ++j) {
        auto& layer = slot[static_cast<std::size_t>(j)];
        layer.resize(cache.members[static_cast<std::size_t>(j)].size());
        for (std::size_t i = 0; i < layer.size(); ++i)
          layer[i] = cache.members[static_cast<std::size_t>(j)][i].policy;
      }
    }
    estimate_prev_ = estimate_cur_;
  }

  ContextCache& context_cache(int c) {
    auto it = caches_.find(c);
    if (it != caches_.end()) return it->second;
    ContextCache cache;
    auto [values, greedy] = optimal_values(estimate_prev_, c);
    cache.vhat = values.initial_value(estimate_prev_.start_state());
    cache.pihat = std::move(greedy);
    cache.trusted = TrustedTransitionSet(
        truth_.horizon(), truth_.num_states(), truth_.num_actions());
    return caches_.emplace(c, std::move(cache)).first->second;
  }

  // Builds cover members for layers [0, up_to] and, just before layer j's
  // members, the trusted set at layer j-1 (whose estimate segment j-1 has
  // already produced by the time any caller needs layer j).
  void ensure_layers(ContextCache& cache, int c, int up_to) {
    const int S = truth_.num_states(), A = truth_.num_actions();
    while (cache.member_layers <= up_to) {
      const int j = cache.member_layers;
      if (j >= 1 && cache.trusted_layers < j) {
        // Layer j-1 estimate exists because segment j-1 < current one.
        std::vector<double> objectives(static_cast<std::size_t>(S) * A);
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < A; ++a)
            objectives[static_cast<std::size_t>(s) * A + a] =
                cache.members[static_cast<std::size_t>(j - 1)]
                             [static_cast<std::size_t>(s) * A + a]
                                 .objective;
        trusted_transition_test(estimate_cur_, c, j - 1, objectives,
                                params_.zeta, cache.trusted);
        cache.trusted_layers = j;
      }
      CoverInputs in{&estimate_cur_, &estimate_prev_, &cache.trusted,
                     c,              params_.eta,     cache.vhat};
      std::vector<CoverMemberResult> layer(static_cast<std::size_t>(S) * A);
      for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) {
          CoverMemberResult res = cover_member(in, j, s, a, cache.pihat);
          const Policy* prev = previous_member(c, j, s, a);
          if (prev != nullptr) {
            const double reach =
                clipped_occupancy(estimate_cur_, cache.trusted, *prev, c)
                    .at(j, s, a);
            const double reg = std::max(
                0.0, cache.vhat - evaluate_policy(estimate_prev_, c, *prev)
                                      .initial_value(truth_.start_state()));
            const double prev_obj = reach / (S * A + params_.eta * reg);
            if (prev_obj > res.objective) {
              res.policy = *prev;
              res.objective = prev_obj;
            }
          }
          layer[static_cast<std::size_t>(s) * A + a] = std::move(res);
        }
      cache.members.push_back(std::move(layer));
      cache.member_layers = j + 1;
    }
  }

  const Policy* previous_member(int c, int layer, int s, int a) const {
    auto it = prev_members_.find(c);
    if (it == prev_members_.end()) return nullptr;
    const auto& layers = it->second;
    if (layer >= static_cast<int>(layers.size())) return nullptr;
    const auto& row = layers[static_cast<std::size_t>(layer)];
    const std::size_t idx =
        static_cast<std::size_t>(s) * truth_.num_actions() + a;
    if (idx >= row.size()) return nullptr;
    return &row[idx];
  }

  SegmentCover& segment_cover(int hb, int c) {
    const auto key = std::make_pair(hb, c);
    auto it = segment_covers_.find(key);
    if (it != segment_covers_.end()) return it->second;

    ContextCache& cache = context_cache(c);
    ensure_layers(cache, c, hb);

    SegmentCover sc;
    sc.cover.add(cache.pihat, 0.0);
    const int S = truth_.num_states(), A = truth_.num_actions();
    for (int s = 0; s < S; ++s)
      for (int a = 0; a < A; ++a) {
        const auto& res = cache.members[static_cast<std::size_t>(hb)]
                                       [static_cast<std::size_t>(s) * A + a];
        const double reg =
            std::max(0.0, cache.vhat -
                              evaluate_policy(estimate_prev_, c, res.policy)
                                  .initial_value(truth_.start_state()));
        sc.cover.add(res.policy, reg);
      }
    sc.weights = igw_distribution(sc.cover.est_regrets, params_.eta,
                                  static_cast<double>(S * A + 1));
    sc.true_regrets.resize(sc.cover.policies.size());
    for (std::size_t i = 0; i < sc.cover.policies.size(); ++i) {
      double unused = -1.0;
      sc.true_regrets[i] = true_regret(c, sc.cover.policies[i], unused);
    }
    return segment_covers_.emplace(key, std::move(sc)).first->second;
  }

  double true_regret(int c, const Policy& pi, double& memo) {
    if (memo >= 0.0) return memo;
    auto it = vstar_.find(c);
    if (it == vstar_.end())
      it = vstar_
               .emplace(c, optimal_values(truth_, c).first.initial_value(
                               truth_.start_state()))
               .first;
    const double v =
        evaluate_policy(truth_, c, pi).initial_value(truth_.start_state());
    memo = std::max(0.0, it->second - v);
    return memo;
  }

  TabularCMDP truth_;
  ModelClass class_;
  EpochSchedule schedule_;
  LolipopOptions options_;
  MleOracle oracle_;
  RngStream context_rng_;
  RngStream policy_rng_;
  RngStream rollout_rng_;

  TabularCMDP estimate_prev_;
  TabularCMDP estimate_cur_;
  EpochParams params_;
  std::map<int, ContextCache> caches_;
  std::map<std::pair<int, int>, SegmentCover> segment_covers_;
  std::map<int, std::vector<std::vector<Policy>>> prev_members_;
  std::map<int, double> vstar_;
  RunRecord record_;
  std::vector<EpochArtifacts> artifacts_;
};

inline RunRecord run_lolipop(const TabularCMDP& truth,
                             const ModelClass& model_class,
                             const EpochSchedule& schedule,
                             const LolipopOptions& options) {
  LolipopRunner runner(truth, model_class, schedule, options);
  return runner.run();
}

// Reward-free variant: two epochs at tau = {T/(2H), T/H}; the class must
// carry identically-zero rewards and the returned estimate is the
// epoch-2 model (its transition kernels are the object of interest).
inline std::pair<TabularCMDP, RunRecord> run_reward_free(
    const TabularCMDP& truth, const ModelClass& model_class,
    std::int64_t total_rounds, const LolipopOptions& options) {
  if (!model_class.all_zero_reward())
    throw std::invalid_argument("reward-free requires an all-zero-reward class");
  if (!truth.rewards().all_zero())
    throw std::invalid_argument("reward-free requires a zero-reward truth");
  const EpochSchedule schedule =
      EpochSchedule::reward_free(total_rounds, truth.horizon());
  LolipopRunner runner(truth, model_class, schedule, options);
  RunRecord record = runner.run();
  return {runner.final_estimate(), std::move(record)};
}

// Fixed-policy baselines share the context stream with the runner so that
// regret traces are comparable round for round.
inline RunRecord run_fixed_policy_baseline(
    const TabularCMDP& truth, std::int64_t total_rounds,
    std::uint64_t master_seed,
    const std::function<const Policy&(int context)>& policy_for,
    bool log_trajectories = false) {
  RngStream context_rng(master_seed, 0);
  RngStream rollout_rng(master_seed, 2);
  RunRecord record;
  std::map<int, double> regret_memo;
  double cum = 0.0;
  for (std::int64_t t = 1; t <= total_rounds; ++t) {
    const int c = sample_context(context_rng, truth.context_probs());
    const Policy& pi = policy_for(c);
    auto it = regret_memo.find(c);
    if (it == regret_memo.end())
      it = regret_memo.emplace(c, regret_of(truth, c, pi)).first;
    cum += it->second;
    record.rows.push_back({t, 0, 0, c, it->second, cum, 0});
    if (log_trajectories)
      record.trajectories.push_back(rollout(truth, c, pi, rollout_rng));
  }
  return record;
}

inline RunRecord run_uniform_baseline(const TabularCMDP& truth,
                                      std::int64_t total_rounds,
                                      std::uint64_t master_seed) {
  const Policy uniform = Policy::uniform(
      truth.horizon(), truth.num_states(), truth.num_actions());
  return run_fixed_policy_baseline(
      truth, total_rounds, master_seed,
      [&uniform](int) -> const Policy& { return uniform; });
}

inline RunRecord run_oracle_optimal_baseline(const TabularCMDP& truth,
                                             std::int64_t total_rounds,
                                             std::uint64_t master_seed) {
  std::map<int, Policy> by_context;
  for (int c = 0; c < truth.num_contexts(); ++c)
    by_context.emplace(c, optimal_values(truth, c).second);
  return run_fixed_policy_baseline(
      truth, total_rounds, master_seed,
      [&by_context](int c) -> const Policy& { return by_context.at(c); });
}

}  // namespace lolipop
