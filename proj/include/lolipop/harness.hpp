#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lolipop/algo.hpp"
#include "lolipop/gen.hpp"
#include "lolipop/model_io.hpp"

namespace lolipop {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string class_file;           // either a class file path...
  std::optional<GenSpec> gen_spec;  // ...or an inline generator spec
  std::string algorithm = "lolipop";  // lolipop|uniform|etc-greedy|oracle-optimal
  std::string schedule = "doubling";  // doubling|loglog
  std::int64_t total_rounds = 0;
  double delta = 0.05;
  AlgoConstants constants;
  std::vector<std::uint64_t> seeds;
  std::string out_dir = ".";
  bool log_trajectories = false;

  void validate() const {
    if (class_file.empty() == !gen_spec.has_value())
      throw ConfigError("exactly one instance source (file or gen) required");
    if (algorithm != "lolipop" && algorithm != "uniform" &&
        algorithm != "etc-greedy" && algorithm != "oracle-optimal")
      throw ConfigError("unknown algorithm: " + algorithm);
    if (schedule != "doubling" && schedule != "loglog")
      throw ConfigError("unknown schedule: " + schedule);
    if (total_rounds < 1) throw ConfigError("T must be positive");
    if (!(delta > 0.0 && delta < 0.5))
      throw ConfigError("delta must lie in (0, 1/2)");
    if (seeds.empty()) throw ConfigError("seeds must be nonempty");
  }
};

inline GenSpec gen_spec_from_json(const json& j) {
  GenSpec g;
  g.num_states = j.value("S", g.num_states);
  g.num_actions = j.value("A", g.num_actions);
  g.horizon = j.value("H", g.horizon);
  g.num_contexts = j.value("contexts", g.num_contexts);
  g.class_size = j.value("class_size", g.class_size);
  g.separation = j.value("separation", g.separation);
  g.seed = j.value("seed", static_cast<std::uint64_t>(0));
  const std::string mode = j.value("reward_mode", std::string("bernoulli-step"));
  if (mode == "bernoulli-step")
    g.reward_mode = RewardMode::kBernoulliStep;
  else if (mode == "zero")
    g.reward_mode = RewardMode::kZero;
  else
    throw ConfigError("unknown reward_mode: " + mode);
  return g;
}

inline ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  if (j.contains("instance")) {
    const auto& inst = j.at("instance");
    if (inst.contains("file")) cfg.class_file = inst.at("file").get<std::string>();
    if (inst.contains("gen")) cfg.gen_spec = gen_spec_from_json(inst.at("gen"));
  }
  cfg.algorithm = j.value("algorithm", cfg.algorithm);
  cfg.schedule = j.value("schedule", cfg.schedule);
  cfg.total_rounds = j.value("T", cfg.total_rounds);
  cfg.delta = j.value("delta", cfg.delta);
  if (j.contains("constants")) {
    const auto& c = j.at("constants");
    cfg.constants.c_e = c.value("c_e", 1.0);
    cfg.constants.c_gamma = c.value("c_gamma", 1.0);
    cfg.constants.c_eta = c.value("c_eta", 1.0);
    cfg.constants.c_zeta = c.value("c_zeta", 1.0);
  }
  if (j.contains("seeds"))
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.log_trajectories = j.value("log_trajectories", false);
  return cfg;
}

namespace detail {

// Shortest-round-trip decimal; identical bytes for identical doubles.
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("median of empty set");
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

inline double mean(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) /
         static_cast<double>(xs.size());
}

}  // namespace detail

inline std::string regret_csv(const RunRecord& record) {
  std::ostringstream out;
  out << "t,epoch,segment,context,exp_regret,cum_regret,oracle_calls\n";
  for (const auto& row : record.rows)
    out << row.t << ',' << row.epoch << ',' << row.segment << ','
        << row.context << ',' << detail::fmt_double(row.exp_regret) << ','
        << detail::fmt_double(row.cum_regret) << ',' << row.oracle_calls
        << '\n';
  return out.str();
}

// One wide CSV row per round: seed, t, epoch, segment, context, then
// per-layer s/a/r columns.
inline std::string trajectory_csv(const RunRecord& record, std::uint64_t seed,
                                  int horizon) {
  std::ostringstream out;
  out << "seed,t,epoch,segment,context";
  for (int h = 1; h <= horizon; ++h)
    out << ",s" << h << ",a" << h << ",r" << h;
  out << '\n';
  for (std::size_t i = 0; i < record.trajectories.size(); ++i) {
    const auto& row = record.rows[i];
    const auto& traj = record.trajectories[i];
    out << seed << ',' << row.t << ',' << row.epoch << ',' << row.segment
        << ',' << row.context;
    for (const auto& step : traj.steps)
      out << ',' << step.state << ',' << step.action << ','
          << detail::fmt_double(step.reward);
    out << '\n';
  }
  return out.str();
}

struct SeedResult {
  std::uint64_t seed = 0;
  double final_cum_regret = 0.0;
  std::int64_t oracle_calls = 0;
  std::string csv_path;
};

struct ExperimentResult {
  std::vector<SeedResult> per_seed;
  double mean_final = 0.0;
  double median_final = 0.0;
  double wall_time_sec = 0.0;
  std::string summary_path;
};

inline ModelClass resolve_instance(const ExperimentConfig& cfg) {
  if (!cfg.class_file.empty()) return load_model_class(cfg.class_file);
  return generate_class(*cfg.gen_spec);
}

inline RunRecord run_algorithm(const ExperimentConfig& cfg,
                               const TabularCMDP& truth,
                               const ModelClass& model_class,
                               std::uint64_t seed) {
  if (cfg.algorithm == "uniform")
    return run_uniform_baseline(truth, cfg.total_rounds, seed);
  if (cfg.algorithm == "oracle-optimal")
    return run_oracle_optimal_baseline(truth, cfg.total_rounds, seed);
  const EpochSchedule schedule =
      cfg.schedule == "doubling"
          ? EpochSchedule::doubling(cfg.total_rounds, truth.horizon())
          : EpochSchedule::loglog(cfg.total_rounds, truth.horizon());
  LolipopOptions options;
  options.delta = cfg.delta;
  options.constants = cfg.constants;
  options.master_seed = seed;
  options.greedy_only = cfg.algorithm == "etc-greedy";
  options.log_trajectories = cfg.log_trajectories;
  return run_lolipop(truth, model_class, schedule, options);
}

// Fans seeds out to a small worker pool (each worker owns its RNG streams
// and output file) and aggregates the summary sequentially.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const ModelClass model_class = resolve_instance(cfg);
  if (!model_class.truth_index)
    throw ConfigError("instance has no truth_index; cannot simulate");
  const TabularCMDP& truth = model_class.truth();

  std::filesystem::create_directories(cfg.out_dir);
  std::vector<SeedResult> results(cfg.seeds.size());
  std::atomic<std::size_t> next{0};
  const unsigned workers = std::max(
      1u, std::min(static_cast<unsigned>(cfg.seeds.size()),
                   std::thread::hardware_concurrency()));
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cfg.seeds.size()) return;
      const std::uint64_t seed = cfg.seeds[i];
      RunRecord record = run_algorithm(cfg, truth, model_class, seed);
      SeedResult res;
      res.seed = seed;
      res.final_cum_regret =
          record.rows.empty() ? 0.0 : record.rows.back().cum_regret;
      res.oracle_calls = record.total_oracle_calls;
      res.csv_path = cfg.out_dir + "/regret_seed" + std::to_string(seed) +
                     ".csv";
      std::ofstream out(res.csv_path);
      out << regret_csv(record);
      if (cfg.log_trajectories) {
        std::ofstream tout(cfg.out_dir + "/trajectories_seed" +
                           std::to_string(seed) + ".csv");
        tout << trajectory_csv(record, seed, truth.horizon());
      }
      results[i] = std::move(res);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 0; w + 1 < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();

  ExperimentResult out;
  out.per_seed = std::move(results);
  std::vector<double> finals;
  for (const auto& r : out.per_seed) finals.push_back(r.final_cum_regret);
  out.mean_final = detail::mean(finals);
  out.median_final = detail::median(finals);
  out.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();

  json summary;
  summary["algorithm"] = cfg.algorithm;
  summary["T"] = cfg.total_rounds;
  json per_seed = json::array();
  for (const auto& r : out.per_seed)
    per_seed.push_back({{"seed", r.seed},
                        {"final_cum_regret", r.final_cum_regret},
                        {"oracle_calls", r.oracle_calls}});
  summary["per_seed"] = std::move(per_seed);
  summary["mean_final_cum_regret"] = out.mean_final;
  summary["median_final_cum_regret"] = out.median_final;
  summary["wall_time_sec"] = out.wall_time_sec;
  out.summary_path = cfg.out_dir + "/summary.json";
  std::ofstream sout(out.summary_path);
  sout << summary.dump(2) << "\n";
  return out;
}

// Invariant battery behind the `check` subcommand. Returns true when every
// check passes; prints one line per check.
inline bool run_check(const ModelClass& model_class, int num_policies,
                      std::uint64_t seed, std::ostream& out) {
  bool ok = true;
  auto report = [&](const char* name, bool pass) {
    out << "[check] " << name << ": " << (pass ? "ok" : "FAIL") << "\n";
    ok = ok && pass;
  };

  bool valid = true;
  try {
    model_class.validate();
  } catch (const std::exception&) {
    valid = false;
  }
  report("model validation", valid);
  if (!valid) return false;

  const auto& models = model_class.models;
  const int H = models[0].horizon(), S = models[0].num_states(),
            A = models[0].num_actions();
  RngStream rng(seed, 30);
  auto random_policy = [&]() {
    Policy pi(H, S, A);
    for (int h = 0; h < H; ++h)
      for (int s = 0; s < S; ++s) pi.set_row(h, s, detail::dirichlet_row(rng, A));
    return pi;
  };

  bool consistency = true, optimality = true, nonneg = true;
  for (const auto& m : models)
    for (int c = 0; c < m.num_contexts(); ++c) {
      const double vstar =
          optimal_values(m, c).first.initial_value(m.start_state());
      for (int k = 0; k < num_policies; ++k) {
        const Policy pi = random_policy();
        const double v =
            evaluate_policy(m, c, pi).initial_value(m.start_state());
        const OccupancyTable d = occupancy_of(m, c, pi);
        double via_occupancy = 0.0;
        for (int h = 0; h < H; ++h)
          for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a)
              via_occupancy += d.at(h, s, a) * m.mean_reward(c, h, s, a);
        consistency = consistency && std::abs(v - via_occupancy) <= kValueTol;
        optimality = optimality && v <= vstar + kValueTol;
        nonneg = nonneg && regret_of(m, c, pi) >= 0.0;
      }
    }
  report("occupancy/value consistency", consistency);
  report("greedy optimality", optimality);
  report("regret nonnegativity", nonneg);

  bool simlemma = true;
  for (std::size_t i = 0; i + 1 < models.size(); ++i) {
    const Policy pi = random_policy();
    for (int c = 0; c < models[i].num_contexts(); ++c) {
      const auto [lhs, rhs] =
          simulation_gap_bound(models[i], models[i + 1], c, pi);
      simlemma = simlemma && lhs <= rhs + 1e-9;
    }
  }
  report("simulation gap bound", simlemma);

  const json once = model_class_to_json(model_class);
  const json twice = model_class_to_json(model_class_from_json(once));
  report("serialization round trip", once.dump() == twice.dump());
  return ok;
}

// Exact reward-free evaluation: for random (reward function, per-context
// policy set) pairs, the context-averaged absolute value gap between the
// truth and the estimate, both evaluated by dynamic programming.
inline std::vector<double> reward_free_eval(const TabularCMDP& truth,
                                            const TabularCMDP& estimate,
                                            int num_pairs,
                                            std::uint64_t eval_seed) {
  RngStream rng(eval_seed, 20);
  const int C = truth.num_contexts(), H = truth.horizon(),
            S = truth.num_states(), A = truth.num_actions();
  std::vector<double> errors;
  errors.reserve(static_cast<std::size_t>(num_pairs));
  for (int k = 0; k < num_pairs; ++k) {
    RewardFunction rewards(C, H, S, A);
    for (int c = 0; c < C; ++c)
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s)
          for (int a = 0; a < A; ++a)
            rewards.at(c, h, s, a) = DiscreteDistribution::bernoulli_scaled(
                1.0 / H, rng.next_double());
    const TabularCMDP truth_r = truth.with_rewards(rewards);
    const TabularCMDP est_r = estimate.with_rewards(rewards);
    double err = 0.0;
    for (int c = 0; c < C; ++c) {
      Policy pi(H, S, A);
      for (int h = 0; h < H; ++h)
        for (int s = 0; s < S; ++s) {
          const auto row = detail::dirichlet_row(rng, A);
          pi.set_row(h, s, row);
        }
      const double vt =
          evaluate_policy(truth_r, c, pi).initial_value(truth.start_state());
      const double ve =
          evaluate_policy(est_r, c, pi).initial_value(truth.start_state());
      err += truth.context_probs()[static_cast<std::size_t>(c)] *
             std::abs(vt - ve);
    }
    errors.push_back(err);
  }
  return errors;
}

}  // namespace lolipop
