// Command-line front end: instance generation, regret experiments, the
// reward-free variant, and the invariant battery.

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lolipop/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct GenArgs {
  std::string mode = "random";  // random | needle | hard-pair
  int S = 2, A = 2, H = 2, contexts = 1, class_size = 4;
  double separation = 0.0;
  double gap = 0.25;
  std::string reward_mode = "bernoulli-step";
  std::uint64_t seed = 0;
  std::string out = "class.json";
};

int do_gen(const GenArgs& args) {
  lolipop::ModelClass mc;
  if (args.mode == "random") {
    lolipop::GenSpec spec;
    spec.num_states = args.S;
    spec.num_actions = args.A;
    spec.horizon = args.H;
    spec.num_contexts = args.contexts;
    spec.class_size = args.class_size;
    spec.separation = args.separation;
    spec.seed = args.seed;
    if (args.reward_mode == "zero")
      spec.reward_mode = lolipop::RewardMode::kZero;
    else if (args.reward_mode != "bernoulli-step")
      throw lolipop::ConfigError("unknown reward mode: " + args.reward_mode);
    mc = lolipop::generate_class(spec);
  } else if (args.mode == "needle") {
    mc = lolipop::needle_class(args.S, args.A, args.H, args.contexts,
                               args.class_size, args.seed);
  } else if (args.mode == "hard-pair") {
    mc = lolipop::hard_pair(args.S, args.A, args.H, args.gap, args.contexts,
                            args.seed);
  } else {
    throw lolipop::ConfigError("unknown gen mode: " + args.mode);
  }
  lolipop::save_model_class(mc, args.out);
  std::cout << "wrote " << mc.size() << " models to " << args.out << "\n";
  return kExitOk;
}

struct RewardFreeArgs {
  std::string class_file;
  std::int64_t T = 1024;
  double delta = 0.05;
  std::vector<std::uint64_t> seeds = {0};
  int eval_pairs = 100;
  std::uint64_t eval_seed = 12345;
  std::string out = ".";
  lolipop::AlgoConstants constants;
};

int do_reward_free(const RewardFreeArgs& args) {
  const lolipop::ModelClass mc = lolipop::load_model_class(args.class_file);
  if (!mc.truth_index)
    throw lolipop::ConfigError("class file lacks truth_index");
  std::filesystem::create_directories(args.out);
  lolipop::json summary;
  summary["T"] = args.T;
  lolipop::json per_seed = lolipop::json::array();
  for (const std::uint64_t seed : args.seeds) {
    lolipop::LolipopOptions options;
    options.delta = args.delta;
    options.constants = args.constants;
    options.master_seed = seed;
    auto [estimate, record] =
        lolipop::run_reward_free(mc.truth(), mc, args.T, options);
    const auto errors = lolipop::reward_free_eval(mc.truth(), estimate,
                                                  args.eval_pairs,
                                                  args.eval_seed);
    std::ofstream mout(args.out + "/estimate_seed" + std::to_string(seed) +
                       ".json");
    mout << lolipop::model_to_json(estimate).dump(2) << "\n";
    per_seed.push_back({{"seed", seed},
                        {"oracle_calls", record.total_oracle_calls},
                        {"mean_value_error", lolipop::detail::mean(errors)},
                        {"median_value_error", lolipop::detail::median(errors)}});
  }
  summary["per_seed"] = std::move(per_seed);
  std::ofstream sout(args.out + "/reward_free_summary.json");
  sout << summary.dump(2) << "\n";
  std::cout << "reward-free summary written to " << args.out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layerwise policy-cover IGW for tabular contextual MDPs"};
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "generate a model-class file");
  gen->add_option("--mode", gen_args.mode,
                  "random | needle | hard-pair");
  gen->add_option("--S", gen_args.S, "states");
  gen->add_option("--A", gen_args.A, "actions");
  gen->add_option("--H", gen_args.H, "horizon");
  gen->add_option("--contexts", gen_args.contexts, "contexts");
  gen->add_option("--class-size", gen_args.class_size, "models in the class");
  gen->add_option("--separation", gen_args.separation,
                  "min pairwise single-step squared Hellinger");
  gen->add_option("--gap", gen_args.gap, "hard-pair reward gap");
  gen->add_option("--reward-mode", gen_args.reward_mode,
                  "bernoulli-step | zero");
  gen->add_option("--seed", gen_args.seed, "generator seed");
  gen->add_option("--out", gen_args.out, "output path");

  lolipop::ExperimentConfig run_cfg;
  std::string run_config_path;
  std::string run_seeds_csv;
  auto* run = app.add_subcommand("run", "run a regret experiment");
  run->add_option("--config", run_config_path, "JSON config path");
  run->add_option("--class", run_cfg.class_file, "model-class file");
  run->add_option("--algorithm", run_cfg.algorithm,
                  "lolipop | uniform | etc-greedy | oracle-optimal");
  run->add_option("--schedule", run_cfg.schedule, "doubling | loglog");
  run->add_option("--T", run_cfg.total_rounds, "total rounds");
  run->add_option("--delta", run_cfg.delta, "confidence parameter");
  run->add_option("--seed", run_seeds_csv, "comma-separated master seeds");
  run->add_option("--out", run_cfg.out_dir, "output directory");
  run->add_option("--c-e", run_cfg.constants.c_e, "budget constant");
  run->add_option("--c-gamma", run_cfg.constants.c_gamma, "gamma constant");
  run->add_option("--c-eta", run_cfg.constants.c_eta, "eta constant");
  run->add_option("--c-zeta", run_cfg.constants.c_zeta, "zeta constant");
  run->add_flag("--log-trajectories", run_cfg.log_trajectories,
                "write per-round trajectory CSVs");

  RewardFreeArgs rf_args;
  std::string rf_seeds_csv;
  auto* rf = app.add_subcommand("reward-free",
                                "two-epoch pure-exploration run");
  rf->add_option("--class", rf_args.class_file, "model-class file")
      ->required();
  rf->add_option("--T", rf_args.T, "total rounds (divisible by 2H)");
  rf->add_option("--delta", rf_args.delta, "confidence parameter");
  rf->add_option("--seed", rf_seeds_csv, "comma-separated master seeds");
  rf->add_option("--eval-pairs", rf_args.eval_pairs,
                 "random (reward, policy-set) pairs for evaluation");
  rf->add_option("--eval-seed", rf_args.eval_seed, "evaluation seed");
  rf->add_option("--out", rf_args.out, "output directory");

  std::string check_file;
  int check_policies = 20;
  std::uint64_t check_seed = 7;
  auto* check = app.add_subcommand("check", "run the invariant battery");
  check->add_option("--class", check_file, "model-class file")->required();
  check->add_option("--policies", check_policies,
                    "random policies per check");
  check->add_option("--seed", check_seed, "battery seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitConfig;
  }

  auto parse_seeds = [](const std::string& csv) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ','))
      if (!tok.empty()) seeds.push_back(std::stoull(tok));
    return seeds;
  };

  try {
    if (gen->parsed()) return do_gen(gen_args);
    if (run->parsed()) {
      lolipop::ExperimentConfig cfg = run_cfg;
      if (!run_config_path.empty()) {
        std::ifstream in(run_config_path);
        if (!in)
          throw lolipop::ConfigError("cannot open config: " + run_config_path);
        lolipop::json doc;
        in >> doc;
        cfg = lolipop::config_from_json(doc);
        // Flags given alongside --config override the file.
        if (!run_cfg.class_file.empty()) cfg.class_file = run_cfg.class_file;
        if (!run_cfg.out_dir.empty() && run_cfg.out_dir != ".")
          cfg.out_dir = run_cfg.out_dir;
      }
      if (!run_seeds_csv.empty()) cfg.seeds = parse_seeds(run_seeds_csv);
      const auto result = lolipop::run_experiment(cfg);
      std::cout << "median final cumulative regret: " << result.median_final
                << " (summary at " << result.summary_path << ")\n";
      return kExitOk;
    }
    if (rf->parsed()) {
      if (!rf_seeds_csv.empty()) rf_args.seeds = parse_seeds(rf_seeds_csv);
      return do_reward_free(rf_args);
    }
    if (check->parsed()) {
      const lolipop::ModelClass mc = lolipop::load_model_class(check_file);
      const bool ok =
          lolipop::run_check(mc, check_policies, check_seed, std::cout);
      return ok ? kExitOk : kExitNumerical;
    }
  } catch (const lolipop::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const lolipop::LpError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}
