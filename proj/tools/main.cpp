#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "prefbandit/errors.hpp"
#include "prefbandit/estimation.hpp"
#include "prefbandit/harness.hpp"

namespace {

using namespace prefbandit;

void print_final_summary(const RunResult& result) {
  for (const auto& [name, curve] : result) {
    const char* kind =
        name.ends_with(":net_reward") ? "final net reward" : "final regret";
    std::cout << name << ": " << kind << " " << format_real(curve.final_mean())
              << " +/- " << format_real(curve.final_std()) << "\n";
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Posterior-sampling bandit lab with offline preference warm starts"};
  app.require_subcommand(1);

  std::string config_path, out_path, dataset_path, method, param, values_csv;
  double cost = 0.0, entropy_c = 0.0;
  bool serial = false;

  auto add_common = [&](CLI::App* cmd, bool needs_out) {
    cmd->add_option("--config", config_path, "experiment config file")
        ->required();
    if (needs_out) cmd->add_option("--out", out_path, "output location")->required();
    cmd->add_flag("--serial", serial, "run the serial reference path");
  };

  auto* simulate = app.add_subcommand("simulate", "run one experiment");
  add_common(simulate, true);

  auto* sweep = app.add_subcommand("sweep", "sweep one parameter");
  add_common(sweep, true);
  sweep->add_option("--param", param, "lambda|beta|n|rho|d")->required();
  sweep->add_option("--values", values_csv, "comma-separated values")->required();

  auto* table1 = app.add_subcommand("table1", "action-space study grid");
  add_common(table1, true);

  auto* theory = app.add_subcommand("theory", "write the bound report");
  add_common(theory, true);

  auto* estimate = app.add_subcommand("estimate-beta", "estimate deliberateness");
  estimate->add_option("--dataset", dataset_path, "dataset file")->required();
  estimate->add_option("--method", method, "mle|entropy")->required();
  estimate->add_option("--c", entropy_c, "entropy hyperparameter");
  estimate->add_option("--config", config_path, "experiment config file")
      ->required();

  auto* tsof = app.add_subcommand("tsof", "run warmTSOF at a feedback cost");
  add_common(tsof, true);
  tsof->add_option("--cost", cost, "per-query feedback cost")->required();

  auto* gen = app.add_subcommand("gen-dataset", "generate an offline dataset");
  add_common(gen, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  const Execution exec = serial ? Execution::Serial : Execution::OpenMP;

  try {
    ExperimentConfig cfg = parse_config_file(config_path);

    if (simulate->parsed()) {
      const RunResult result = run_experiment(cfg, exec);
      write_run_outputs(result, out_path);
      print_final_summary(result);
    } else if (sweep->parsed()) {
      SweepSpec spec;
      spec.parameter = param;
      spec.base = cfg;
      std::stringstream ss(values_csv);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) spec.values.push_back(std::stod(tok));
      }
      const auto rows = run_sweep(spec, exec);
      std::filesystem::create_directories(out_path);
      write_sweep_csv(rows, (std::filesystem::path(out_path) /
                             ("sweep_" + param + ".csv")).string());
    } else if (table1->parsed()) {
      const auto cells = run_action_space_study(cfg, exec);
      std::filesystem::create_directories(out_path);
      write_table_csv(cells, (std::filesystem::path(out_path) /
                              "action_space.csv").string());
    } else if (theory->parsed()) {
      emit_theory_report(cfg, out_path);
    } else if (estimate->parsed()) {
      int K = 0, d = 0;
      const OfflineDataset d0 = load_dataset_file(dataset_path, K, d);
      if (K != cfg.K || d != cfg.d) {
        throw ConfigError("dataset header (K,d) disagrees with the config");
      }
      Rng arm_rng = derive_stream(cfg.base_seed, "actions");
      const ActionSet actions = build_action_set(cfg.K, cfg.d, cfg.rho, arm_rng);
      BetaEstimate est;
      if (method == "mle") {
        est = estimate_beta_mle(d0, actions, cfg.make_prior(), cfg.agent_lambda);
        std::cout << "beta_hat = " << format_real(est.value)
                  << " (mle, log_likelihood " << format_real(est.log_likelihood)
                  << ", rounds " << est.rounds << ")\n";
      } else if (method == "entropy") {
        const double c = entropy_c > 0.0 ? entropy_c
                         : cfg.entropy_c > 0.0 ? cfg.entropy_c
                                               : std::log(double(cfg.K));
        est = estimate_beta_entropy(d0, cfg.K, c, {}, cfg.entropy_over);
        std::cout << "beta_hat = " << format_real(est.value) << " (entropy H = "
                  << format_real(est.entropy) << ", c = " << format_real(est.c)
                  << ")\n";
      } else {
        std::cerr << "error: --method must be mle or entropy\n";
        return 1;
      }
    } else if (tsof->parsed()) {
      cfg.tsof.cost = cost;
      cfg.agents = {"warmtsof"};
      const RunResult result = run_experiment(cfg, exec);
      write_run_outputs(result, out_path);
      print_final_summary(result);
    } else if (gen->parsed()) {
      const std::uint64_t s = cfg.base_seed;
      Rng arm_rng = derive_stream(s, "actions");
      const ActionSet actions = build_action_set(cfg.K, cfg.d, cfg.rho, arm_rng);
      Rng env_rng = derive_stream(s, "env");
      const Environment env = sample_environment(cfg.make_prior(), actions, env_rng);
      Rng rater_rng = derive_stream(s, "rater");
      const Rater rater = sample_rater(env, cfg.rater_competence(),
                                       cfg.expert_policy, rater_rng);
      Rng data_rng = derive_stream(s, "dataset");
      const OfflineDataset d0 = generate_dataset(env, actions, rater,
                                                 cfg.make_sampling(), cfg.N,
                                                 data_rng);
      save_dataset_file(d0, cfg.K, cfg.d, out_path);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
