#include "prefbandit/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "prefbandit/agents.hpp"
#include "prefbandit/errors.hpp"
#include "prefbandit/estimation.hpp"

namespace prefbandit {

namespace {

constexpr const char* kNetRewardCurve = "warmtsof:net_reward";

struct SeedOutput {
  // agent name -> cumulative regret trajectory
  std::map<std::string, std::vector<double>> curves;
};

double resolve_agent_beta(const ExperimentConfig& config,
                          const OfflineDataset& d0, const ActionSet& actions,
                          const GaussianPrior& prior) {
  switch (config.agent_beta_source) {
    case BetaSource::Config:
      return config.agent_beta;
    case BetaSource::Mle:
      return estimate_beta_mle(d0, actions, prior, config.agent_lambda).value;
    case BetaSource::Entropy: {
      const double c = config.entropy_c > 0.0 ? config.entropy_c
                                              : std::log(double(config.K));
      return estimate_beta_entropy(d0, config.K, c, {}, config.entropy_over)
          .value;
    }
  }
  throw ConfigError("unknown beta source");
}

SeedOutput run_one_seed(const ExperimentConfig& config, int seed_index) {
  const std::uint64_t s = config.base_seed + seed_index;
  const GaussianPrior prior = config.make_prior();
  const SamplingDistribution mu = config.make_sampling();

  Rng arm_rng = derive_stream(s, "actions");
  const ActionSet actions =
      build_action_set(config.K, config.d, config.rho, arm_rng);
  Rng env_rng = derive_stream(s, "env");
  const Environment env = sample_environment(prior, actions, env_rng);
  Rng rater_rng = derive_stream(s, "rater");
  const Rater rater = sample_rater(env, config.rater_competence(),
                                   config.expert_policy, rater_rng);
  Rng data_rng = derive_stream(s, "dataset");
  const OfflineDataset d0 =
      generate_dataset(env, actions, rater, mu, config.N, data_rng);
  const RewardModel model{config.sigma};

  double warm_beta = config.agent_beta;
  for (const auto& name : config.agents) {
    if (name == "warmpref_ps" || name == "warmtsof") {
      warm_beta = resolve_agent_beta(config, d0, actions, prior);
      break;
    }
  }

  SeedOutput out;
  for (const auto& name : config.agents) {
    Rng rng = derive_stream(s, "agent:" + name);
    std::vector<double> cum(config.T, 0.0);
    double acc = 0.0;
    try {
      if (name == "vanilla_ps") {
        VanillaPsAgent agent(actions, prior, config.sigma);
        for (int t = 0; t < config.T; ++t) {
          const int arm = agent.step(env, model, rng);
          acc += instant_regret(env, actions.actions[arm]);
          cum[t] = acc;
        }
      } else if (name == "naive_ps" || name == "warmpref_ps") {
        const double beta = name == "naive_ps" ? 0.0 : warm_beta;
        BootstrappedAgent agent(actions, prior, d0, beta, config.agent_lambda);
        for (int t = 0; t < config.T; ++t) {
          const auto [arm, est] = agent.step(env, model, rng);
          acc += instant_regret(env, actions.actions[arm]);
          cum[t] = acc;
        }
      } else if (name == "warmtsof") {
        WarmTsofAgent agent(actions, prior, d0, warm_beta, config.agent_lambda,
                            config.tsof);
        std::vector<double> net(config.T, 0.0);
        double net_acc = 0.0;
        for (int t = 0; t < config.T; ++t) {
          const TsofStepResult r = agent.step(env, model, rater, rng);
          acc += instant_regret(env, actions.actions[r.action]) +
                 r.cost_incurred;
          cum[t] = acc;
          net_acc += agent.history().rewards[t] - r.cost_incurred;
          net[t] = net_acc;
        }
        out.curves[kNetRewardCurve] = std::move(net);
      } else {
        throw ConfigError("unknown agent: " + name);
      }
    } catch (const StepError& e) {
      throw StepError("seed " + std::to_string(seed_index) + ", agent " +
                      name + ": " + e.what());
    }
    out.curves[name] = std::move(cum);
  }
  return out;
}

void aggregate(RegretCurve& curve, int T) {
  const int S = static_cast<int>(curve.cumulative.size());
  curve.mean.assign(T, 0.0);
  curve.stddev.assign(T, 0.0);
  for (int t = 0; t < T; ++t) {
    double m = 0.0;
    for (int i = 0; i < S; ++i) m += curve.cumulative[i][t];
    m /= S;
    curve.mean[t] = m;
    if (S > 1) {
      double ss = 0.0;
      for (int i = 0; i < S; ++i) {
        const double dev = curve.cumulative[i][t] - m;
        ss += dev * dev;
      }
      curve.stddev[t] = std::sqrt(ss / (S - 1));
    }
  }
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config, Execution exec) {
  config.validate();
  const int S = config.seeds;
  std::vector<SeedOutput> outputs(S);
  std::vector<std::exception_ptr> failures(S);

  if (exec == Execution::OpenMP) {
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < S; ++i) {
      try {
        outputs[i] = run_one_seed(config, i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  } else {
    for (int i = 0; i < S; ++i) {
      try {
        outputs[i] = run_one_seed(config, i);
      } catch (...) {
        failures[i] = std::current_exception();
      }
    }
  }
  for (int i = 0; i < S; ++i) {
    if (failures[i]) std::rethrow_exception(failures[i]);
  }

  RunResult result;
  for (const auto& [name, curve] : outputs[0].curves) {
    RegretCurve rc;
    rc.agent_name = name;
    rc.cumulative.reserve(S);
    for (int i = 0; i < S; ++i) {
      rc.cumulative.push_back(outputs[i].curves.at(name));
    }
    aggregate(rc, config.T);
    result[name] = std::move(rc);
  }
  return result;
}

ExperimentConfig apply_sweep_value(const ExperimentConfig& base,
                                   const std::string& parameter,
                                   double value) {
  ExperimentConfig cfg = base;
  if (parameter == "lambda") {
    cfg.true_lambda = value;
    cfg.agent_lambda = value;
    cfg.true_lambda_exact = false;
  } else if (parameter == "beta") {
    cfg.true_beta = value;
    cfg.agent_beta = value;
  } else if (parameter == "n") {
    cfg.N = static_cast<int>(value);
  } else if (parameter == "rho") {
    cfg.rho = value;
  } else if (parameter == "d") {
    cfg.d = static_cast<int>(value);
    cfg.prior_mean.clear();
    cfg.prior_cov.clear();
  } else {
    throw ConfigError("unknown sweep parameter: " + parameter);
  }
  return cfg;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec, Execution exec) {
  if (spec.values.empty()) throw ConfigError("sweep: empty value list");
  std::vector<SweepRow> rows;
  for (double v : spec.values) {
    const ExperimentConfig cfg = apply_sweep_value(spec.base, spec.parameter, v);
    const RunResult result = run_experiment(cfg, exec);
    for (const auto& [name, curve] : result) {
      if (name == kNetRewardCurve) continue;
      rows.push_back({spec.parameter, v, name, curve.final_mean(),
                      curve.final_std()});
    }
  }
  return rows;
}

std::vector<ActionSpaceCell> run_action_space_study(
    const ExperimentConfig& base, Execution exec) {
  std::vector<ActionSpaceCell> cells;
  for (int d : {2, 5}) {
    for (double rho : {0.1, 0.8}) {
      ExperimentConfig cfg = apply_sweep_value(base, "d", d);
      cfg.rho = rho;
      const RunResult result = run_experiment(cfg, exec);
      for (const auto& [name, curve] : result) {
        if (name == kNetRewardCurve) continue;
        cells.push_back({d, rho, name, curve.final_mean(), curve.final_std()});
      }
    }
  }
  return cells;
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_run_outputs(const RunResult& result, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto& [name, curve] : result) {
    std::string file_name = name == kNetRewardCurve
                                ? std::string("net_reward_warmtsof.csv")
                                : "regret_" + name + ".csv";
    std::ofstream f(fs::path(out_dir) / file_name, std::ios::binary);
    f << "t,seed,cumulative\n";
    for (std::size_t seed = 0; seed < curve.cumulative.size(); ++seed) {
      for (std::size_t t = 0; t < curve.cumulative[seed].size(); ++t) {
        f << (t + 1) << "," << seed << ","
          << format_real(curve.cumulative[seed][t]) << "\n";
      }
    }
  }
  std::ofstream f(fs::path(out_dir) / "summary.csv", std::ios::binary);
  f << "agent,t,mean,std\n";
  for (const auto& [name, curve] : result) {
    for (std::size_t t = 0; t < curve.mean.size(); ++t) {
      f << name << "," << (t + 1) << "," << format_real(curve.mean[t]) << ","
        << format_real(curve.stddev[t]) << "\n";
    }
  }
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  f << "param,value,agent,final_mean,final_std\n";
  for (const auto& r : rows) {
    f << r.parameter << "," << format_real(r.value) << "," << r.agent << ","
      << format_real(r.final_mean) << "," << format_real(r.final_std) << "\n";
  }
}

void write_table_csv(const std::vector<ActionSpaceCell>& cells,
                     const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  f << "d,rho,agent,final_mean,final_std\n";
  for (const auto& c : cells) {
    f << c.d << "," << format_real(c.rho) << "," << c.agent << ","
      << format_real(c.final_mean) << "," << format_real(c.final_std) << "\n";
  }
}

std::string format_bound_report(const BoundReport& report) {
  nlohmann::ordered_json j;
  const auto put = [&](const char* key, const ReportField& f) {
    if (f.defined) j[key] = f.value;
    else j[key] = f.reason;
  };
  put("delta", report.delta);
  put("alpha1", report.alpha1);
  put("alpha2", report.alpha2);
  put("f1_tilde", report.f1_tilde);
  put("f1", report.f1);
  put("f2", report.f2);
  put("two_action_n0", report.two_action_n0);
  put("theorem1_n0", report.theorem1_n0);
  put("k_max", report.k_max);
  put("general_ps_bound", report.general_ps_bound);
  put("warmpref_bound", report.warmpref_bound);
  j["c1"] = report.c1;
  put("appendix_variant_f2", report.appendix_variant_f2);
  j["c1_heuristic"] = report.c1_heuristic;
  j["warmpref_bound_clamped"] = report.warmpref_bound_clamped;
  j["theta0_source"] = report.theta0_source;
  j["two_action_pair"] = {report.two_action_idx0, report.two_action_idx1};
  j["eps"] = report.eps;
  j["mu_min"] = report.mu_min;
  return j.dump(2) + "\n";
}

void emit_theory_report(const ExperimentConfig& config,
                        const std::string& path) {
  const BoundReport report = make_bound_report(config);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open report path: " + path);
  f << format_bound_report(report);
}

}  // namespace prefbandit
