#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "prefbandit/agents.hpp"
#include "prefbandit/environment.hpp"
#include "prefbandit/offline_data.hpp"

namespace prefbandit {

// Where the bootstrapped agents get their beta: the configured agent_beta, or
// a per-seed estimate from the offline dataset.
enum class BetaSource { Config, Mle, Entropy };

// Every scalar and shape defining one run. Parsed from flat `key = value`
// text with `#` comments; unknown keys are rejected.
struct ExperimentConfig {
  int K = 10;
  int d = 4;
  int T = 300;
  int N = 20;
  double true_beta = 10.0;
  double true_lambda = 100.0;
  bool true_lambda_exact = false;  // rater knows theta exactly
  double agent_beta = 10.0;
  double agent_lambda = 100.0;
  double sigma = 1.0;
  double rho = 0.1;
  std::vector<double> prior_mean;        // empty: zeros
  std::vector<double> prior_cov;         // empty: identity; else row-major d*d
  std::vector<double> sampling_weights;  // empty: uniform
  ExpertPolicy expert_policy = ExpertPolicy::BradleyTerry;
  std::vector<std::string> agents = {"vanilla_ps", "naive_ps", "warmpref_ps"};
  BetaSource agent_beta_source = BetaSource::Config;
  EntropyOver entropy_over = EntropyOver::Winners;
  double entropy_c = 0.0;  // 0: default ln K
  TsofConfig tsof;
  int seeds = 5;
  std::uint64_t base_seed = 1;
  // Theory-report knobs.
  double bound_eps = 0.1;
  double c1 = 0.0;  // 0: heuristic default from the action/prior geometry

  GaussianPrior make_prior() const;
  SamplingDistribution make_sampling() const;
  RaterCompetence rater_competence() const;
  void validate() const;
};

ExperimentConfig parse_config(std::istream& in);
ExperimentConfig parse_config_file(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

}  // namespace prefbandit
