#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "prefbandit/environment.hpp"
#include "prefbandit/offline_data.hpp"
#include "prefbandit/optimizer.hpp"
#include "prefbandit/rng.hpp"

namespace prefbandit {

// Append-only record of the online phase.
struct OnlineHistory {
  std::vector<Vector> actions;
  std::vector<double> rewards;

  int size() const { return static_cast<int>(rewards.size()); }
  void append(const Vector& a, double r) {
    actions.push_back(a);
    rewards.push_back(r);
  }
};

// Gaussian-linear conjugate belief backing the vanilla PS baseline.
struct ConjugateState {
  Matrix precision;  // Sigma_t^{-1}
  Vector shift;      // Sigma_0^{-1} mu_0 + sigma^{-2} sum A_s R_s

  static ConjugateState from_prior(const GaussianPrior& prior);
  void observe(const Vector& action, double reward, double sigma);
  Vector mean() const;
  Vector sample(Rng& rng) const;  // theta ~ N(mean, precision^{-1})
};

// One round's bootstrap noise: additive reward noise, offline mask bits, and
// prior resamples.
struct PerturbationSet {
  std::vector<double> zeta;         // t-1 entries, N(0,1)
  std::vector<std::uint8_t> omega;  // N entries, Bernoulli(1/2)
  Vector theta_prime;               // ~ N(mu_0, Sigma_0)
  Vector vartheta_prime;            // ~ N(mu_0, I/lambda^2)

  // Zero perturbation: the perturbed loss collapses to the plain surrogate.
  static PerturbationSet none(int t, int n_offline, int d);
};

struct MapEstimate {
  Vector theta_hat;
  Vector vartheta_hat;
  double final_gradient_norm = 0.0;
  int iterations = 0;
};

// Unperturbed surrogate loss L1 + L2 + L3: squared online residuals, negative
// Bradley-Terry log-likelihood of the offline preferences, and the Gaussian
// prior/coupling terms.
double surrogate_loss(const Vector& theta, const Vector& vartheta,
                      const OnlineHistory& history, const OfflineDataset& d0,
                      const ActionSet& actions, double beta, double lambda,
                      const GaussianPrior& prior);

// Perturbed loss: rewards shifted by zeta, offline terms masked by omega, and
// prior terms recentered by (theta', vartheta').
double perturbed_loss(const Vector& theta, const Vector& vartheta,
                      const OnlineHistory& history, const OfflineDataset& d0,
                      const ActionSet& actions, const PerturbationSet& perturb,
                      double beta, double lambda, const GaussianPrior& prior);

// Analytic gradient of the perturbed loss w.r.t. (theta, vartheta).
std::pair<Vector, Vector> loss_gradient(
    const Vector& theta, const Vector& vartheta, const OnlineHistory& history,
    const OfflineDataset& d0, const ActionSet& actions,
    const PerturbationSet& perturb, double beta, double lambda,
    const GaussianPrior& prior);

// 2d x 2d Hessian of the perturbed loss (constant in theta, logistic in
// vartheta); drives the Newton path of the MAP solve.
Matrix loss_hessian(const Vector& vartheta, const OnlineHistory& history,
                    const OfflineDataset& d0, const ActionSet& actions,
                    const PerturbationSet& perturb, double beta, double lambda,
                    const GaussianPrior& prior);

PerturbationSet sample_perturbations(int t, int n_offline, double lambda,
                                     const GaussianPrior& prior, Rng& rng);

// Bootstrapped warmPref-PS: each round draws fresh perturbations, re-solves
// the perturbed MAP warm-started from the previous solution, and plays the
// greedy arm under theta_hat. With agent_beta = 0 this is the naive-PS
// baseline (offline preferences reduce to constants in the loss).
class BootstrappedAgent {
 public:
  BootstrappedAgent(const ActionSet& actions, const GaussianPrior& prior,
                    const OfflineDataset& d0, double agent_beta,
                    double agent_lambda, SolveSettings settings = {});

  std::pair<int, MapEstimate> step(const Environment& env,
                                   const RewardModel& model, Rng& rng);

  MapEstimate solve_map(const PerturbationSet& perturb);
  const OnlineHistory& history() const { return history_; }
  const OfflineDataset& offline_data() const { return d0_; }
  double agent_beta() const { return beta_; }
  // Tolerance actually used by the solves; floored by what double precision
  // can resolve once gradients carry a lambda^2 factor.
  double effective_tolerance() const;

 protected:
  const ActionSet& actions_;
  GaussianPrior prior_;
  OfflineDataset d0_;
  double beta_;
  double lambda_;
  SolveSettings settings_;
  OnlineHistory history_;
  Vector warm_start_;  // stacked (theta, vartheta) of the previous MAP
};

class VanillaPsAgent {
 public:
  VanillaPsAgent(const ActionSet& actions, const GaussianPrior& prior,
                 double sigma);

  int step(const Environment& env, const RewardModel& model, Rng& rng);
  const ConjugateState& state() const { return state_; }

 private:
  const ActionSet& actions_;
  ConjugateState state_;
  double sigma_;
};

struct TsofConfig {
  enum class Rule { Constant, InverseSqrt };
  double cost = 0.0;
  Rule rule = Rule::InverseSqrt;
  double epsilon = 0.5;  // Constant: the threshold; InverseSqrt: c0 in c0/sqrt(t)
};

double get_epsilon(const TsofConfig& cfg, int t);

struct TsofStepResult {
  int action = 0;
  double cost_incurred = 0.0;
  std::optional<PreferenceTuple> feedback;
  MapEstimate estimate;
};

// warmTSOF: may buy one online preference between its top-two arms when their
// estimated values are within epsilon_t, then re-solves before acting.
class WarmTsofAgent : public BootstrappedAgent {
 public:
  WarmTsofAgent(const ActionSet& actions, const GaussianPrior& prior,
                const OfflineDataset& d0, double agent_beta,
                double agent_lambda, TsofConfig cfg,
                SolveSettings settings = {});

  TsofStepResult step(const Environment& env, const RewardModel& model,
                      const Rater& rater, Rng& rng);

 private:
  TsofConfig cfg_;
};

}  // namespace prefbandit
