#pragma once

#include <string>
#include <vector>

#include "prefbandit/config.hpp"
#include "prefbandit/environment.hpp"
#include "prefbandit/offline_data.hpp"
#include "prefbandit/rng.hpp"

namespace prefbandit {

double std_normal_cdf(double x);

// Offline sample size beyond which a singleton info set over {a0, a1} is
// (1-eps)-informative, assuming an exactly knowledgeable rater. Signed; the
// caller takes the ceiling.
double two_action_n0(const Vector& a0, const Vector& a1,
                     const GaussianPrior& prior, const Vector& theta0,
                     double beta, double eps);

struct Theorem1Result {
  double n0 = 0.0;
  double k_max = 0.0;
};

// General-K sample complexity: N0 = (ln K + (k_max - 1) ln ln K)/(mu_min^2 eps)
// with k_max maximized over ordered arm pairs with a strictly positive gap
// under theta0 and floored at 1.
Theorem1Result theorem1_n0(const ActionSet& actions, const GaussianPrior& prior,
                           const Vector& theta0, double beta, double eps,
                           double mu_min);

// Posterior probability that a0 is the optimal arm given a dataset over the
// pair (arm indices 0 and 1). Finite lambda: self-normalized Monte-Carlo over
// joint (theta, vartheta) draws. Exact-knowledge flag: closed-form ratio
// exp(beta * N_eff * <a0-a1, theta0>) * Phi(x) / (1 - Phi(x)).
double two_action_posterior(const OfflineDataset& d0, const Vector& a0,
                            const Vector& a1, const GaussianPrior& prior,
                            double beta, double lambda, bool exact_knowledge,
                            const Vector& theta0, int mc_samples, Rng& rng);

struct InfoSet {
  std::vector<int> member_indices;  // sorted ascending

  bool contains(int k) const;
  int size() const { return static_cast<int>(member_indices.size()); }
};

// Undefeated: arms absent from the dataset plus arms that never lost a
// comparison they appear in (self-pairs count as neither win nor loss).
// EverPreferred: arms absent plus arms that won at least one comparison;
// this is the construction whose miss probability the f1 bound controls.
enum class InfoSetRule { Undefeated, EverPreferred };

InfoSet build_info_set(const OfflineDataset& d0, int K,
                       InfoSetRule rule = InfoSetRule::Undefeated);

struct BoundConstants {
  double delta = 0.0;    // ln(T beta)/beta
  double alpha1 = 0.0;   // K min(1, delta)
  double alpha2 = 0.0;   // sqrt(2 ln(2 sqrt(d) T))/lambda
  double f1_tilde = 0.0;
  double f1 = 0.0;       // f1_tilde + 1/T
  double f2 = 0.0;       // main-text formula
  double appendix_variant_f2 = 0.0;
};

BoundConstants bound_constants(int N, int K, int T, double beta, double lambda,
                               int d, double mu_min);

// sqrt(T E ln E + eps ln(K/eps)) + C1 T eps, for E = E[|U|].
double general_ps_bound(double expected_card, double eps, int K, int T,
                        double C1);

struct WarmprefBound {
  double value = 0.0;
  bool clamped = false;  // inner entropy term was clamped at zero
};

WarmprefBound warmpref_bound(const BoundConstants& c, int K, int T);

// Probability of seeing all n equally likely items in N draws, by the
// alternating inclusion-exclusion sum with compensated accumulation.
double coupon_all_prob(int n, long long N);

// E[T] = integral of 1 - prod_i (1 - exp(-w_i x)) over x >= 0; weights may
// sum to less than 1.
double expected_collection_time(const std::vector<double>& weights);

// Minimum offline size ensuring the info set collapses to the optimal arm:
// uniform mu: K^2 ln K / eps; arbitrary mu: H_{C(K,2)} / (mu_min^2 eps).
double lemma_a2_n0(int K, double eps, double mu_min, bool uniform);

struct InformativenessResult {
  int trials = 0;
  double miss_rate = 0.0;
  double mean_card = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  bool miss_within_bound = false;  // miss_rate <= f1 + 3 binomial sigma
  bool card_within_bound = false;  // mean_card <= f2 + 3 standard errors
};

// Monte-Carlo over fresh (actions, theta, vartheta, D0) draws against the
// analytic (f1, f2) guarantees.
InformativenessResult informativeness_check(const ExperimentConfig& config,
                                            int n_trials,
                                            std::uint64_t base_seed);

struct ReportField {
  double value = 0.0;
  bool defined = false;
  std::string reason;

  static ReportField ok(double v) { return {v, true, ""}; }
  static ReportField undefined(std::string why) {
    return {0.0, false, std::move(why)};
  }
};

// Every closed-form quantity for one configuration. Domain failures surface
// as undefined fields with a reason, never as omissions.
struct BoundReport {
  ReportField delta, alpha1, alpha2, f1_tilde, f1, f2, appendix_variant_f2;
  ReportField two_action_n0, theorem1_n0, k_max;
  ReportField general_ps_bound, warmpref_bound;
  double c1 = 0.0;
  bool c1_heuristic = false;
  bool warmpref_bound_clamped = false;
  std::string theta0_source;
  int two_action_idx0 = -1;  // best arm under theta0
  int two_action_idx1 = -1;  // runner-up
  double eps = 0.0;
  double mu_min = 0.0;
};

// Conservative computable stand-in for the expected reward range:
// 2 max_a ||a|| (||mu_0|| + 3 sqrt(lambda_max(Sigma_0))).
double default_c1(const ActionSet& actions, const GaussianPrior& prior);

BoundReport make_bound_report(const ExperimentConfig& config);

}  // namespace prefbandit
