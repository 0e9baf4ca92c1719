#include "prefbandit/theory.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "prefbandit/errors.hpp"

namespace prefbandit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double logsigmoid(double x) {
  return x >= 0.0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x));
}

double sigmoid(double x) {
  const double t = std::exp(-std::abs(x));
  const double r = 1.0 / (1.0 + t);
  return x >= 0.0 ? r : 1.0 - r;
}

double prior_direction_score(const Vector& diff, const GaussianPrior& prior) {
  const double denom_sq = diff.dot(prior.covariance * diff);
  if (!(denom_sq > 0.0)) {
    throw DomainError("zero prior variance along the arm difference");
  }
  return diff.dot(prior.mean) / std::sqrt(denom_sq);
}

}  // namespace

double std_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_action_n0(const Vector& a0, const Vector& a1,
                     const GaussianPrior& prior, const Vector& theta0,
                     double beta, double eps) {
  if (!(beta > 0.0)) throw DomainError("two_action_n0: beta must be positive");
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("two_action_n0: eps must lie in (0,1)");
  }
  const Vector diff = a0 - a1;
  const double gap = diff.dot(theta0);
  if (gap == 0.0) throw DomainError("two_action_n0: non-identifiable pair");
  const double x = prior_direction_score(diff, prior);
  const double phi = std_normal_cdf(x);
  return std::log((1.0 / eps - 1.0) * (1.0 / phi - 1.0)) / (beta * gap);
}

Theorem1Result theorem1_n0(const ActionSet& actions, const GaussianPrior& prior,
                           const Vector& theta0, double beta, double eps,
                           double mu_min) {
  const int K = actions.size();
  if (K < 3) throw DomainError("theorem1_n0: needs K >= 3");
  if (!(beta > 0.0)) throw DomainError("theorem1_n0: beta must be positive");
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("theorem1_n0: eps must lie in (0,1)");
  }
  if (!(mu_min > 0.0 && mu_min < 1.0)) {
    throw DomainError("theorem1_n0: mu_min must lie in (0,1)");
  }

  const double lead = 2.0 * K * K / eps - 1.0;
  double k_max = -kInf;
  bool any = false;
  for (int i = 0; i < K; ++i) {
    for (int j = 0; j < K; ++j) {
      if (i == j) continue;
      const Vector diff = actions.actions[i] - actions.actions[j];
      const double gap = diff.dot(theta0);
      // Reversed or tied orientations are the mirror image of a positive-gap
      // pair; the formula is only meaningful on the positive side.
      if (!(gap > 0.0)) continue;
      any = true;
      const double phi = std_normal_cdf(prior_direction_score(diff, prior));
      const double k = std::log(lead * (1.0 / phi - 1.0)) / (beta * gap);
      k_max = std::max(k_max, k);
    }
  }
  if (!any) throw DomainError("theorem1_n0: all pairwise gaps are zero");
  k_max = std::max(k_max, 1.0);  // keeps the (k_max - 1) term non-negative

  Theorem1Result r;
  r.k_max = k_max;
  r.n0 = (std::log(static_cast<double>(K)) +
          (k_max - 1.0) * std::log(std::log(static_cast<double>(K)))) /
         (mu_min * mu_min * eps);
  return r;
}

double two_action_posterior(const OfflineDataset& d0, const Vector& a0,
                            const Vector& a1, const GaussianPrior& prior,
                            double beta, double lambda, bool exact_knowledge,
                            const Vector& theta0, int mc_samples, Rng& rng) {
  int wins0 = 0, wins1 = 0;
  for (const auto& t : d0.tuples) {
    if (t.idx0 < 0 || t.idx0 > 1 || t.idx1 < 0 || t.idx1 > 1) {
      throw DomainError("two_action_posterior: dataset mixes other arms");
    }
    if (t.idx0 == t.idx1) continue;  // carries no order information
    if (t.winner() == 0) ++wins0;
    else ++wins1;
  }
  const Vector diff = a0 - a1;
  const double x = prior_direction_score(diff, prior);
  const double phi = std_normal_cdf(x);

  if (exact_knowledge) {
    const double n_eff = static_cast<double>(wins0 - wins1);
    const double log_ratio = beta * n_eff * diff.dot(theta0) + std::log(phi) -
                             std::log1p(-phi);
    return sigmoid(log_ratio);
  }

  if (mc_samples < 1) {
    throw DomainError("two_action_posterior: mc_samples must be >= 1");
  }
  if (!(lambda > 0.0)) {
    throw DomainError("two_action_posterior: lambda must be positive");
  }
  const Matrix L = cholesky_lower(prior.covariance);
  const int d = prior.dim();
  // Joint draws of (theta, vartheta); each sample's likelihood lands in the
  // bucket of the hypothesis its theta supports.
  std::vector<double> log_lik[2];
  Vector z(d);
  for (int s = 0; s < mc_samples; ++s) {
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    const Vector theta = prior.mean + L * z;
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    const Vector vartheta = theta + z / lambda;
    const double g = beta * diff.dot(vartheta);
    const double ll = wins0 * logsigmoid(g) + wins1 * logsigmoid(-g);
    log_lik[diff.dot(theta) >= 0.0 ? 0 : 1].push_back(ll);
  }
  double best = -kInf;
  for (const auto& bucket : log_lik) {
    for (double v : bucket) best = std::max(best, v);
  }
  if (best == -kInf) return 0.5;
  double num[2] = {0.0, 0.0};
  for (int h = 0; h < 2; ++h) {
    for (double v : log_lik[h]) num[h] += std::exp(v - best);
  }
  if (num[0] + num[1] == 0.0) return 0.5;
  return num[0] / (num[0] + num[1]);
}

bool InfoSet::contains(int k) const {
  return std::binary_search(member_indices.begin(), member_indices.end(), k);
}

InfoSet build_info_set(const OfflineDataset& d0, int K, InfoSetRule rule) {
  std::vector<char> appears(K, 0), lost(K, 0), won(K, 0);
  for (const auto& t : d0.tuples) {
    appears.at(t.idx0) = 1;
    appears.at(t.idx1) = 1;
    if (t.idx0 == t.idx1) continue;
    won[t.winner()] = 1;
    lost[t.loser()] = 1;
  }
  InfoSet u;
  for (int k = 0; k < K; ++k) {
    const bool keep = rule == InfoSetRule::Undefeated
                          ? (!appears[k] || !lost[k])
                          : (!appears[k] || won[k]);
    if (keep) u.member_indices.push_back(k);
  }
  return u;
}

BoundConstants bound_constants(int N, int K, int T, double beta, double lambda,
                               int d, double mu_min) {
  if (T < 2) throw DomainError("bound_constants: T must be >= 2");
  if (!(beta > 0.0)) throw DomainError("bound_constants: beta must be positive");
  if (!(lambda > 0.0)) {
    throw DomainError("bound_constants: lambda must be positive");
  }
  if (!(mu_min > 0.0 && mu_min < 1.0)) {
    throw DomainError("bound_constants: mu_min must lie in (0,1)");
  }
  if (!(static_cast<double>(T) * beta > 1.0)) {
    throw DomainError("Delta undefined: Tbeta<=1");
  }

  BoundConstants c;
  c.delta = std::log(static_cast<double>(T) * beta) / beta;
  const double min_delta = std::min(1.0, c.delta);
  c.alpha1 = K * min_delta;
  c.alpha2 = std::sqrt(2.0 * std::log(2.0 * std::sqrt(double(d)) * T)) / lambda;

  // First addend of f1_tilde: (1 - 1/(1+e^z))^N = sigmoid(z)^N, in log space.
  const double z = beta * (min_delta + c.alpha2 - c.alpha1);
  const double term1 = std::exp(N * logsigmoid(z));
  const double term2 = std::exp(2.0 * N * std::log1p(-mu_min));
  c.f1_tilde = term1 + term2;
  c.f1 = c.f1_tilde + 1.0 / T;

  const double nk_tb = static_cast<double>(N) * K / (static_cast<double>(T) * beta);
  // (1 + exp(-beta a2 + a1))^{-1} = sigmoid(beta a2 - a1)
  const double pre_min =
      c.alpha1 * c.alpha1 + nk_tb * sigmoid(beta * c.alpha2 - c.alpha1) +
      2.0 / T;
  c.f2 = std::min(pre_min, static_cast<double>(K));

  const double appendix_pre =
      K * std::min(1.0, 0.5 * c.delta * c.delta) +
      nk_tb * sigmoid(beta * c.alpha2 - (K - 1) * min_delta) + 1.0 / T;
  c.appendix_variant_f2 = std::min(appendix_pre, static_cast<double>(K));
  return c;
}

double general_ps_bound(double expected_card, double eps, int K, int T,
                        double C1) {
  if (!(expected_card >= 1.0)) {
    throw DomainError("general_ps_bound: E|U| must be >= 1");
  }
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("general_ps_bound: eps must lie in (0,1)");
  }
  const double inner = T * expected_card * std::log(expected_card) +
                       eps * std::log(K / eps);
  return std::sqrt(inner) + C1 * T * eps;
}

WarmprefBound warmpref_bound(const BoundConstants& c, int K, int T) {
  if (K < 2) throw DomainError("warmpref_bound: needs K >= 2");
  if (!(c.f1 > 0.0)) throw DomainError("warmpref_bound: f1 must be positive");
  const double inner = std::log(c.f2) + c.f1 * std::log(K / c.f1);
  WarmprefBound b;
  b.clamped = inner < 0.0;
  b.value = std::sqrt(T * c.f2 * std::max(inner, 0.0)) +
            2.0 * std::sqrt(2.0 * std::log(static_cast<double>(K))) * T *
                (c.f1_tilde + 1.0 / T);
  return b;
}

double coupon_all_prob(int n, long long N) {
  if (n < 1) throw DomainError("coupon_all_prob: n must be >= 1");
  if (N < 0) throw DomainError("coupon_all_prob: N must be >= 0");
  double sum = 0.0, comp = 0.0;  // Kahan
  double binom = 1.0;            // C(n, i)
  for (int i = 0; i <= n; ++i) {
    const double term =
        (i % 2 == 0 ? 1.0 : -1.0) * binom *
        std::pow(1.0 - static_cast<double>(i) / n, static_cast<double>(N));
    const double y = term - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
    binom *= static_cast<double>(n - i) / (i + 1);
  }
  if (sum < -1e-9 || sum > 1.0 + 1e-9) {
    throw NumericError(
        "coupon_all_prob: alternating sum lost precision at n=" +
        std::to_string(n) + "; use a Monte-Carlo fallback");
  }
  return std::clamp(sum, 0.0, 1.0);
}

double expected_collection_time(const std::vector<double>& weights) {
  if (weights.empty()) {
    throw DomainError("expected_collection_time: no weights");
  }
  double w_min = kInf;
  for (double w : weights) {
    if (!(w > 0.0)) {
      throw DomainError("expected_collection_time: weights must be positive");
    }
    w_min = std::min(w_min, w);
  }
  const double n = static_cast<double>(weights.size());
  // Tail bound: integral beyond X is at most n exp(-w_min X)/w_min.
  const double X = std::log(n / (w_min * 1e-9)) / w_min;

  const auto integrand = [&](double x) {
    double prod = 1.0;
    for (double w : weights) prod *= -std::expm1(-w * x);
    return 1.0 - prod;
  };

  // Adaptive Simpson.
  struct Seg {
    double a, b, fa, fm, fb, whole;
  };
  const auto simpson = [&](double a, double b, double fa, double fm,
                           double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  };
  std::vector<Seg> stack;
  {
    const double m = 0.5 * X;
    const double fa = integrand(0.0), fm = integrand(m), fb = integrand(X);
    stack.push_back({0.0, X, fa, fm, fb, simpson(0.0, X, fa, fm, fb)});
  }
  double total = 0.0;
  const double tol = 1e-10 * X;
  int guard = 0;
  while (!stack.empty()) {
    if (++guard > 4000000) {
      throw NumericError("expected_collection_time: quadrature stalled");
    }
    Seg s = stack.back();
    stack.pop_back();
    const double m = 0.5 * (s.a + s.b);
    const double lm = 0.5 * (s.a + m), rm = 0.5 * (m + s.b);
    const double flm = integrand(lm), frm = integrand(rm);
    const double left = simpson(s.a, m, s.fa, flm, s.fm);
    const double right = simpson(m, s.b, s.fm, frm, s.fb);
    if (std::abs(left + right - s.whole) <=
            15.0 * tol * (s.b - s.a) / X ||
        (s.b - s.a) < 1e-12 * X) {
      total += left + right + (left + right - s.whole) / 15.0;
    } else {
      stack.push_back({s.a, m, s.fa, flm, s.fm, left});
      stack.push_back({m, s.b, s.fm, frm, s.fb, right});
    }
  }

  double tail = 0.0;
  for (double w : weights) tail += std::exp(-w * X) / w;
  return total + tail;
}

double lemma_a2_n0(int K, double eps, double mu_min, bool uniform) {
  if (K < 2) throw DomainError("lemma_a2_n0: K must be >= 2");
  if (!(eps > 0.0 && eps < 1.0)) {
    throw DomainError("lemma_a2_n0: eps must lie in (0,1)");
  }
  if (!(mu_min > 0.0 && mu_min < 1.0)) {
    throw DomainError("lemma_a2_n0: mu_min must lie in (0,1)");
  }
  if (uniform) {
    return static_cast<double>(K) * K * std::log(static_cast<double>(K)) / eps;
  }
  const long long pairs = static_cast<long long>(K) * (K - 1) / 2;
  double harmonic = 0.0;
  for (long long i = 1; i <= pairs; ++i) harmonic += 1.0 / i;
  return harmonic / (mu_min * mu_min * eps);
}

InformativenessResult informativeness_check(const ExperimentConfig& config,
                                            int n_trials,
                                            std::uint64_t base_seed) {
  if (n_trials < 100) {
    throw ConfigError("informativeness_check: need at least 100 trials");
  }
  config.validate();
  const GaussianPrior prior = config.make_prior();
  const SamplingDistribution mu = config.make_sampling();
  const RaterCompetence competence = config.rater_competence();

  std::vector<int> miss(n_trials, 0);
  std::vector<int> card(n_trials, 0);
#pragma omp parallel for schedule(dynamic)
  for (int trial = 0; trial < n_trials; ++trial) {
    Rng rng = derive_stream(base_seed, "informativeness", trial);
    ActionSet actions = build_action_set(config.K, config.d, config.rho, rng);
    Environment env = sample_environment(prior, actions, rng);
    Rater rater = sample_rater(env, competence, config.expert_policy, rng);
    OfflineDataset d0 =
        generate_dataset(env, actions, rater, mu, config.N, rng);
    const InfoSet u = build_info_set(d0, config.K, InfoSetRule::EverPreferred);
    miss[trial] = u.contains(env.optimal_index) ? 0 : 1;
    card[trial] = u.size();
  }

  InformativenessResult r;
  r.trials = n_trials;
  long long misses = 0, cards = 0;
  for (int m : miss) misses += m;
  for (int c : card) cards += c;
  r.miss_rate = static_cast<double>(misses) / n_trials;
  r.mean_card = static_cast<double>(cards) / n_trials;

  // The exact-knowledge rater is the lambda -> infinity limit; alpha2 = 0.
  const double lam = config.true_lambda_exact ? kInf : config.true_lambda;
  const BoundConstants c = bound_constants(config.N, config.K, config.T,
                                           config.true_beta, lam, config.d,
                                           mu.mu_min);
  r.f1 = c.f1;
  r.f2 = c.f2;

  const double miss_sigma =
      std::sqrt(std::max(r.miss_rate * (1.0 - r.miss_rate), 0.0) / n_trials);
  double var = 0.0;
  for (int v : card) var += (v - r.mean_card) * (v - r.mean_card);
  const double card_se = std::sqrt(var / n_trials / n_trials);
  r.miss_within_bound = r.miss_rate <= r.f1 + 3.0 * miss_sigma;
  r.card_within_bound = r.mean_card <= r.f2 + 3.0 * card_se;
  return r;
}

double default_c1(const ActionSet& actions, const GaussianPrior& prior) {
  double max_norm = 0.0;
  for (const auto& a : actions.actions) max_norm = std::max(max_norm, a.norm());
  Eigen::SelfAdjointEigenSolver<Matrix> es(prior.covariance);
  const double top = es.eigenvalues().maxCoeff();
  return 2.0 * max_norm * (prior.mean.norm() + 3.0 * std::sqrt(top));
}

BoundReport make_bound_report(const ExperimentConfig& config) {
  config.validate();
  BoundReport rep;
  const GaussianPrior prior = config.make_prior();
  const SamplingDistribution mu = config.make_sampling();
  rep.eps = config.bound_eps;
  rep.mu_min = mu.mu_min;

  // Arms and theta0 come from the base seed's generation streams; mu_0 would
  // zero out every gap under the default prior.
  Rng arm_rng = derive_stream(config.base_seed, "actions");
  const ActionSet actions =
      build_action_set(config.K, config.d, config.rho, arm_rng);
  Rng env_rng = derive_stream(config.base_seed, "env");
  const Environment env = sample_environment(prior, actions, env_rng);
  const Vector& theta0 = env.theta;
  rep.theta0_source = "environment(base_seed)";

  rep.c1 = config.c1;
  rep.c1_heuristic = config.c1 == 0.0;
  if (rep.c1_heuristic) rep.c1 = default_c1(actions, prior);

  BoundConstants c;
  bool have_constants = false;
  try {
    c = bound_constants(config.N, config.K, config.T, config.agent_beta,
                        config.agent_lambda, config.d, mu.mu_min);
    have_constants = true;
    rep.delta = ReportField::ok(c.delta);
    rep.alpha1 = ReportField::ok(c.alpha1);
    rep.alpha2 = ReportField::ok(c.alpha2);
    rep.f1_tilde = ReportField::ok(c.f1_tilde);
    rep.f1 = ReportField::ok(c.f1);
    rep.f2 = ReportField::ok(c.f2);
    rep.appendix_variant_f2 = ReportField::ok(c.appendix_variant_f2);
  } catch (const DomainError& e) {
    const std::string why = std::string("undefined: ") + e.what();
    rep.delta = rep.alpha1 = rep.alpha2 = rep.f1_tilde = rep.f1 = rep.f2 =
        rep.appendix_variant_f2 = ReportField::undefined(why);
  }

  // Best arm vs runner-up under theta0.
  int best = env.optimal_index, second = -1;
  double v2 = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < config.K; ++k) {
    if (k == best) continue;
    const double v = actions.actions[k].dot(theta0);
    if (v > v2) {
      v2 = v;
      second = k;
    }
  }
  rep.two_action_idx0 = best;
  rep.two_action_idx1 = second;
  try {
    rep.two_action_n0 = ReportField::ok(
        two_action_n0(actions.actions[best], actions.actions[second], prior,
                      theta0, config.agent_beta, config.bound_eps));
  } catch (const DomainError& e) {
    rep.two_action_n0 = ReportField::undefined(std::string("undefined: ") + e.what());
  }

  try {
    const Theorem1Result t1 = theorem1_n0(actions, prior, theta0,
                                          config.agent_beta, config.bound_eps,
                                          mu.mu_min);
    rep.theorem1_n0 = ReportField::ok(t1.n0);
    rep.k_max = ReportField::ok(t1.k_max);
  } catch (const DomainError& e) {
    const std::string why = std::string("undefined: ") + e.what();
    rep.theorem1_n0 = ReportField::undefined(why);
    rep.k_max = ReportField::undefined(why);
  }

  if (have_constants) {
    try {
      rep.general_ps_bound = ReportField::ok(
          general_ps_bound(std::max(1.0, c.f2), std::min(c.f1, 1.0 - 1e-12),
                           config.K, config.T, rep.c1));
    } catch (const DomainError& e) {
      rep.general_ps_bound =
          ReportField::undefined(std::string("undefined: ") + e.what());
    }
    try {
      const WarmprefBound wb = warmpref_bound(c, config.K, config.T);
      rep.warmpref_bound = ReportField::ok(wb.value);
      rep.warmpref_bound_clamped = wb.clamped;
    } catch (const DomainError& e) {
      rep.warmpref_bound =
          ReportField::undefined(std::string("undefined: ") + e.what());
    }
  } else {
    rep.general_ps_bound = ReportField::undefined(rep.f1.reason);
    rep.warmpref_bound = ReportField::undefined(rep.f1.reason);
  }
  return rep;
}

}  // namespace prefbandit
