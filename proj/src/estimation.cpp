#include "prefbandit/estimation.hpp"

#include <cmath>

#include "prefbandit/agents.hpp"
#include "prefbandit/errors.hpp"

namespace prefbandit {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// Golden-section minimum over [lo, hi]; ties shrink toward lo, so a flat
// likelihood resolves to the least deliberate rater.
double golden_min(const std::function<double(double)>& f, double lo,
                  double hi) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

double preference_nll(const OfflineDataset& d0, const ActionSet& actions,
                      const Vector& vartheta, double beta) {
  double nll = 0.0;
  for (const auto& t : d0.tuples) {
    const double gap = beta * (actions.actions[t.winner()] -
                               actions.actions[t.loser()])
                                  .dot(vartheta);
    nll += softplus(-gap);
  }
  return nll;
}

BetaEstimate estimate_beta_mle(const OfflineDataset& d0,
                               const ActionSet& actions,
                               const GaussianPrior& prior, double lambda,
                               BetaClamp clamp, SolveSettings settings) {
  if (d0.size() < 1) throw DomainError("estimate_beta_mle: empty dataset");
  if (!(clamp.lo > 0.0 && clamp.lo < clamp.hi)) {
    throw ConfigError("estimate_beta_mle: need 0 < beta_lo < beta_hi");
  }

  const double log_lo = std::log(clamp.lo), log_hi = std::log(clamp.hi);
  double beta = std::sqrt(clamp.lo * clamp.hi);
  BetaEstimate est;
  est.method = BetaMethod::Mle;

  OnlineHistory empty_history;
  Vector vartheta_hat = prior.mean;
  for (int round = 1; round <= 10; ++round) {
    est.rounds = round;
    BootstrappedAgent profile(actions, prior, d0, beta, lambda, settings);
    const MapEstimate map = profile.solve_map(
        PerturbationSet::none(1, d0.size(), prior.dim()));
    vartheta_hat = map.vartheta_hat;

    const double next_log_beta = golden_min(
        [&](double lb) {
          return preference_nll(d0, actions, vartheta_hat, std::exp(lb));
        },
        log_lo, log_hi);
    const double next_beta = std::exp(next_log_beta);
    const bool settled = std::abs(next_beta - beta) < 0.01 * beta;
    beta = next_beta;
    if (settled) break;
  }

  est.value = std::clamp(beta, clamp.lo, clamp.hi);
  est.log_likelihood = -preference_nll(d0, actions, vartheta_hat, est.value);
  return est;
}

BetaEstimate estimate_beta_entropy(const OfflineDataset& d0, int K, double c,
                                   BetaClamp clamp, EntropyOver over) {
  if (d0.size() < 1) throw DomainError("estimate_beta_entropy: empty dataset");
  if (!(c > 0.0)) throw ConfigError("estimate_beta_entropy: c must be > 0");
  if (!(clamp.lo > 0.0 && clamp.lo < clamp.hi)) {
    throw ConfigError("estimate_beta_entropy: need 0 < beta_lo < beta_hi");
  }
  BetaEstimate est;
  est.method = BetaMethod::Entropy;
  est.c = c;
  est.entropy = dataset_entropy(d0, K, over);
  est.value = std::clamp(c / std::max(est.entropy, 1e-6), clamp.lo, clamp.hi);
  est.rounds = 1;
  return est;
}

}  // namespace prefbandit
