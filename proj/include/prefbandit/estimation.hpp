#pragma once

#include "prefbandit/environment.hpp"
#include "prefbandit/offline_data.hpp"
#include "prefbandit/optimizer.hpp"

namespace prefbandit {

enum class BetaMethod { Mle, Entropy };

struct BetaClamp {
  double lo = 1e-3;
  double hi = 1e3;
};

struct BetaEstimate {
  double value = 0.0;
  BetaMethod method = BetaMethod::Mle;
  // Diagnostics: preference log-likelihood at beta-hat (MLE), or the measured
  // entropy and its hyperparameter (Entropy).
  double log_likelihood = 0.0;
  double entropy = 0.0;
  double c = 0.0;
  int rounds = 0;
};

// Alternating profile scheme: re-solve the (theta, vartheta) MAP at the
// current beta, then golden-section the preference likelihood over log beta.
// Separable datasets drive the likelihood maximum to infinity, so the clamp
// is load-bearing, not cosmetic.
BetaEstimate estimate_beta_mle(const OfflineDataset& d0,
                               const ActionSet& actions,
                               const GaussianPrior& prior, double lambda,
                               BetaClamp clamp = {},
                               SolveSettings settings = {});

// beta-hat = clamp(c / max(H, 1e-6)); c defaults to ln K when zero.
BetaEstimate estimate_beta_entropy(const OfflineDataset& d0, int K, double c,
                                   BetaClamp clamp = {},
                                   EntropyOver over = EntropyOver::Winners);

// Negative Bradley-Terry log-likelihood of the dataset at fixed vartheta.
double preference_nll(const OfflineDataset& d0, const ActionSet& actions,
                      const Vector& vartheta, double beta);

}  // namespace prefbandit
