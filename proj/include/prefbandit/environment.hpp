#pragma once

#include <Eigen/Dense>
#include <vector>

#include "prefbandit/rng.hpp"

namespace prefbandit {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Uninformed Gaussian belief over the environment parameter.
struct GaussianPrior {
  Vector mean;        // mu_0
  Matrix covariance;  // Sigma_0, symmetric positive definite

  int dim() const { return static_cast<int>(mean.size()); }
  static GaussianPrior standard(int d);
};

// Lower-triangular Cholesky factor of an SPD matrix. Throws NumericError
// naming the failing leading minor when the factorization breaks down.
Matrix cholesky_lower(const Matrix& m);

// K arms in R^d, globally rescaled so the largest pairwise L1 distance is 1.
struct ActionSet {
  std::vector<Vector> actions;
  double correlation_target = 0.0;  // rho used at generation time

  int size() const { return static_cast<int>(actions.size()); }
  int dim() const { return actions.empty() ? 0 : static_cast<int>(actions[0].size()); }
};

struct Environment {
  Vector theta;
  int optimal_index = 0;
  double optimal_value = 0.0;
};

struct RewardModel {
  double noise_std;  // sigma > 0
};

// Arms drawn as sqrt(rho)*z + sqrt(1-rho)*w_k with a shared z, so the
// expected pairwise cosine similarity is rho; then rescaled to L1 diameter 1.
ActionSet build_action_set(int K, int d, double rho, Rng& rng);

Environment sample_environment(const GaussianPrior& prior,
                               const ActionSet& actions, Rng& rng);

// Environment for a caller-chosen theta (tests, theory diagnostics).
Environment make_environment(const ActionSet& actions, Vector theta);

double reward(const Environment& env, const Vector& action,
              const RewardModel& model, Rng& rng);

// Noise-free gap <A*, theta> - <action, theta>.
double instant_regret(const Environment& env, const Vector& action);

// Argmax of <a_k, direction> over the set, lowest index on ties.
int argmax_action(const ActionSet& actions, const Vector& direction);

double max_pairwise_l1(const std::vector<Vector>& vs);

}  // namespace prefbandit
