#include "prefbandit/environment.hpp"

#include <cmath>
#include <string>

#include "prefbandit/errors.hpp"

namespace prefbandit {

GaussianPrior GaussianPrior::standard(int d) {
  return GaussianPrior{Vector::Zero(d), Matrix::Identity(d, d)};
}

Matrix cholesky_lower(const Matrix& m) {
  const auto n = m.rows();
  if (n != m.cols()) throw NumericError("cholesky: matrix not square");
  Matrix L = Matrix::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    double diag = m(j, j) - L.row(j).head(j).squaredNorm();
    if (!(diag > 0.0)) {
      throw NumericError("cholesky: leading minor of order " +
                         std::to_string(j + 1) + " is not positive definite");
    }
    L(j, j) = std::sqrt(diag);
    for (Eigen::Index i = j + 1; i < n; ++i) {
      L(i, j) = (m(i, j) - L.row(i).head(j).dot(L.row(j).head(j))) / L(j, j);
    }
  }
  return L;
}

double max_pairwise_l1(const std::vector<Vector>& vs) {
  double best = 0.0;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    for (std::size_t j = i + 1; j < vs.size(); ++j) {
      best = std::max(best, (vs[i] - vs[j]).lpNorm<1>());
    }
  }
  return best;
}

ActionSet build_action_set(int K, int d, double rho, Rng& rng) {
  if (K < 2) throw ConfigError("build_action_set: K must be >= 2");
  if (d < 1) throw ConfigError("build_action_set: d must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw ConfigError("build_action_set: rho must lie in [0, 1)");
  }

  Vector shared(d);
  for (int i = 0; i < d; ++i) shared[i] = rng.normal();

  std::vector<Vector> arms;
  arms.reserve(K);
  const double s_shared = std::sqrt(rho);
  const double s_own = std::sqrt(1.0 - rho);
  for (int k = 0; k < K; ++k) {
    Vector w(d);
    for (int i = 0; i < d; ++i) w[i] = rng.normal();
    arms.push_back(s_shared * shared + s_own * w);
  }

  const double diameter = max_pairwise_l1(arms);
  if (!(diameter > 0.0)) {
    throw NumericError("build_action_set: degenerate arm draw (zero diameter)");
  }
  for (auto& a : arms) a /= diameter;

  return ActionSet{std::move(arms), rho};
}

int argmax_action(const ActionSet& actions, const Vector& direction) {
  int best = 0;
  double best_value = actions.actions[0].dot(direction);
  for (int k = 1; k < actions.size(); ++k) {
    const double v = actions.actions[k].dot(direction);
    if (v > best_value) {
      best = k;
      best_value = v;
    }
  }
  return best;
}

Environment make_environment(const ActionSet& actions, Vector theta) {
  if (actions.dim() != theta.size()) {
    throw NumericError("make_environment: theta dimension mismatch");
  }
  Environment env;
  env.theta = std::move(theta);
  env.optimal_index = argmax_action(actions, env.theta);
  env.optimal_value = actions.actions[env.optimal_index].dot(env.theta);
  return env;
}

Environment sample_environment(const GaussianPrior& prior,
                               const ActionSet& actions, Rng& rng) {
  if (prior.dim() != actions.dim()) {
    throw NumericError("sample_environment: prior/action dimension mismatch");
  }
  const Matrix L = cholesky_lower(prior.covariance);
  Vector z(prior.dim());
  for (int i = 0; i < prior.dim(); ++i) z[i] = rng.normal();
  return make_environment(actions, prior.mean + L * z);
}

double reward(const Environment& env, const Vector& action,
              const RewardModel& model, Rng& rng) {
  if (action.size() != env.theta.size()) {
    throw NumericError("reward: action dimension mismatch");
  }
  return action.dot(env.theta) + model.noise_std * rng.normal();
}

double instant_regret(const Environment& env, const Vector& action) {
  if (action.size() != env.theta.size()) {
    throw NumericError("instant_regret: action dimension mismatch");
  }
  return env.optimal_value - action.dot(env.theta);
}

}  // namespace prefbandit
