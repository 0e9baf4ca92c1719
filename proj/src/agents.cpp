#include "prefbandit/agents.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <limits>
#include <string>

#include "prefbandit/errors.hpp"

namespace prefbandit {

namespace {

// log(1 + e^x) without overflow; the negative-preference-log-likelihood term
// of one tuple is softplus(-beta * <winner - loser, vartheta>). Working with
// the gap directly keeps the rounding error proportional to the term's value
// even at beta ~ 1e3, where forming lse(b u0, b u1) - b u_y would cancel.
double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  const double t = std::exp(-std::abs(x));
  const double r = 1.0 / (1.0 + t);
  return x >= 0.0 ? r : 1.0 - r;
}

void check_dims(const Vector& theta, const Vector& vartheta,
                const ActionSet& actions, const GaussianPrior& prior) {
  if (theta.size() != vartheta.size() || theta.size() != actions.dim() ||
      theta.size() != prior.dim()) {
    throw NumericError("surrogate loss: dimension mismatch");
  }
}

Vector solve_spd(const Matrix& m, const Vector& rhs, const char* who) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericError(std::string(who) + ": matrix not positive definite");
  }
  return llt.solve(rhs);
}

}  // namespace

// ---------------------------------------------------------------------------
// Conjugate state (vanilla PS)

ConjugateState ConjugateState::from_prior(const GaussianPrior& prior) {
  const int d = prior.dim();
  const Matrix L = cholesky_lower(prior.covariance);
  // Sigma_0^{-1} via the factor; keeps the state exact for identity priors.
  Matrix inv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  Matrix precision = inv.transpose() * inv;
  ConjugateState s;
  s.precision = precision;
  s.shift = precision * prior.mean;
  return s;
}

void ConjugateState::observe(const Vector& action, double reward,
                             double sigma) {
  const double w = 1.0 / (sigma * sigma);
  precision += w * action * action.transpose();
  shift += w * action * reward;
}

Vector ConjugateState::mean() const {
  return solve_spd(precision, shift, "ConjugateState::mean");
}

Vector ConjugateState::sample(Rng& rng) const {
  Eigen::LLT<Matrix> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericError("ConjugateState::sample: precision not PD");
  }
  Vector z(shift.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  // theta = mean + L^{-T} z has covariance precision^{-1}.
  Matrix L = llt.matrixL();
  return llt.solve(shift) +
         L.transpose().triangularView<Eigen::Upper>().solve(z);
}

// ---------------------------------------------------------------------------
// Surrogate loss and perturbations

PerturbationSet PerturbationSet::none(int t, int n_offline, int d) {
  PerturbationSet p;
  p.zeta.assign(static_cast<std::size_t>(std::max(0, t - 1)), 0.0);
  p.omega.assign(static_cast<std::size_t>(n_offline), 1);
  p.theta_prime = Vector::Zero(d);
  p.vartheta_prime = Vector::Zero(d);
  return p;
}

PerturbationSet sample_perturbations(int t, int n_offline, double lambda,
                                     const GaussianPrior& prior, Rng& rng) {
  if (t < 1) throw ConfigError("sample_perturbations: t must be >= 1");
  if (!(lambda > 0.0)) {
    throw ConfigError("sample_perturbations: lambda must be positive");
  }
  const int d = prior.dim();
  PerturbationSet p;
  p.zeta.resize(static_cast<std::size_t>(t - 1));
  for (auto& z : p.zeta) z = rng.normal();
  p.omega.resize(static_cast<std::size_t>(n_offline));
  for (auto& w : p.omega) w = rng.bernoulli(0.5) ? 1 : 0;
  const Matrix L = cholesky_lower(prior.covariance);
  Vector z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  p.theta_prime = prior.mean + L * z;
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  p.vartheta_prime = prior.mean + z / lambda;
  return p;
}

static void check_perturb(const PerturbationSet& perturb,
                          const OnlineHistory& history,
                          const OfflineDataset& d0) {
  if (static_cast<int>(perturb.zeta.size()) != history.size() ||
      static_cast<int>(perturb.omega.size()) != d0.size()) {
    throw NumericError("perturbed loss: perturbation length mismatch");
  }
}

double perturbed_loss(const Vector& theta, const Vector& vartheta,
                      const OnlineHistory& history, const OfflineDataset& d0,
                      const ActionSet& actions, const PerturbationSet& perturb,
                      double beta, double lambda, const GaussianPrior& prior) {
  check_dims(theta, vartheta, actions, prior);
  check_perturb(perturb, history, d0);

  double l1 = 0.0;
  for (int s = 0; s < history.size(); ++s) {
    const double r = history.rewards[s] + perturb.zeta[s] -
                     history.actions[s].dot(theta);
    l1 += 0.5 * r * r;
  }

  double l2 = 0.0;
  for (int n = 0; n < d0.size(); ++n) {
    if (!perturb.omega[n]) continue;
    const auto& t = d0.tuples[n];
    const double gap = beta * (actions.actions[t.winner()] -
                               actions.actions[t.loser()])
                                  .dot(vartheta);
    l2 += softplus(-gap);
  }

  const Vector coupling = theta - vartheta + perturb.vartheta_prime;
  const Vector centered = theta - prior.mean - perturb.theta_prime;
  const Matrix L = cholesky_lower(prior.covariance);
  const Vector half = L.triangularView<Eigen::Lower>().solve(centered);
  const double l3 =
      0.5 * lambda * lambda * coupling.squaredNorm() + 0.5 * half.squaredNorm();

  return l1 + l2 + l3;
}

double surrogate_loss(const Vector& theta, const Vector& vartheta,
                      const OnlineHistory& history, const OfflineDataset& d0,
                      const ActionSet& actions, double beta, double lambda,
                      const GaussianPrior& prior) {
  return perturbed_loss(theta, vartheta, history, d0, actions,
                        PerturbationSet::none(history.size() + 1, d0.size(),
                                              prior.dim()),
                        beta, lambda, prior);
}

std::pair<Vector, Vector> loss_gradient(
    const Vector& theta, const Vector& vartheta, const OnlineHistory& history,
    const OfflineDataset& d0, const ActionSet& actions,
    const PerturbationSet& perturb, double beta, double lambda,
    const GaussianPrior& prior) {
  check_dims(theta, vartheta, actions, prior);
  check_perturb(perturb, history, d0);
  const int d = prior.dim();

  Vector g_theta = Vector::Zero(d);
  for (int s = 0; s < history.size(); ++s) {
    const double r = history.rewards[s] + perturb.zeta[s] -
                     history.actions[s].dot(theta);
    g_theta -= history.actions[s] * r;
  }

  Vector g_vartheta = Vector::Zero(d);
  for (int n = 0; n < d0.size(); ++n) {
    if (!perturb.omega[n]) continue;
    const auto& t = d0.tuples[n];
    const Vector& a0 = actions.actions[t.idx0];
    const Vector& a1 = actions.actions[t.idx1];
    const double p0 = sigmoid(beta * (a0 - a1).dot(vartheta));
    const Vector& winner = t.y == 0 ? a0 : a1;
    g_vartheta += beta * (p0 * a0 + (1.0 - p0) * a1 - winner);
  }

  const Vector coupling =
      lambda * lambda * (theta - vartheta + perturb.vartheta_prime);
  g_theta += coupling;
  g_vartheta -= coupling;

  const Vector centered = theta - prior.mean - perturb.theta_prime;
  const Matrix L = cholesky_lower(prior.covariance);
  const Vector half = L.triangularView<Eigen::Lower>().solve(centered);
  g_theta += L.transpose().triangularView<Eigen::Upper>().solve(half);

  return {g_theta, g_vartheta};
}

Matrix loss_hessian(const Vector& vartheta, const OnlineHistory& history,
                    const OfflineDataset& d0, const ActionSet& actions,
                    const PerturbationSet& perturb, double beta, double lambda,
                    const GaussianPrior& prior) {
  const int d = prior.dim();
  const double l2sq = lambda * lambda;

  Matrix h_tt = l2sq * Matrix::Identity(d, d);
  for (int s = 0; s < history.size(); ++s) {
    h_tt += history.actions[s] * history.actions[s].transpose();
  }
  const Matrix L = cholesky_lower(prior.covariance);
  const Matrix inv =
      L.triangularView<Eigen::Lower>().solve(Matrix::Identity(d, d));
  h_tt += inv.transpose() * inv;

  Matrix h_vv = l2sq * Matrix::Identity(d, d);
  for (int n = 0; n < d0.size(); ++n) {
    if (!perturb.omega[n]) continue;
    const auto& t = d0.tuples[n];
    const Vector diff = actions.actions[t.idx0] - actions.actions[t.idx1];
    const double p0 = sigmoid(beta * diff.dot(vartheta));
    h_vv += beta * beta * p0 * (1.0 - p0) * diff * diff.transpose();
  }

  Matrix h(2 * d, 2 * d);
  h.topLeftCorner(d, d) = h_tt;
  h.bottomRightCorner(d, d) = h_vv;
  h.topRightCorner(d, d) = -l2sq * Matrix::Identity(d, d);
  h.bottomLeftCorner(d, d) = -l2sq * Matrix::Identity(d, d);
  return h;
}

// ---------------------------------------------------------------------------
// Bootstrapped warmPref-PS

BootstrappedAgent::BootstrappedAgent(const ActionSet& actions,
                                     const GaussianPrior& prior,
                                     const OfflineDataset& d0,
                                     double agent_beta, double agent_lambda,
                                     SolveSettings settings)
    : actions_(actions),
      prior_(prior),
      d0_(d0),
      beta_(agent_beta),
      lambda_(agent_lambda),
      settings_(settings) {
  if (!(agent_beta >= 0.0)) throw ConfigError("agent beta must be >= 0");
  if (!(agent_lambda > 0.0)) throw ConfigError("agent lambda must be > 0");
  warm_start_ = Vector::Zero(2 * prior.dim());
  warm_start_.head(prior.dim()) = prior.mean;
  warm_start_.tail(prior.dim()) = prior.mean;
}

double BootstrappedAgent::effective_tolerance() const {
  // Gradient components carry a lambda^2 factor, so their absolute rounding
  // noise is about lambda^2 * eps; below that no solver can certify descent.
  const double floor =
      lambda_ * lambda_ * std::sqrt(2.0 * prior_.dim()) * 1e-14;
  return std::max(settings_.grad_tolerance, floor);
}

MapEstimate BootstrappedAgent::solve_map(const PerturbationSet& perturb) {
  const int d = prior_.dim();
  const Objective objective = [&](const Vector& x) {
    return perturbed_loss(x.head(d), x.tail(d), history_, d0_, actions_,
                          perturb, beta_, lambda_, prior_);
  };
  const GradientFn gradient = [&](const Vector& x) {
    auto [gt, gv] = loss_gradient(x.head(d), x.tail(d), history_, d0_,
                                  actions_, perturb, beta_, lambda_, prior_);
    Vector g(2 * d);
    g.head(d) = gt;
    g.tail(d) = gv;
    return g;
  };
  const HessianFn hessian = [&](const Vector& x) {
    return loss_hessian(x.tail(d), history_, d0_, actions_, perturb, beta_,
                        lambda_, prior_);
  };

  SolveSettings settings = settings_;
  settings.grad_tolerance = effective_tolerance();
  auto [x, report] = minimize(objective, gradient, warm_start_, settings,
                              &hessian);
  if (!report.converged) {
    throw StepError("MAP solve did not converge at t=" +
                    std::to_string(history_.size() + 1) + ": |grad|=" +
                    std::to_string(report.final_grad_norm) + " after " +
                    std::to_string(report.iterations) + " iterations");
  }
  warm_start_ = x;

  MapEstimate est;
  est.theta_hat = x.head(d);
  est.vartheta_hat = x.tail(d);
  est.final_gradient_norm = report.final_grad_norm;
  est.iterations = report.iterations;
  return est;
}

std::pair<int, MapEstimate> BootstrappedAgent::step(const Environment& env,
                                                    const RewardModel& model,
                                                    Rng& rng) {
  const int t = history_.size() + 1;
  const PerturbationSet perturb =
      sample_perturbations(t, d0_.size(), lambda_, prior_, rng);
  MapEstimate est = solve_map(perturb);
  const int arm = argmax_action(actions_, est.theta_hat);
  const double r = reward(env, actions_.actions[arm], model, rng);
  history_.append(actions_.actions[arm], r);
  return {arm, est};
}

// ---------------------------------------------------------------------------
// Vanilla PS

VanillaPsAgent::VanillaPsAgent(const ActionSet& actions,
                               const GaussianPrior& prior, double sigma)
    : actions_(actions),
      state_(ConjugateState::from_prior(prior)),
      sigma_(sigma) {
  if (!(sigma > 0.0)) throw ConfigError("vanilla PS: sigma must be positive");
}

int VanillaPsAgent::step(const Environment& env, const RewardModel& model,
                         Rng& rng) {
  const Vector theta_tilde = state_.sample(rng);
  const int arm = argmax_action(actions_, theta_tilde);
  const double r = reward(env, actions_.actions[arm], model, rng);
  state_.observe(actions_.actions[arm], r, sigma_);
  return arm;
}

// ---------------------------------------------------------------------------
// warmTSOF

double get_epsilon(const TsofConfig& cfg, int t) {
  if (t < 1) throw ConfigError("get_epsilon: t must be >= 1");
  switch (cfg.rule) {
    case TsofConfig::Rule::Constant:
      return cfg.epsilon;
    case TsofConfig::Rule::InverseSqrt:
      return cfg.epsilon / std::sqrt(static_cast<double>(t));
  }
  throw ConfigError("get_epsilon: unknown rule");
}

WarmTsofAgent::WarmTsofAgent(const ActionSet& actions,
                             const GaussianPrior& prior,
                             const OfflineDataset& d0, double agent_beta,
                             double agent_lambda, TsofConfig cfg,
                             SolveSettings settings)
    : BootstrappedAgent(actions, prior, d0, agent_beta, agent_lambda,
                        settings),
      cfg_(cfg) {
  if (actions.size() < 2) throw ConfigError("warmTSOF needs K >= 2 arms");
  if (!(cfg.cost >= 0.0)) throw ConfigError("warmTSOF: cost must be >= 0");
}

TsofStepResult WarmTsofAgent::step(const Environment& env,
                                   const RewardModel& model,
                                   const Rater& rater, Rng& rng) {
  const int t = history_.size() + 1;
  PerturbationSet perturb =
      sample_perturbations(t, d0_.size(), lambda_, prior_, rng);
  TsofStepResult result;
  result.estimate = solve_map(perturb);

  // Top-two arms under theta_hat, lowest index on ties.
  int first = 0, second = -1;
  double v_first = actions_.actions[0].dot(result.estimate.theta_hat);
  double v_second = -std::numeric_limits<double>::infinity();
  for (int k = 1; k < actions_.size(); ++k) {
    const double v = actions_.actions[k].dot(result.estimate.theta_hat);
    if (v > v_first) {
      second = first;
      v_second = v_first;
      first = k;
      v_first = v;
    } else if (v > v_second) {
      second = k;
      v_second = v;
    }
  }

  const double eps_t = get_epsilon(cfg_, t);
  if (std::abs(v_first - v_second) < eps_t) {
    PreferenceTuple fb;
    fb.idx0 = first;
    fb.idx1 = second;
    const Vector& a0 = actions_.actions[first];
    const Vector& a1 = actions_.actions[second];
    if (rater.policy_kind == ExpertPolicy::DeterministicGreedy) {
      fb.y = a1.dot(rater.vartheta) > a0.dot(rater.vartheta) ? 1 : 0;
    } else {
      const double p0 =
          preference_prob(a0, a1, rater.vartheta, rater.competence.beta);
      fb.y = rng.bernoulli(p0) ? 0 : 1;
    }
    d0_.tuples.push_back(fb);
    // Same round's perturbations, extended with one fresh mask bit for the
    // new tuple.
    perturb.omega.push_back(rng.bernoulli(0.5) ? 1 : 0);
    result.estimate = solve_map(perturb);
    result.action = argmax_action(actions_, result.estimate.theta_hat);
    result.cost_incurred = cfg_.cost;
    result.feedback = fb;
  } else {
    result.action = first;
    result.cost_incurred = 0.0;
  }

  const double r = reward(env, actions_.actions[result.action], model, rng);
  history_.append(actions_.actions[result.action], r);
  return result;
}

}  // namespace prefbandit
