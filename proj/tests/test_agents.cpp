#include <doctest.h>

#include <cmath>

#include "prefbandit/agents.hpp"
#include "prefbandit/errors.hpp"

using namespace prefbandit;

namespace {

// Straight-line re-implementation of the perturbed loss, deliberately kept
// naive (explicit exp/log, explicit matrix inverse) and independent of the
// library code path.
double reference_loss(const Vector& theta, const Vector& vartheta,
                      const OnlineHistory& history, const OfflineDataset& d0,
                      const ActionSet& actions, const PerturbationSet& p,
                      double beta, double lambda, const GaussianPrior& prior) {
  double l1 = 0.0;
  for (int s = 0; s < history.size(); ++s) {
    const double r =
        history.rewards[s] + p.zeta[s] - history.actions[s].dot(theta);
    l1 += 0.5 * r * r;
  }
  double l2 = 0.0;
  for (int n = 0; n < d0.size(); ++n) {
    if (!p.omega[n]) continue;
    const auto& t = d0.tuples[n];
    const double e0 = std::exp(beta * actions.actions[t.idx0].dot(vartheta));
    const double e1 = std::exp(beta * actions.actions[t.idx1].dot(vartheta));
    l2 += std::log(e0 + e1) -
          beta * actions.actions[t.y == 0 ? t.idx0 : t.idx1].dot(vartheta);
  }
  const Vector u = theta - vartheta + p.vartheta_prime;
  const Vector v = theta - prior.mean - p.theta_prime;
  const double l3 = 0.5 * lambda * lambda * u.squaredNorm() +
                    0.5 * v.dot(prior.covariance.inverse() * v);
  return l1 + l2 + l3;
}

struct Fixture {
  ActionSet actions;
  GaussianPrior prior;
  Environment env;
  OfflineDataset d0;
  OnlineHistory history;

  explicit Fixture(int K = 4, int d = 3, int N = 6, int t_minus_1 = 5,
                   std::uint64_t seed = 100) {
    Rng rng(seed);
    actions = build_action_set(K, d, 0.2, rng);
    prior = GaussianPrior::standard(d);
    env = sample_environment(prior, actions, rng);
    Rater rater =
        sample_rater(env, {3.0, 5.0, false}, ExpertPolicy::BradleyTerry, rng);
    d0 = generate_dataset(env, actions, rater,
                          SamplingDistribution::uniform(K), N, rng);
    const RewardModel model{1.0};
    for (int s = 0; s < t_minus_1; ++s) {
      const auto& a = actions.actions[s % K];
      history.append(a, reward(env, a, model, rng));
    }
  }
};

Vector random_vec(int d, Rng& rng) {
  Vector v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

TEST_CASE("surrogate loss vanishes at the prior with no data") {
  Fixture fx(4, 3, 0, 0);
  const Vector mu = fx.prior.mean;
  OfflineDataset empty;
  empty.sampling = SamplingDistribution::uniform(4);
  OnlineHistory none;
  CHECK(surrogate_loss(mu, mu, none, empty, fx.actions, 2.0, 3.0, fx.prior) ==
        0.0);
}

TEST_CASE("only the coupling term survives at theta = mu0, vartheta = mu0+u") {
  Fixture fx;
  OfflineDataset empty;
  empty.sampling = SamplingDistribution::uniform(4);
  OnlineHistory none;
  Rng rng(7);
  const Vector u = random_vec(3, rng);
  const double lambda = 4.0;
  const double loss = surrogate_loss(fx.prior.mean, fx.prior.mean + u, none,
                                     empty, fx.actions, 2.0, lambda, fx.prior);
  CHECK(loss ==
        doctest::Approx(0.5 * lambda * lambda * u.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("a single tuple at beta=0 contributes exactly ln 2") {
  Fixture fx;
  OfflineDataset one;
  one.sampling = SamplingDistribution::uniform(4);
  one.tuples.push_back({0, 1, 0});
  OnlineHistory none;
  Rng rng(8);
  const Vector theta = random_vec(3, rng);
  const Vector vartheta = random_vec(3, rng);
  const double with = surrogate_loss(theta, vartheta, none, one, fx.actions,
                                     0.0, 2.0, fx.prior);
  OfflineDataset empty;
  empty.sampling = one.sampling;
  const double without = surrogate_loss(theta, vartheta, none, empty,
                                        fx.actions, 0.0, 2.0, fx.prior);
  CHECK(with - without == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("zero perturbations reproduce the plain surrogate") {
  Fixture fx;
  Rng rng(9);
  const Vector theta = random_vec(3, rng);
  const Vector vartheta = random_vec(3, rng);
  const auto none =
      PerturbationSet::none(fx.history.size() + 1, fx.d0.size(), 3);
  const double a = perturbed_loss(theta, vartheta, fx.history, fx.d0,
                                  fx.actions, none, 3.0, 2.0, fx.prior);
  const double b = surrogate_loss(theta, vartheta, fx.history, fx.d0,
                                  fx.actions, 3.0, 2.0, fx.prior);
  CHECK(a == b);
}

TEST_CASE("a zero mask removes the offline term entirely") {
  Fixture fx;
  Rng rng(10);
  const Vector theta = random_vec(3, rng);
  const Vector vartheta = random_vec(3, rng);
  auto p = PerturbationSet::none(fx.history.size() + 1, fx.d0.size(), 3);
  std::fill(p.omega.begin(), p.omega.end(), 0);
  OfflineDataset empty;
  empty.sampling = fx.d0.sampling;
  const auto p_empty = PerturbationSet::none(fx.history.size() + 1, 0, 3);
  const double masked = perturbed_loss(theta, vartheta, fx.history, fx.d0,
                                       fx.actions, p, 3.0, 2.0, fx.prior);
  const double no_data = perturbed_loss(theta, vartheta, fx.history, empty,
                                        fx.actions, p_empty, 3.0, 2.0,
                                        fx.prior);
  CHECK(masked == doctest::Approx(no_data).epsilon(1e-15));
}

TEST_CASE("perturbed loss matches the straight-line reference") {
  Fixture fx;
  Rng rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector theta = random_vec(3, rng);
    const Vector vartheta = random_vec(3, rng);
    const PerturbationSet p = sample_perturbations(
        fx.history.size() + 1, fx.d0.size(), 2.0, fx.prior, rng);
    const double lib = perturbed_loss(theta, vartheta, fx.history, fx.d0,
                                      fx.actions, p, 3.0, 2.0, fx.prior);
    const double ref = reference_loss(theta, vartheta, fx.history, fx.d0,
                                      fx.actions, p, 3.0, 2.0, fx.prior);
    CHECK(lib == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("perturbation length mismatches are numeric errors") {
  Fixture fx;
  auto p = PerturbationSet::none(fx.history.size() + 1, fx.d0.size(), 3);
  p.zeta.pop_back();
  CHECK_THROWS_AS(perturbed_loss(fx.prior.mean, fx.prior.mean, fx.history,
                                 fx.d0, fx.actions, p, 3.0, 2.0, fx.prior),
                  NumericError);
}

TEST_CASE("gradient is zero at the unperturbed no-data minimum") {
  Fixture fx;
  OfflineDataset empty;
  empty.sampling = fx.d0.sampling;
  OnlineHistory none;
  const auto p = PerturbationSet::none(1, 0, 3);
  const auto [gt, gv] = loss_gradient(fx.prior.mean, fx.prior.mean, none,
                                      empty, fx.actions, p, 3.0, 2.0, fx.prior);
  CHECK(gt.norm() == 0.0);
  CHECK(gv.norm() == 0.0);
}

TEST_CASE("analytic gradient matches central differences") {
  Fixture fx;
  Rng rng(12);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const PerturbationSet p = sample_perturbations(
        fx.history.size() + 1, fx.d0.size(), 2.0, fx.prior, rng);
    Vector x(6);
    for (int i = 0; i < 6; ++i) x[i] = rng.normal();
    const Objective f = [&](const Vector& v) {
      return perturbed_loss(v.head(3), v.tail(3), fx.history, fx.d0,
                            fx.actions, p, 3.0, 2.0, fx.prior);
    };
    const GradientFn g = [&](const Vector& v) {
      const auto [gt, gv] = loss_gradient(v.head(3), v.tail(3), fx.history,
                                          fx.d0, fx.actions, p, 3.0, 2.0,
                                          fx.prior);
      Vector out(6);
      out << gt, gv;
      return out;
    };
    worst = std::max(worst, check_gradient(f, g, x, 1e-5));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("at beta=0 the vartheta gradient reduces to the coupling") {
  Fixture fx;
  Rng rng(13);
  const PerturbationSet p = sample_perturbations(
      fx.history.size() + 1, fx.d0.size(), 2.0, fx.prior, rng);
  const Vector theta = random_vec(3, rng);
  const Vector vartheta = random_vec(3, rng);
  const double lambda = 2.0;
  const auto [gt, gv] = loss_gradient(theta, vartheta, fx.history, fx.d0,
                                      fx.actions, p, 0.0, lambda, fx.prior);
  const Vector expected =
      -lambda * lambda * (theta - vartheta + p.vartheta_prime);
  CHECK((gv - expected).norm() == 0.0);
}

TEST_CASE("perturbed loss is midpoint convex") {
  Fixture fx;
  Rng rng(14);
  const PerturbationSet p = sample_perturbations(
      fx.history.size() + 1, fx.d0.size(), 2.0, fx.prior, rng);
  const auto value = [&](const Vector& v) {
    return perturbed_loss(v.head(3), v.tail(3), fx.history, fx.d0, fx.actions,
                          p, 3.0, 2.0, fx.prior);
  };
  for (int rep = 0; rep < 1000; ++rep) {
    Vector x(6), y(6);
    for (int i = 0; i < 6; ++i) {
      x[i] = 3.0 * rng.normal();
      y[i] = 3.0 * rng.normal();
    }
    const double w = rng.uniform01();
    const Vector z = w * x + (1.0 - w) * y;
    CHECK(value(z) <= w * value(x) + (1.0 - w) * value(y) + 1e-9);
  }
}

TEST_CASE("perturbation sampling shapes and moments") {
  const GaussianPrior prior = GaussianPrior::standard(3);
  Rng rng(15);

  const PerturbationSet first = sample_perturbations(1, 20, 5.0, prior, rng);
  CHECK(first.zeta.empty());
  CHECK(first.omega.size() == 20);

  long long ones = 0, total = 0;
  double vp_sq = 0.0;
  const int rounds = 10000;
  for (int rep = 0; rep < rounds; ++rep) {
    const PerturbationSet p = sample_perturbations(4, 20, 5.0, prior, rng);
    for (auto w : p.omega) ones += w;
    total += 20;
    vp_sq += (p.vartheta_prime - prior.mean).squaredNorm() / 3.0;
  }
  const double mean_omega = double(ones) / double(total);
  CHECK(std::abs(mean_omega - 0.5) < 3.0 * std::sqrt(0.25 / double(total)));
  CHECK(vp_sq / rounds == doctest::Approx(1.0 / 25.0).epsilon(0.05));
}

TEST_CASE("MAP solve lands at a certified stationary point") {
  Fixture fx;
  Rng rng(16);
  BootstrappedAgent agent(fx.actions, fx.prior, fx.d0, 3.0, 2.0);
  for (int t = 0; t < 5; ++t) {
    agent.step(fx.env, RewardModel{1.0}, rng);
  }
  const PerturbationSet p = sample_perturbations(6, fx.d0.size(), 2.0,
                                                 fx.prior, rng);
  const MapEstimate est = agent.solve_map(p);
  CHECK(est.final_gradient_norm <= agent.effective_tolerance());
  const auto [gt, gv] =
      loss_gradient(est.theta_hat, est.vartheta_hat, agent.history(), fx.d0,
                    fx.actions, p, 3.0, 2.0, fx.prior);
  Vector g(6);
  g << gt, gv;
  CHECK(g.norm() <= agent.effective_tolerance());
}

TEST_CASE("played arm is invariant to positive rescaling of theta_hat") {
  Fixture fx;
  Rng rng(17);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector theta = random_vec(3, rng);
    const int base = argmax_action(fx.actions, theta);
    for (double scale : {1e-6, 0.5, 3.0, 1e6}) {
      CHECK(argmax_action(fx.actions, Vector(scale * theta)) == base);
    }
  }
}

TEST_CASE("vanilla PS closed-form update in one dimension") {
  ActionSet a;
  a.actions = {Vector(1), Vector(1)};
  a.actions[0] << 1.0;
  a.actions[1] << 0.0;
  GaussianPrior prior = GaussianPrior::standard(1);
  ConjugateState s = ConjugateState::from_prior(prior);
  s.observe(a.actions[0], 2.0, 1.0);
  CHECK(s.precision(0, 0) == doctest::Approx(2.0));
  CHECK(s.mean()[0] == doctest::Approx(1.0));  // (0 + 2) / 2
}

TEST_CASE("conjugate prefix updates equal the one-shot batch form") {
  Rng rng(18);
  const int d = 3;
  const GaussianPrior prior = GaussianPrior::standard(d);
  ConjugateState s = ConjugateState::from_prior(prior);
  Matrix gram = Matrix::Zero(d, d);
  Vector acc = Vector::Zero(d);
  const double sigma = 0.7;
  for (int n = 0; n < 200; ++n) {
    const Vector a = random_vec(d, rng);
    const double r = rng.normal();
    s.observe(a, r, sigma);
    gram += a * a.transpose() / (sigma * sigma);
    acc += a * r / (sigma * sigma);
  }
  const Matrix batch_precision = Matrix::Identity(d, d) + gram;
  const Vector batch_mean = batch_precision.ldlt().solve(acc);
  CHECK((s.precision - batch_precision).norm() / batch_precision.norm() <
        1e-10);
  CHECK((s.mean() - batch_mean).norm() /
            std::max(1.0, batch_mean.norm()) <
        1e-10);
}

TEST_CASE("before any data the PS draw follows the prior") {
  const int d = 2;
  GaussianPrior prior;
  prior.mean = Vector(d);
  prior.mean << 1.5, -0.5;
  prior.covariance = Matrix::Identity(d, d);
  const ConjugateState s = ConjugateState::from_prior(prior);
  Rng rng(19);
  Vector sum = Vector::Zero(d);
  const int n = 10000;
  for (int i = 0; i < n; ++i) sum += s.sample(rng);
  for (int i = 0; i < d; ++i) {
    CHECK(std::abs(sum[i] / n - prior.mean[i]) < 4.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("a collapsed prior always plays the argmax under mu0") {
  Rng arm_rng(20);
  const ActionSet a = build_action_set(5, 2, 0.1, arm_rng);
  GaussianPrior prior;
  prior.mean = Vector(2);
  prior.mean << 0.8, -0.3;
  prior.covariance = 1e-12 * Matrix::Identity(2, 2);
  const int expected = argmax_action(a, prior.mean);
  const Environment env = make_environment(a, prior.mean);
  VanillaPsAgent agent(a, prior, 1.0);
  Rng rng(21);
  for (int t = 0; t < 50; ++t) {
    CHECK(agent.step(env, RewardModel{1e-9}, rng) == expected);
  }
}

TEST_CASE("identical seeds give identical warmPref trajectories") {
  Fixture fx;
  std::vector<int> first, second;
  for (auto* target : {&first, &second}) {
    BootstrappedAgent agent(fx.actions, fx.prior, fx.d0, 3.0, 2.0);
    Rng rng(22);
    for (int t = 0; t < 30; ++t) {
      target->push_back(agent.step(fx.env, RewardModel{1.0}, rng).first);
    }
  }
  CHECK(first == second);
}

TEST_CASE("beta=0 warmPref and naive-PS are the same trajectory") {
  Fixture fx;
  std::vector<int> warm, naive;
  {
    BootstrappedAgent agent(fx.actions, fx.prior, fx.d0, 0.0, 2.0);
    Rng rng(23);
    for (int t = 0; t < 30; ++t)
      warm.push_back(agent.step(fx.env, RewardModel{1.0}, rng).first);
  }
  {
    // The naive baseline is by definition the same agent constructed at 0.
    BootstrappedAgent agent(fx.actions, fx.prior, fx.d0, 0.0, 2.0);
    Rng rng(23);
    for (int t = 0; t < 30; ++t)
      naive.push_back(agent.step(fx.env, RewardModel{1.0}, rng).first);
  }
  CHECK(warm == naive);
}

TEST_CASE("near-noiseless run locks onto the optimal arm") {
  // N = 0, sigma -> 0: the agent must end up repeating A*.
  Rng arm_rng(24);
  const ActionSet a = build_action_set(3, 2, 0.1, arm_rng);
  const GaussianPrior prior = GaussianPrior::standard(2);
  Rng env_rng(25);
  const Environment env = sample_environment(prior, a, env_rng);
  OfflineDataset empty;
  empty.sampling = SamplingDistribution::uniform(3);

  double tail_regret = 0.0;
  const int T = 400, tail = 50;
  const int seeds = 5;
  for (int s = 0; s < seeds; ++s) {
    BootstrappedAgent agent(a, prior, empty, 5.0, 10.0);
    Rng rng(26 + s);
    for (int t = 0; t < T; ++t) {
      const int arm = agent.step(env, RewardModel{1e-4}, rng).first;
      if (t >= T - tail) tail_regret += instant_regret(env, a.actions[arm]);
    }
  }
  CHECK(tail_regret / (seeds * tail) < 0.01);
}

TEST_CASE("a sharp expert reveals the best arm before the first pull") {
  int hits = 0;
  const int trials = 200;
  for (int trial = 0; trial < trials; ++trial) {
    Rng rng(500 + trial);
    const ActionSet a = build_action_set(5, 3, 0.2, rng);
    const GaussianPrior prior = GaussianPrior::standard(3);
    const Environment env = sample_environment(prior, a, rng);
    const Rater rater =
        sample_rater(env, {1e6, 1.0, true}, ExpertPolicy::BradleyTerry, rng);
    const OfflineDataset d0 = generate_dataset(
        env, a, rater, SamplingDistribution::uniform(5), 50, rng);
    BootstrappedAgent agent(a, prior, d0, 1e6, 1e6);
    Environment probe = env;
    const auto [arm, est] = agent.step(probe, RewardModel{1.0}, rng);
    hits += arm == env.optimal_index;
  }
  CHECK(double(hits) / trials >= 0.95);
}

TEST_CASE("epsilon schedules") {
  TsofConfig constant{0.0, TsofConfig::Rule::Constant, 0.3};
  CHECK(get_epsilon(constant, 1) == 0.3);
  CHECK(get_epsilon(constant, 777) == 0.3);

  TsofConfig inv{0.0, TsofConfig::Rule::InverseSqrt, 1.0};
  CHECK(get_epsilon(inv, 4) == doctest::Approx(0.5));
  double prev = get_epsilon(inv, 1);
  for (int t = 2; t <= 100; ++t) {
    const double e = get_epsilon(inv, t);
    CHECK(e <= prev);
    prev = e;
  }
  CHECK_THROWS_AS(get_epsilon(inv, 0), ConfigError);
}

TEST_CASE("tsof with epsilon 0 never queries and mirrors warmPref") {
  Fixture fx;
  const Rater rater{fx.env.theta, {10.0, 1.0, true},
                    ExpertPolicy::BradleyTerry};
  TsofConfig cfg{0.1, TsofConfig::Rule::Constant, 0.0};
  WarmTsofAgent tsof(fx.actions, fx.prior, fx.d0, 3.0, 2.0, cfg);
  BootstrappedAgent warm(fx.actions, fx.prior, fx.d0, 3.0, 2.0);
  Rng r1(27), r2(27);
  for (int t = 0; t < 25; ++t) {
    const TsofStepResult a = tsof.step(fx.env, RewardModel{1.0}, rater, r1);
    const auto [b, est] = warm.step(fx.env, RewardModel{1.0}, r2);
    CHECK_FALSE(a.feedback.has_value());
    CHECK(a.cost_incurred == 0.0);
    CHECK(a.action == b);
  }
}

TEST_CASE("tsof with an infinite threshold queries every round") {
  Fixture fx;
  const Rater rater{fx.env.theta, {10.0, 1.0, true},
                    ExpertPolicy::BradleyTerry};
  TsofConfig cfg{0.0, TsofConfig::Rule::Constant, 1e18};
  WarmTsofAgent tsof(fx.actions, fx.prior, fx.d0, 3.0, 2.0, cfg);
  Rng rng(28);
  const int base = fx.d0.size();
  for (int t = 1; t <= 10; ++t) {
    const TsofStepResult r = tsof.step(fx.env, RewardModel{1.0}, rater, rng);
    CHECK(r.feedback.has_value());
    CHECK(tsof.offline_data().size() == base + t);
  }
}
