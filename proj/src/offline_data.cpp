#include "prefbandit/offline_data.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "prefbandit/errors.hpp"

namespace prefbandit {

SamplingDistribution SamplingDistribution::uniform(int K) {
  if (K < 1) throw ConfigError("sampling distribution needs K >= 1");
  return custom(std::vector<double>(K, 1.0 / K));
}

SamplingDistribution SamplingDistribution::custom(std::vector<double> w) {
  double sum = 0.0;
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  for (double x : w) {
    if (x < 0.0 || !std::isfinite(x)) {
      throw ConfigError("sampling weights must be finite and non-negative");
    }
    sum += x;
    if (x > 0.0) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    throw ConfigError("sampling weights must sum to 1");
  }
  SamplingDistribution s;
  s.weights = std::move(w);
  s.mu_min = lo;
  s.mu_max = hi;
  return s;
}

Rater sample_rater(const Environment& env, const RaterCompetence& competence,
                   ExpertPolicy kind, Rng& rng) {
  if (!competence.exact_knowledge && !(competence.lambda > 0.0)) {
    throw ConfigError("sample_rater: lambda must be positive");
  }
  if (!(competence.beta >= 0.0)) {
    throw ConfigError("sample_rater: beta must be non-negative");
  }
  Rater r;
  r.competence = competence;
  r.policy_kind = kind;
  if (competence.exact_knowledge) {
    r.vartheta = env.theta;
  } else {
    Vector z(env.theta.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
    r.vartheta = env.theta + z / competence.lambda;
  }
  return r;
}

double preference_prob(const Vector& a0, const Vector& a1,
                       const Vector& vartheta, double beta) {
  const double gap = beta * (a0 - a1).dot(vartheta);
  // One-sided evaluation keeps p(a0,a1) + p(a1,a0) == 1 exactly: both calls
  // share t = exp(-|gap|), and 1 - r is exact by Sterbenz for r in [1/2, 1].
  const double t = std::exp(-std::abs(gap));
  const double r = 1.0 / (1.0 + t);
  return gap >= 0.0 ? r : 1.0 - r;
}

OfflineDataset generate_dataset(const Environment& env, const ActionSet& actions,
                                const Rater& rater,
                                const SamplingDistribution& sampling, int N,
                                Rng& rng) {
  if (N < 0) throw ConfigError("generate_dataset: N must be >= 0");
  if (static_cast<int>(sampling.weights.size()) != actions.size()) {
    throw ConfigError("generate_dataset: sampling/action size mismatch");
  }
  OfflineDataset d0;
  d0.sampling = sampling;
  d0.tuples.reserve(N);
  for (int n = 0; n < N; ++n) {
    PreferenceTuple t;
    t.idx0 = rng.categorical(sampling.weights);
    t.idx1 = rng.categorical(sampling.weights);
    const Vector& a0 = actions.actions[t.idx0];
    const Vector& a1 = actions.actions[t.idx1];
    if (rater.policy_kind == ExpertPolicy::DeterministicGreedy) {
      const double u0 = a0.dot(rater.vartheta);
      const double u1 = a1.dot(rater.vartheta);
      t.y = u1 > u0 ? 1 : 0;  // tie goes to the lower slot
    } else {
      const double p0 = preference_prob(a0, a1, rater.vartheta,
                                        rater.competence.beta);
      t.y = rng.bernoulli(p0) ? 0 : 1;
    }
    d0.tuples.push_back(t);
  }
  return d0;
}

double dataset_entropy(const OfflineDataset& d0, int K, EntropyOver over) {
  if (d0.size() < 1) throw DomainError("dataset_entropy: empty dataset");
  std::vector<double> counts(K, 0.0);
  double total = 0.0;
  for (const auto& t : d0.tuples) {
    if (over == EntropyOver::Winners) {
      counts.at(t.winner()) += 1.0;
      total += 1.0;
    } else {
      counts.at(t.idx0) += 1.0;
      counts.at(t.idx1) += 1.0;
      total += 2.0;
    }
  }
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

void save_dataset(const OfflineDataset& d0, int K, int d, std::ostream& out) {
  out << "# prefbandit-dataset v1 K=" << K << " d=" << d << "\n";
  for (int n = 0; n < d0.size(); ++n) {
    const auto& t = d0.tuples[n];
    out << n << "," << t.idx0 << "," << t.idx1 << "," << t.y << "\n";
  }
}

void save_dataset_file(const OfflineDataset& d0, int K, int d,
                       const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open for writing: " + path);
  save_dataset(d0, K, d, f);
}

OfflineDataset load_dataset(std::istream& in, int& K_out, int& d_out) {
  std::string header;
  if (!std::getline(in, header)) {
    throw ConfigError("dataset file: missing header");
  }
  if (std::sscanf(header.c_str(), "# prefbandit-dataset v1 K=%d d=%d", &K_out,
                  &d_out) != 2) {
    throw ConfigError("dataset file: unrecognized header '" + header + "'");
  }
  OfflineDataset d0;
  d0.sampling = SamplingDistribution::uniform(K_out);
  std::string line;
  int expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    PreferenceTuple t;
    int n = -1;
    if (std::sscanf(line.c_str(), "%d,%d,%d,%d", &n, &t.idx0, &t.idx1, &t.y) !=
        4) {
      throw ConfigError("dataset file: bad tuple line '" + line + "'");
    }
    if (n != expected) {
      throw ConfigError("dataset file: tuple index out of sequence");
    }
    if (t.idx0 < 0 || t.idx0 >= K_out || t.idx1 < 0 || t.idx1 >= K_out ||
        (t.y != 0 && t.y != 1)) {
      throw ConfigError("dataset file: tuple out of range '" + line + "'");
    }
    d0.tuples.push_back(t);
    ++expected;
  }
  return d0;
}

OfflineDataset load_dataset_file(const std::string& path, int& K_out,
                                 int& d_out) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open dataset file: " + path);
  return load_dataset(f, K_out, d_out);
}

}  // namespace prefbandit
