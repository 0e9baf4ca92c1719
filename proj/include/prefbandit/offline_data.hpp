#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "prefbandit/environment.hpp"
#include "prefbandit/rng.hpp"

namespace prefbandit {

enum class ExpertPolicy { BradleyTerry, DeterministicGreedy };

struct RaterCompetence {
  double beta = 0.0;        // deliberateness, >= 0
  double lambda = 1.0;      // knowledgeability, > 0
  bool exact_knowledge = false;  // lambda -> infinity: vartheta = theta
};

struct Rater {
  Vector vartheta;
  RaterCompetence competence;
  ExpertPolicy policy_kind = ExpertPolicy::BradleyTerry;
};

struct PreferenceTuple {
  int idx0 = 0;
  int idx1 = 0;
  int y = 0;  // 0: arm idx0 preferred, 1: arm idx1 preferred

  int winner() const { return y == 0 ? idx0 : idx1; }
  int loser() const { return y == 0 ? idx1 : idx0; }
};

struct SamplingDistribution {
  std::vector<double> weights;  // K entries, summing to 1
  double mu_min = 0.0;          // min over positive weights
  double mu_max = 0.0;          // max over positive weights

  static SamplingDistribution uniform(int K);
  static SamplingDistribution custom(std::vector<double> w);
};

struct OfflineDataset {
  std::vector<PreferenceTuple> tuples;
  SamplingDistribution sampling;

  int size() const { return static_cast<int>(tuples.size()); }
};

// vartheta = theta + z/lambda, or exactly theta under the exact flag.
Rater sample_rater(const Environment& env, const RaterCompetence& competence,
                   ExpertPolicy kind, Rng& rng);

// Bradley-Terry probability that a0 is preferred to a1, computed as a stable
// sigmoid of beta*<a0-a1, vartheta>. Exact antisymmetry:
// preference_prob(a0,a1) + preference_prob(a1,a0) == 1.
double preference_prob(const Vector& a0, const Vector& a1,
                       const Vector& vartheta, double beta);

OfflineDataset generate_dataset(const Environment& env, const ActionSet& actions,
                                const Rater& rater,
                                const SamplingDistribution& sampling, int N,
                                Rng& rng);

enum class EntropyOver { Winners, All };

// Shannon entropy (nats) of the empirical arm distribution; by default over
// the winning arm of each tuple.
double dataset_entropy(const OfflineDataset& d0, int K,
                       EntropyOver over = EntropyOver::Winners);

// Line-oriented text format:
//   # prefbandit-dataset v1 K=<K> d=<d>
//   n,idx0,idx1,y
// Round-trips bit-exactly.
void save_dataset(const OfflineDataset& d0, int K, int d, std::ostream& out);
void save_dataset_file(const OfflineDataset& d0, int K, int d,
                       const std::string& path);
OfflineDataset load_dataset(std::istream& in, int& K_out, int& d_out);
OfflineDataset load_dataset_file(const std::string& path, int& K_out,
                                 int& d_out);

}  // namespace prefbandit
