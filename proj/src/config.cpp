#include "prefbandit/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "prefbandit/errors.hpp"

namespace prefbandit {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_reals(const std::string& s, const std::string& key) {
  std::vector<double> out;
  for (const auto& tok : split_csv(s)) {
    try {
      std::size_t pos = 0;
      out.push_back(std::stod(tok, &pos));
      if (pos != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("config: bad real '" + tok + "' for key " + key);
    }
  }
  return out;
}

double parse_real(const std::string& s, const std::string& key) {
  const auto v = parse_reals(s, key);
  if (v.size() != 1) throw ConfigError("config: expected one real for " + key);
  return v[0];
}

long long parse_int(const std::string& s, const std::string& key) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer '" + s + "' for key " + key);
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt_list(const std::vector<double>& vs) {
  std::string out;
  for (std::size_t i = 0; i < vs.size(); ++i) {
    if (i) out += ",";
    out += fmt(vs[i]);
  }
  return out;
}

const std::set<std::string> kAgentNames = {"vanilla_ps", "naive_ps",
                                           "warmpref_ps", "warmtsof"};

}  // namespace

GaussianPrior ExperimentConfig::make_prior() const {
  GaussianPrior p;
  if (prior_mean.empty()) {
    p.mean = Vector::Zero(d);
  } else {
    p.mean = Eigen::Map<const Vector>(prior_mean.data(), prior_mean.size());
  }
  if (prior_cov.empty()) {
    p.covariance = Matrix::Identity(d, d);
  } else {
    p.covariance = Eigen::Map<const Matrix>(prior_cov.data(), d, d).transpose();
  }
  return p;
}

SamplingDistribution ExperimentConfig::make_sampling() const {
  if (sampling_weights.empty()) return SamplingDistribution::uniform(K);
  return SamplingDistribution::custom(sampling_weights);
}

RaterCompetence ExperimentConfig::rater_competence() const {
  RaterCompetence c;
  c.beta = true_beta;
  c.lambda = true_lambda;
  c.exact_knowledge = true_lambda_exact;
  return c;
}

void ExperimentConfig::validate() const {
  if (K < 2) throw ConfigError("config: K must be >= 2");
  if (d < 1) throw ConfigError("config: d must be >= 1");
  if (T < 1) throw ConfigError("config: T must be >= 1");
  if (N < 0) throw ConfigError("config: N must be >= 0");
  if (seeds < 1) throw ConfigError("config: seeds must be >= 1");
  if (!(sigma > 0.0)) throw ConfigError("config: sigma must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("config: rho in [0,1)");
  if (!(true_beta >= 0.0) || !(agent_beta >= 0.0)) {
    throw ConfigError("config: beta values must be >= 0");
  }
  if ((!true_lambda_exact && !(true_lambda > 0.0)) || !(agent_lambda > 0.0)) {
    throw ConfigError("config: lambda values must be positive");
  }
  if (agents.empty()) throw ConfigError("config: agent set must be non-empty");
  for (const auto& a : agents) {
    if (!kAgentNames.count(a)) throw ConfigError("config: unknown agent " + a);
  }
  if (!prior_mean.empty() && static_cast<int>(prior_mean.size()) != d) {
    throw ConfigError("config: prior_mean must have d entries");
  }
  if (!prior_cov.empty() &&
      static_cast<int>(prior_cov.size()) != d * d) {
    throw ConfigError("config: prior_cov must have d*d entries");
  }
  if (!sampling_weights.empty() &&
      static_cast<int>(sampling_weights.size()) != K) {
    throw ConfigError("config: sampling weights must have K entries");
  }
  if (!(bound_eps > 0.0 && bound_eps < 1.0)) {
    throw ConfigError("config: bound_eps must lie in (0,1)");
  }
  make_prior();
  make_sampling();
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::string line;
  int lineno = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!seen.insert(key).second) {
      throw ConfigError("config: duplicate key " + key);
    }

    if (key == "K") cfg.K = static_cast<int>(parse_int(value, key));
    else if (key == "d") cfg.d = static_cast<int>(parse_int(value, key));
    else if (key == "T") cfg.T = static_cast<int>(parse_int(value, key));
    else if (key == "N") cfg.N = static_cast<int>(parse_int(value, key));
    else if (key == "true_beta") cfg.true_beta = parse_real(value, key);
    else if (key == "true_lambda") {
      if (value == "exact") cfg.true_lambda_exact = true;
      else cfg.true_lambda = parse_real(value, key);
    } else if (key == "agent_beta") cfg.agent_beta = parse_real(value, key);
    else if (key == "agent_lambda") cfg.agent_lambda = parse_real(value, key);
    else if (key == "sigma") cfg.sigma = parse_real(value, key);
    else if (key == "rho") cfg.rho = parse_real(value, key);
    else if (key == "prior_mean") {
      if (value != "zeros") cfg.prior_mean = parse_reals(value, key);
    } else if (key == "prior_cov") {
      if (value != "identity") cfg.prior_cov = parse_reals(value, key);
    } else if (key == "sampling") {
      if (value != "uniform") cfg.sampling_weights = parse_reals(value, key);
    } else if (key == "expert_policy") {
      if (value == "bradley_terry") cfg.expert_policy = ExpertPolicy::BradleyTerry;
      else if (value == "greedy") cfg.expert_policy = ExpertPolicy::DeterministicGreedy;
      else throw ConfigError("config: expert_policy must be bradley_terry|greedy");
    } else if (key == "agents") {
      cfg.agents = split_csv(value);
    } else if (key == "agent_beta_source") {
      if (value == "config") cfg.agent_beta_source = BetaSource::Config;
      else if (value == "mle") cfg.agent_beta_source = BetaSource::Mle;
      else if (value == "entropy") cfg.agent_beta_source = BetaSource::Entropy;
      else throw ConfigError("config: agent_beta_source must be config|mle|entropy");
    } else if (key == "entropy_over") {
      if (value == "winners") cfg.entropy_over = EntropyOver::Winners;
      else if (value == "all") cfg.entropy_over = EntropyOver::All;
      else throw ConfigError("config: entropy_over must be winners|all");
    } else if (key == "entropy_c") cfg.entropy_c = parse_real(value, key);
    else if (key == "tsof_cost") cfg.tsof.cost = parse_real(value, key);
    else if (key == "tsof_epsilon_rule") {
      if (value == "constant") cfg.tsof.rule = TsofConfig::Rule::Constant;
      else if (value == "inverse_sqrt") cfg.tsof.rule = TsofConfig::Rule::InverseSqrt;
      else throw ConfigError("config: tsof_epsilon_rule must be constant|inverse_sqrt");
    } else if (key == "tsof_epsilon") cfg.tsof.epsilon = parse_real(value, key);
    else if (key == "seeds") cfg.seeds = static_cast<int>(parse_int(value, key));
    else if (key == "base_seed") cfg.base_seed = static_cast<std::uint64_t>(parse_int(value, key));
    else if (key == "bound_eps") cfg.bound_eps = parse_real(value, key);
    else if (key == "c1") cfg.c1 = parse_real(value, key);
    else throw ConfigError("config: unknown key " + key);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file: " + path);
  return parse_config(f);
}

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  out << "K = " << cfg.K << "\n";
  out << "d = " << cfg.d << "\n";
  out << "T = " << cfg.T << "\n";
  out << "N = " << cfg.N << "\n";
  out << "true_beta = " << fmt(cfg.true_beta) << "\n";
  if (cfg.true_lambda_exact) out << "true_lambda = exact\n";
  else out << "true_lambda = " << fmt(cfg.true_lambda) << "\n";
  out << "agent_beta = " << fmt(cfg.agent_beta) << "\n";
  out << "agent_lambda = " << fmt(cfg.agent_lambda) << "\n";
  out << "sigma = " << fmt(cfg.sigma) << "\n";
  out << "rho = " << fmt(cfg.rho) << "\n";
  out << "prior_mean = "
      << (cfg.prior_mean.empty() ? "zeros" : fmt_list(cfg.prior_mean)) << "\n";
  out << "prior_cov = "
      << (cfg.prior_cov.empty() ? "identity" : fmt_list(cfg.prior_cov)) << "\n";
  out << "sampling = "
      << (cfg.sampling_weights.empty() ? "uniform" : fmt_list(cfg.sampling_weights))
      << "\n";
  out << "expert_policy = "
      << (cfg.expert_policy == ExpertPolicy::BradleyTerry ? "bradley_terry"
                                                          : "greedy")
      << "\n";
  std::string agents;
  for (std::size_t i = 0; i < cfg.agents.size(); ++i) {
    if (i) agents += ",";
    agents += cfg.agents[i];
  }
  out << "agents = " << agents << "\n";
  out << "agent_beta_source = "
      << (cfg.agent_beta_source == BetaSource::Config ? "config"
          : cfg.agent_beta_source == BetaSource::Mle ? "mle" : "entropy")
      << "\n";
  out << "entropy_over = "
      << (cfg.entropy_over == EntropyOver::Winners ? "winners" : "all") << "\n";
  out << "entropy_c = " << fmt(cfg.entropy_c) << "\n";
  out << "tsof_cost = " << fmt(cfg.tsof.cost) << "\n";
  out << "tsof_epsilon_rule = "
      << (cfg.tsof.rule == TsofConfig::Rule::Constant ? "constant"
                                                      : "inverse_sqrt")
      << "\n";
  out << "tsof_epsilon = " << fmt(cfg.tsof.epsilon) << "\n";
  out << "seeds = " << cfg.seeds << "\n";
  out << "base_seed = " << cfg.base_seed << "\n";
  out << "bound_eps = " << fmt(cfg.bound_eps) << "\n";
  out << "c1 = " << fmt(cfg.c1) << "\n";
  return out.str();
}

}  // namespace prefbandit
