#pragma once

#include <map>
#include <string>
#include <vector>

#include "prefbandit/config.hpp"
#include "prefbandit/theory.hpp"

namespace prefbandit {

struct RegretCurve {
  std::string agent_name;
  std::vector<std::vector<double>> cumulative;  // [seed][t], nondecreasing in t
  std::vector<double> mean;    // across seeds, length T
  std::vector<double> stddev;  // sample standard deviation, length T

  double final_mean() const { return mean.back(); }
  double final_std() const { return stddev.back(); }
};

// Seeds are independent, so the per-seed loop is the OpenMP kernel; Serial is
// the reference path and must produce byte-identical results.
enum class Execution { Serial, OpenMP };

using RunResult = std::map<std::string, RegretCurve>;

// One Monte-Carlo experiment: per seed, a single (arms, theta, rater, D0)
// draw shared by every requested agent, each agent on its own named
// substream. warmtsof runs charge cost into the regret and additionally
// report a "warmtsof:net_reward" curve of realized reward minus cost.
RunResult run_experiment(const ExperimentConfig& config,
                         Execution exec = Execution::OpenMP);

struct SweepSpec {
  std::string parameter;  // lambda | beta | n | rho | d
  std::vector<double> values;
  ExperimentConfig base;
};

struct SweepRow {
  std::string parameter;
  double value = 0.0;
  std::string agent;
  double final_mean = 0.0;
  double final_std = 0.0;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec,
                                Execution exec = Execution::OpenMP);

struct ActionSpaceCell {
  int d = 0;
  double rho = 0.0;
  std::string agent;
  double final_mean = 0.0;
  double final_std = 0.0;
};

// 2x2 grid over d in {2,5} and rho in {0.1,0.8}, all agents per cell.
std::vector<ActionSpaceCell> run_action_space_study(
    const ExperimentConfig& base, Execution exec = Execution::OpenMP);

ExperimentConfig apply_sweep_value(const ExperimentConfig& base,
                                   const std::string& parameter, double value);

// File outputs. All real numbers carry 17 significant digits; LF endings.
void write_run_outputs(const RunResult& result, const std::string& out_dir);
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& path);
void write_table_csv(const std::vector<ActionSpaceCell>& cells,
                     const std::string& path);
std::string format_bound_report(const BoundReport& report);
void emit_theory_report(const ExperimentConfig& config,
                        const std::string& path);

std::string format_real(double v);  // %.17g

}  // namespace prefbandit
