// Times the OpenMP seed loop against the serial reference on the default
// configuration and verifies the two produce identical curves.

#include <chrono>
#include <cmath>
#include <iostream>

#include "prefbandit/harness.hpp"

using namespace prefbandit;

namespace {

double run_timed(const ExperimentConfig& cfg, Execution exec,
                 RunResult& result) {
  const auto start = std::chrono::steady_clock::now();
  result = run_experiment(cfg, exec);
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(stop - start).count();
}

}  // namespace

int main(int argc, char** argv) {
  ExperimentConfig cfg;
  cfg.seeds = argc > 1 ? std::atoi(argv[1]) : 8;

  RunResult serial, parallel;
  const double t_serial = run_timed(cfg, Execution::Serial, serial);
  const double t_parallel = run_timed(cfg, Execution::OpenMP, parallel);

  bool identical = true;
  for (const auto& [name, curve] : serial) {
    const auto& other = parallel.at(name);
    for (std::size_t s = 0; s < curve.cumulative.size(); ++s) {
      for (std::size_t t = 0; t < curve.cumulative[s].size(); ++t) {
        if (curve.cumulative[s][t] != other.cumulative[s][t]) identical = false;
      }
    }
  }

  std::cout << "seeds:    " << cfg.seeds << "\n"
            << "serial:   " << t_serial << " s\n"
            << "openmp:   " << t_parallel << " s\n"
            << "speedup:  " << t_serial / t_parallel << "x\n"
            << "identical: " << (identical ? "yes" : "NO") << "\n";
  return identical ? 0 : 1;
}
