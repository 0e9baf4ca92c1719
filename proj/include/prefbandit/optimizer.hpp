#pragma once

#include <functional>
#include <utility>

#include "prefbandit/environment.hpp"

namespace prefbandit {

struct SolveSettings {
  double grad_tolerance = 1e-8;
  int max_iterations = 5000;
  double initial_step = 1.0;
  double shrink = 0.5;  // backtracking factor, in (0, 1)
  double growth = 2.0;  // step recovery factor after an accepted step, > 1
};

struct SolveReport {
  int iterations = 0;
  double final_grad_norm = 0.0;
  bool converged = false;
};

using Objective = std::function<double(const Vector&)>;
using GradientFn = std::function<Vector(const Vector&)>;
using HessianFn = std::function<Matrix(const Vector&)>;

// Deterministic convex minimization with Armijo backtracking (parameter 1/4)
// and a monotone non-increasing objective across accepted steps. Without a
// Hessian this is plain gradient descent; with one it takes damped Newton
// steps, which the surrogate losses need because their curvature spans
// lambda^2 and first-order steps cannot reach the tolerance within the cap.
// Non-convergence is reported through the flag, never masked.
std::pair<Vector, SolveReport> minimize(const Objective& objective,
                                        const GradientFn& gradient, Vector x0,
                                        const SolveSettings& settings,
                                        const HessianFn* hessian = nullptr);

// Max over coordinates of |central difference - analytic| / max(1, |analytic|).
double check_gradient(const Objective& objective, const GradientFn& gradient,
                      const Vector& x, double h);

}  // namespace prefbandit
