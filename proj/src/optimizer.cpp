#include "prefbandit/optimizer.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "prefbandit/errors.hpp"

namespace prefbandit {

namespace {
constexpr double kArmijo = 0.25;

// Newton direction with Levenberg damping escalated until the system is SPD.
Vector newton_direction(const Matrix& hess, const Vector& grad) {
  const auto n = hess.rows();
  double tau = 0.0;
  for (int attempt = 0; attempt < 60; ++attempt) {
    Matrix h = hess;
    if (tau > 0.0) h += tau * Matrix::Identity(n, n);
    Eigen::LLT<Matrix> llt(h);
    if (llt.info() == Eigen::Success) return llt.solve(-grad);
    tau = tau == 0.0 ? 1e-10 * (1.0 + hess.diagonal().cwiseAbs().maxCoeff())
                     : tau * 10.0;
  }
  throw NumericError("minimize: could not stabilize the Newton system");
}
}  // namespace

std::pair<Vector, SolveReport> minimize(const Objective& objective,
                                        const GradientFn& gradient, Vector x0,
                                        const SolveSettings& settings,
                                        const HessianFn* hessian) {
  if (!(settings.grad_tolerance > 0.0)) {
    throw ConfigError("minimize: tolerance must be positive");
  }
  if (settings.max_iterations < 1) {
    throw ConfigError("minimize: max_iterations must be >= 1");
  }
  if (!(settings.shrink > 0.0 && settings.shrink < 1.0 &&
        settings.growth > 1.0)) {
    throw ConfigError("minimize: need 0 < shrink < 1 < growth");
  }

  Vector x = std::move(x0);
  double fx = objective(x);
  Vector g = gradient(x);
  SolveReport report;
  report.final_grad_norm = g.norm();
  if (report.final_grad_norm <= settings.grad_tolerance) {
    report.converged = true;
    return {x, report};
  }

  double step = settings.initial_step;
  Vector x_prev, g_prev;
  bool have_pair = false;
  for (int it = 1; it <= settings.max_iterations; ++it) {
    const Vector direction = hessian ? newton_direction((*hessian)(x), g) : -g;
    const double slope = g.dot(direction);  // < 0 for a descent direction

    double trial = step;
    if (!hessian && have_pair) {
      // Spectral (Barzilai-Borwein) trial step; plain fixed-step descent
      // cannot reach the tolerance within the cap once conditioning is bad.
      const Vector s = x - x_prev;
      const Vector y = g - g_prev;
      const double sy = s.dot(y);
      if (sy > 0.0) trial = std::clamp(s.squaredNorm() / sy, 1e-16, 1e16);
    }

    double alpha = hessian ? 1.0 : trial;
    Vector x_next;
    double f_next = fx;
    bool accepted = false;
    for (int bt = 0; bt < 80; ++bt) {
      x_next = x + alpha * direction;
      f_next = objective(x_next);
      // The allowance admits steps whose true decrease is below what double
      // precision can resolve in f; the gradient still contracts.
      const double fp_noise = 16.0 * std::numeric_limits<double>::epsilon() *
                              (std::abs(fx) + std::abs(f_next));
      if (f_next <= fx + kArmijo * alpha * slope + fp_noise) {
        accepted = true;
        break;
      }
      alpha *= settings.shrink;
    }
    report.iterations = it;
    if (!accepted) {
      // Step underflow: no descent representable in double precision.
      report.final_grad_norm = g.norm();
      report.converged = false;
      return {x, report};
    }

    x_prev = x;
    g_prev = g;
    have_pair = true;
    x = std::move(x_next);
    fx = f_next;
    g = gradient(x);
    report.final_grad_norm = g.norm();
    if (!hessian) step = alpha * settings.growth;
    if (report.final_grad_norm <= settings.grad_tolerance) {
      report.converged = true;
      return {x, report};
    }
  }
  report.converged = false;
  return {x, report};
}

double check_gradient(const Objective& objective, const GradientFn& gradient,
                      const Vector& x, double h) {
  if (!(h > 0.0)) throw ConfigError("check_gradient: h must be positive");
  const Vector analytic = gradient(x);
  double worst = 0.0;
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = objective(probe);
    probe[i] = x[i] - h;
    const double fm = objective(probe);
    probe[i] = x[i];
    const double fd = (fp - fm) / (2.0 * h);
    const double err =
        std::abs(fd - analytic[i]) / std::max(1.0, std::abs(analytic[i]));
    worst = std::max(worst, err);
  }
  return worst;
}

}  // namespace prefbandit
