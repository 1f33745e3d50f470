#include "tripscale/optimize.hpp"

#include <cmath>
#include <stdexcept>

namespace tripscale {

bool armijo_step(const ObjectiveFn& objective, Eigen::VectorXd& x, double& f, Eigen::VectorXd& grad,
                 double& step, const DescentOptions& options) {
  const double g2 = grad.squaredNorm();
  if (!(g2 > 0.0)) return false;
  Eigen::VectorXd candidate(x.size());
  Eigen::VectorXd candidate_grad(x.size());
  for (double t = step; t >= options.min_step; t *= 0.5) {
    candidate = x - t * grad;
    const double fc = objective(candidate, candidate_grad);
    if (std::isfinite(fc) && fc <= f - options.armijo_c * t * g2) {
      x.swap(candidate);
      grad.swap(candidate_grad);
      f = fc;
      step = t;
      return true;
    }
  }
  return false;
}

DescentResult gradient_descent(const ObjectiveFn& objective, Eigen::VectorXd x0,
                               const DescentOptions& options) {
  DescentResult result;
  result.x = std::move(x0);
  Eigen::VectorXd grad(result.x.size());
  double f = objective(result.x, grad);
  if (!std::isfinite(f)) throw std::runtime_error("objective is not finite at the starting point");
  result.initial_objective = f;
  result.trace.push_back(f);

  double step = options.initial_step;
  for (int it = 0; it < options.max_iters; ++it) {
    const double previous = f;
    double accepted = step;
    if (!armijo_step(objective, result.x, f, grad, accepted, options)) break;
    result.iterations = it + 1;
    result.trace.push_back(f);
    step = 2.0 * accepted;
    const double scale = std::max(std::abs(previous), 1e-300);
    if (std::abs(previous - f) / scale < options.tolerance) break;
  }
  result.objective = f;
  return result;
}

}  // namespace tripscale
