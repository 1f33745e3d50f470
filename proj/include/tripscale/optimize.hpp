#pragma once

#include <Eigen/Core>

#include <functional>
#include <vector>

namespace tripscale {

/// Objective evaluation: returns f(x) and writes the gradient into `grad`
/// (already sized like x).
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct DescentOptions {
  int max_iters = 1000;
  /// Stop once |f_prev - f| / max(|f_prev|, 1e-300) falls below this.
  double tolerance = 1e-7;
  double initial_step = 1.0;
  double armijo_c = 1e-4;
  double min_step = 1e-20;
};

struct DescentResult {
  Eigen::VectorXd x;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

/// Batch gradient descent with backtracking (halving) line search under the
/// Armijo condition. The first trial step is `initial_step`; later iterations
/// start from twice the previously accepted step. Throws std::runtime_error
/// when the objective at the starting point is not finite.
DescentResult gradient_descent(const ObjectiveFn& objective, Eigen::VectorXd x0,
                               const DescentOptions& options);

/// One Armijo-backtracked step from x (f and grad already evaluated there).
/// Returns false and leaves x untouched when no step below min_step decreases f.
bool armijo_step(const ObjectiveFn& objective, Eigen::VectorXd& x, double& f, Eigen::VectorXd& grad,
                 double& step, const DescentOptions& options);

}  // namespace tripscale
