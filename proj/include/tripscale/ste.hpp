#pragma once

#include "tripscale/core.hpp"

#include <Eigen/Core>

#include <vector>

namespace tripscale {

/// Summary of a multi-restart fit, serialized as the fit report.
struct FitReport {
  std::size_t objective_trace_length = 0;
  double final_objective = 0.0;
  std::vector<double> restart_objectives;
  std::vector<double> restart_training_errors;
  int chosen_restart = 0;
};

struct EmbeddingFit {
  Embedding embedding;
  FitReport report;
};

/// Probability that the observer picks `near` under the Gaussian (STE)
/// kernel, given squared distances from the reference.
double ste_probability(double near_sq, double far_sq);

/// Same under the Student-t kernel (1 + d^2/alpha)^(-(alpha+1)/2).
double tste_probability(double near_sq, double far_sq, double alpha);

struct ObjectiveAndGradient {
  double value = 0.0;
  Eigen::MatrixXd gradient;  // same shape as the points
};

/// Negative log-likelihood of the answered responses under STE.
ObjectiveAndGradient ste_negloglik_and_grad(const Eigen::MatrixXd& points, const Responses& responses);

ObjectiveAndGradient tste_negloglik_and_grad(const Eigen::MatrixXd& points, const Responses& responses,
                                             double alpha = 1.0);

/// Best-of-restarts (by training triplet error, then objective) STE fit.
/// n = 0 infers the stimulus count from the largest index in the responses.
EmbeddingFit fit_ste(const Responses& responses, const EngineConfig& config, std::size_t n = 0);
EmbeddingFit fit_tste(const Responses& responses, const EngineConfig& config, std::size_t n = 0);

}  // namespace tripscale
