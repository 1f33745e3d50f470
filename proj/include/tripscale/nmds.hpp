#pragma once

#include "tripscale/core.hpp"
#include "tripscale/ste.hpp"

#include <Eigen/Core>

#include <span>
#include <vector>

namespace tripscale {

/// Weighted pool-adjacent-violators: the least-squares nondecreasing fit to
/// `targets` in the given order. Empty weights means unit weights.
std::vector<double> pava(std::span<const double> targets, std::span<const double> weights = {});

/// Isotonic regression of `targets` onto the order of `keys`. Positions with
/// equal keys form one block and share a fitted value. Output is aligned with
/// the input positions. Throws on empty input or a length mismatch.
std::vector<double> isotonic_fit(std::span<const double> keys, std::span<const double> targets);

struct NmdsResult {
  Embedding embedding;
  double stress = 0.0;
  /// Fitted monotone values g(delta_ij), symmetric with zero diagonal.
  Eigen::MatrixXd disparities;
  /// Stress after each alternation round of the chosen restart.
  std::vector<double> stress_trace;
  FitReport report;
};

/// sum (d_ij - dhat_ij)^2 / sum d_ij^2 over i < j.
double kruskal_stress(const Eigen::MatrixXd& points, const Eigen::MatrixXd& disparities);

/// Classical (Torgerson) scaling of a dissimilarity matrix into `dim` columns.
Eigen::MatrixXd classical_scaling(const DissimilarityMatrix& delta, int dim);

/// Kruskal non-metric MDS: alternates isotonic regression of the current
/// distances on the dissimilarity order with an Armijo gradient step on the
/// points. Restart 0 starts from classical scaling, the rest from random
/// points; the restart with the lowest final stress wins.
NmdsResult fit_nmds(const DissimilarityMatrix& delta, const EngineConfig& config);

}  // namespace tripscale
