#include "tripscale/nmds.hpp"

#include "tripscale/optimize.hpp"
#include "tripscale/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace tripscale {

std::vector<double> pava(std::span<const double> targets, std::span<const double> weights) {
  if (targets.empty()) throw std::invalid_argument("isotonic regression of an empty sequence");
  if (!weights.empty() && weights.size() != targets.size())
    throw std::invalid_argument("isotonic regression: weight length mismatch");
  struct Block {
    double mean, weight;
    std::size_t count;
  };
  std::vector<Block> blocks;
  blocks.reserve(targets.size());
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights[i];
    blocks.push_back({targets[i], w, 1});
    while (blocks.size() > 1 && blocks[blocks.size() - 2].mean > blocks.back().mean) {
      const Block top = blocks.back();
      blocks.pop_back();
      Block& prev = blocks.back();
      const double w_sum = prev.weight + top.weight;
      prev.mean = (prev.mean * prev.weight + top.mean * top.weight) / w_sum;
      prev.weight = w_sum;
      prev.count += top.count;
    }
  }
  std::vector<double> out;
  out.reserve(targets.size());
  for (const auto& b : blocks) out.insert(out.end(), b.count, b.mean);
  return out;
}

std::vector<double> isotonic_fit(std::span<const double> keys, std::span<const double> targets) {
  if (keys.empty()) throw std::invalid_argument("isotonic regression of an empty sequence");
  if (keys.size() != targets.size()) throw std::invalid_argument("isotonic regression: length mismatch");
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });

  // Tie groups are pooled up front and enter PAVA as one weighted point.
  std::vector<double> means, weights;
  std::vector<std::size_t> group_end;
  for (std::size_t s = 0; s < order.size();) {
    std::size_t e = s;
    double sum = 0.0;
    while (e < order.size() && keys[order[e]] == keys[order[s]]) sum += targets[order[e++]];
    means.push_back(sum / static_cast<double>(e - s));
    weights.push_back(static_cast<double>(e - s));
    group_end.push_back(e);
    s = e;
  }
  const auto fitted = pava(means, weights);
  std::vector<double> out(keys.size());
  std::size_t s = 0;
  for (std::size_t g = 0; g < fitted.size(); ++g) {
    for (; s < group_end[g]; ++s) out[order[s]] = fitted[g];
  }
  return out;
}

double kruskal_stress(const Eigen::MatrixXd& points, const Eigen::MatrixXd& disparities) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i)
    for (Eigen::Index j = i + 1; j < points.rows(); ++j) {
      const double d = (points.row(i) - points.row(j)).norm();
      num += (d - disparities(i, j)) * (d - disparities(i, j));
      den += d * d;
    }
  return den > 0.0 ? num / den : std::numeric_limits<double>::infinity();
}

Eigen::MatrixXd classical_scaling(const DissimilarityMatrix& delta, int dim) {
  const auto n = static_cast<Eigen::Index>(delta.size());
  const Eigen::MatrixXd sq = delta.values().array().square().matrix();
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
  const Eigen::MatrixXd b = -0.5 * centering * sq * centering;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, dim);
  // Eigenvalues come in increasing order.
  for (int c = 0; c < dim && c < n; ++c) {
    const Eigen::Index idx = n - 1 - c;
    const double lambda = std::max(solver.eigenvalues()[idx], 0.0);
    out.col(c) = solver.eigenvectors().col(idx) * std::sqrt(lambda);
  }
  return out;
}

namespace {

struct PairList {
  std::vector<Eigen::Index> i, j;
  std::vector<double> delta;
};

PairList upper_pairs(const DissimilarityMatrix& delta) {
  PairList p;
  const auto n = static_cast<Eigen::Index>(delta.size());
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = a + 1; b < n; ++b) {
      p.i.push_back(a);
      p.j.push_back(b);
      p.delta.push_back(delta.values()(a, b));
    }
  return p;
}

struct RestartOutcome {
  Eigen::MatrixXd points;
  std::vector<double> disparities;
  std::vector<double> trace;
  int iterations = 0;
};

RestartOutcome run_restart(const PairList& pairs, Eigen::MatrixXd x, const EngineConfig& config) {
  const Eigen::Index n = x.rows();
  const Eigen::Index dim = x.cols();
  const std::size_t m = pairs.delta.size();
  std::vector<double> dist(m), disp(m);

  auto distances = [&](const Eigen::Ref<const Eigen::MatrixXd>& y) {
    for (std::size_t p = 0; p < m; ++p) dist[p] = (y.row(pairs.i[p]) - y.row(pairs.j[p])).norm();
  };

  // Stress with disparities held fixed, as a function of flattened points.
  ObjectiveFn stress_fn = [&](const Eigen::VectorXd& flat, Eigen::VectorXd& g) {
    Eigen::Map<const Eigen::MatrixXd> y(flat.data(), n, dim);
    Eigen::Map<Eigen::MatrixXd> gm(g.data(), n, dim);
    double num = 0.0, den = 0.0;
    std::vector<double> d(m);
    for (std::size_t p = 0; p < m; ++p) {
      d[p] = (y.row(pairs.i[p]) - y.row(pairs.j[p])).norm();
      num += (d[p] - disp[p]) * (d[p] - disp[p]);
      den += d[p] * d[p];
    }
    gm.setZero();
    if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
    const double s = num / den;
    for (std::size_t p = 0; p < m; ++p) {
      if (d[p] <= 0.0) continue;
      // dS/dd = (2 (d - dhat) - 2 S d) / den
      const double coef = (2.0 * (d[p] - disp[p]) - 2.0 * s * d[p]) / den / d[p];
      const Eigen::RowVectorXd diff = y.row(pairs.i[p]) - y.row(pairs.j[p]);
      gm.row(pairs.i[p]) += coef * diff;
      gm.row(pairs.j[p]) -= coef * diff;
    }
    return s;
  };

  DescentOptions options;
  options.max_iters = config.max_iters;
  options.tolerance = config.tolerance;

  RestartOutcome out;
  Eigen::VectorXd flat = Eigen::Map<Eigen::VectorXd>(x.data(), x.size());
  Eigen::VectorXd grad(flat.size());
  double step = options.initial_step;
  double previous = std::numeric_limits<double>::infinity();
  for (int round = 0; round < config.max_iters; ++round) {
    Eigen::Map<const Eigen::MatrixXd> y(flat.data(), n, dim);
    distances(y);
    const auto fitted = isotonic_fit(pairs.delta, dist);
    std::copy(fitted.begin(), fitted.end(), disp.begin());
    double f = stress_fn(flat, grad);
    out.trace.push_back(f);
    out.iterations = round + 1;
    if (!std::isfinite(f)) throw std::runtime_error("nmds: all points collapsed");
    if (std::abs(previous - f) <= config.tolerance * std::max(previous, 1e-300) || f == 0.0) break;
    previous = f;
    double accepted = step;
    if (!armijo_step(stress_fn, flat, f, grad, accepted, options)) break;
    step = 2.0 * accepted;
  }
  out.points = Eigen::Map<const Eigen::MatrixXd>(flat.data(), n, dim);
  out.disparities = disp;
  return out;
}

}  // namespace

NmdsResult fit_nmds(const DissimilarityMatrix& delta, const EngineConfig& config) {
  config.validate();
  const auto n = static_cast<Eigen::Index>(delta.size());
  if (n < 2) throw DataError("nmds needs at least 2 items");
  if (delta.values().maxCoeff() <= 0.0) throw DataError("nmds: all dissimilarities are zero");
  const auto pairs = upper_pairs(delta);

  std::optional<RestartOutcome> best;
  double best_stress = std::numeric_limits<double>::infinity();
  FitReport report;
  for (int restart = 0; restart < config.restarts; ++restart) {
    Eigen::MatrixXd x0;
    if (restart == 0) {
      x0 = classical_scaling(delta, config.dim);
      Rng rng(derive_seed(config.seed, 0));
      // Jitter breaks exact degeneracies (e.g. zero extra eigen-directions).
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0.data()[i] += 1e-3 * standard_normal(rng);
    } else {
      Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
      x0.resize(n, config.dim);
      for (Eigen::Index i = 0; i < x0.size(); ++i) x0.data()[i] = 0.1 * standard_normal(rng);
    }
    auto outcome = run_restart(pairs, std::move(x0), config);
    const double stress = outcome.trace.back();
    report.restart_objectives.push_back(stress);
    if (stress < best_stress) {
      best_stress = stress;
      report.chosen_restart = restart;
      report.objective_trace_length = outcome.trace.size();
      report.final_objective = stress;
      best = std::move(outcome);
    }
  }

  Eigen::MatrixXd disparities = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t p = 0; p < pairs.delta.size(); ++p) {
    disparities(pairs.i[p], pairs.j[p]) = best->disparities[p];
    disparities(pairs.j[p], pairs.i[p]) = best->disparities[p];
  }
  FitMeta meta{"nmds", config.seed, best_stress, best->iterations, {}};
  return NmdsResult{Embedding(std::move(best->points), std::move(meta)), best_stress,
                    std::move(disparities), std::move(best->trace), std::move(report)};
}

}  // namespace tripscale
