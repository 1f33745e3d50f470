#include "tripscale/ste.hpp"

#include "tripscale/metrics.hpp"
#include "tripscale/optimize.hpp"
#include "tripscale/random.hpp"

#include <cmath>
#include <limits>

namespace tripscale {
namespace {

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// A response reduced to (ref, chosen, rejected).
struct Oriented {
  Eigen::Index ref, near, far;
};

std::vector<Oriented> orient(const Responses& responses, std::size_t n) {
  if (responses.empty()) throw DataError("no responses to fit");
  std::vector<Oriented> out;
  out.reserve(responses.size());
  for (const auto& r : responses) {
    if (!r.answered()) throw DataError("unanswered response " + canonical_triplet_id(r.triplet));
    validate_triplet(r.triplet, n);
    const bool first = r.answer == Answer::kOpt1;
    out.push_back({static_cast<Eigen::Index>(r.triplet.ref),
                   static_cast<Eigen::Index>(first ? r.triplet.opt1 : r.triplet.opt2),
                   static_cast<Eigen::Index>(first ? r.triplet.opt2 : r.triplet.opt1)});
  }
  return out;
}

/// Kernel choice: Gaussian when alpha <= 0, Student-t otherwise.
/// Accumulates into grad (rows = points) and returns the objective.
double triplet_nll(const Eigen::Ref<const Eigen::MatrixXd>& y, const std::vector<Oriented>& data,
                   double alpha, Eigen::Ref<Eigen::MatrixXd> grad) {
  grad.setZero();
  double total = 0.0;
  const bool gaussian = alpha <= 0.0;
  const double half_exp = gaussian ? 0.0 : 0.5 * (alpha + 1.0);
  for (const auto& t : data) {
    const auto dn_vec = (y.row(t.ref) - y.row(t.near)).eval();
    const auto df_vec = (y.row(t.ref) - y.row(t.far)).eval();
    const double dn = dn_vec.squaredNorm();
    const double df = df_vec.squaredNorm();
    // Loss is softplus(a) with a = log k(far) - log k(near); dloss/da = 1 - p.
    double a, da_ddn, da_ddf;
    if (gaussian) {
      a = dn - df;
      da_ddn = 1.0;
      da_ddf = -1.0;
    } else {
      a = half_exp * (std::log1p(dn / alpha) - std::log1p(df / alpha));
      da_ddn = half_exp / (alpha + dn);
      da_ddf = -half_exp / (alpha + df);
    }
    total += softplus(a);
    const double w = logistic(a);
    const double gn = 2.0 * w * da_ddn;
    const double gf = 2.0 * w * da_ddf;
    grad.row(t.ref) += gn * dn_vec + gf * df_vec;
    grad.row(t.near) -= gn * dn_vec;
    grad.row(t.far) -= gf * df_vec;
  }
  return total;
}

ObjectiveAndGradient negloglik(const Eigen::MatrixXd& points, const Responses& responses, double alpha) {
  const auto data = orient(responses, static_cast<std::size_t>(points.rows()));
  ObjectiveAndGradient out;
  out.gradient = Eigen::MatrixXd::Zero(points.rows(), points.cols());
  out.value = triplet_nll(points, data, alpha, out.gradient);
  return out;
}

EmbeddingFit fit_triplet_model(const Responses& responses, const EngineConfig& config, std::size_t n,
                               double alpha, const char* engine) {
  config.validate();
  if (responses.empty()) throw DataError(std::string(engine) + ": no responses to fit");
  if (n == 0) n = max_stimulus_index(responses) + 1;
  const auto data = orient(responses, n);

  std::vector<bool> referenced(n, false);
  for (const auto& t : data) referenced[t.ref] = referenced[t.near] = referenced[t.far] = true;

  const auto rows = static_cast<Eigen::Index>(n);
  const Eigen::Index cols = config.dim;
  ObjectiveFn objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    Eigen::Map<const Eigen::MatrixXd> y(x.data(), rows, cols);
    Eigen::Map<Eigen::MatrixXd> gm(g.data(), rows, cols);
    return triplet_nll(y, data, alpha, gm);
  };
  DescentOptions options;
  options.max_iters = config.max_iters;
  options.tolerance = config.tolerance;

  std::optional<EmbeddingFit> best;
  double best_error = std::numeric_limits<double>::infinity();
  FitReport report;
  for (int restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
    Eigen::VectorXd x0(rows * cols);
    for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] = 0.1 * standard_normal(rng);
    auto result = gradient_descent(objective, std::move(x0), options);
    if (!std::isfinite(result.objective))
      throw std::runtime_error(std::string(engine) + ": objective diverged");

    Eigen::MatrixXd points = Eigen::Map<const Eigen::MatrixXd>(result.x.data(), rows, cols);
    FitMeta meta{engine, config.seed, result.objective, result.iterations, {}};
    Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(cols);
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (referenced[i]) {
        centroid += points.row(static_cast<Eigen::Index>(i));
        ++count;
      }
    centroid /= static_cast<double>(count);
    for (std::size_t i = 0; i < n; ++i)
      if (!referenced[i]) {
        points.row(static_cast<Eigen::Index>(i)) = centroid;
        meta.unreferenced.push_back(i);
      }

    Embedding embedding(std::move(points), std::move(meta));
    const double error = triplet_error(embedding, responses);
    report.restart_objectives.push_back(result.objective);
    report.restart_training_errors.push_back(error);
    const bool better = !best || error < best_error ||
                        (error == best_error && result.objective < best->embedding.meta().objective);
    if (better) {
      best_error = error;
      report.chosen_restart = restart;
      report.objective_trace_length = result.trace.size();
      report.final_objective = result.objective;
      best.emplace(EmbeddingFit{std::move(embedding), {}});
    }
  }
  best->report = std::move(report);
  return std::move(*best);
}

}  // namespace

double ste_probability(double near_sq, double far_sq) {
  // exp(-dn) / (exp(-dn) + exp(-df)) = logistic(df - dn)
  return logistic(far_sq - near_sq);
}

double tste_probability(double near_sq, double far_sq, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  const double half_exp = 0.5 * (alpha + 1.0);
  return logistic(half_exp * (std::log1p(far_sq / alpha) - std::log1p(near_sq / alpha)));
}

ObjectiveAndGradient ste_negloglik_and_grad(const Eigen::MatrixXd& points, const Responses& responses) {
  return negloglik(points, responses, 0.0);
}

ObjectiveAndGradient tste_negloglik_and_grad(const Eigen::MatrixXd& points, const Responses& responses,
                                             double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
  return negloglik(points, responses, alpha);
}

EmbeddingFit fit_ste(const Responses& responses, const EngineConfig& config, std::size_t n) {
  return fit_triplet_model(responses, config, n, 0.0, "ste");
}

EmbeddingFit fit_tste(const Responses& responses, const EngineConfig& config, std::size_t n) {
  return fit_triplet_model(responses, config, n, config.alpha, "tste");
}

}  // namespace tripscale
