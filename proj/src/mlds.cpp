#include "tripscale/mlds.hpp"

#include "tripscale/metrics.hpp"
#include "tripscale/optimize.hpp"
#include "tripscale/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace tripscale {
namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }
double logistic(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// log Phi(z) and the inverse Mills ratio phi(z)/Phi(z) for the standard normal.
void log_cdf_and_mills(double z, double& log_cdf, double& mills) {
  if (z > -30.0) {
    const double cdf = 0.5 * std::erfc(-z * kInvSqrt2);
    const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    log_cdf = std::log(cdf);
    mills = pdf / cdf;
    return;
  }
  // Asymptotic tail: Phi(z) ~ phi(z)/(-z) (1 - 1/z^2 + 3/z^4).
  const double z2 = z * z;
  const double series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2);
  log_cdf = -0.5 * z2 - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-z) + std::log(series);
  mills = -z / series;
}

/// Unconstrained parameters: n-1 increment logits followed by log sigma.
struct Parameterization {
  std::size_t n;

  std::vector<double> psi(const Eigen::VectorXd& x) const {
    std::vector<double> out(n, 0.0);
    double total = 0.0;
    for (std::size_t m = 0; m + 1 < n; ++m) total += softplus(x[static_cast<Eigen::Index>(m)]);
    double acc = 0.0;
    for (std::size_t t = 1; t < n; ++t) {
      acc += softplus(x[static_cast<Eigen::Index>(t - 1)]);
      out[t] = acc / total;
    }
    out[n - 1] = 1.0;
    return out;
  }
  double sigma(const Eigen::VectorXd& x) const { return std::exp(x[static_cast<Eigen::Index>(n - 1)]); }
};

/// |psi_a - psi_b| for a nondecreasing psi, plus the sign to apply to
/// d/dpsi_hi (and its negative to psi_lo).
struct PairDiff {
  std::size_t hi, lo;
};
PairDiff order_pair(std::size_t a, std::size_t b) { return a > b ? PairDiff{a, b} : PairDiff{b, a}; }

double negloglik_psi(const std::vector<double>& psi, double sigma,
                     const std::vector<QuadrupletResponse>& data, std::vector<double>* grad_psi,
                     double* grad_log_sigma) {
  double total = 0.0;
  if (grad_psi) std::fill(grad_psi->begin(), grad_psi->end(), 0.0);
  if (grad_log_sigma) *grad_log_sigma = 0.0;
  for (const auto& q : data) {
    const auto p1 = order_pair(q.a, q.b);
    const auto p2 = order_pair(q.c, q.d);
    const double delta = (psi[p1.hi] - psi[p1.lo]) - (psi[p2.hi] - psi[p2.lo]);
    const double s = q.first_larger ? 1.0 : -1.0;
    const double z = s * delta / sigma;
    double log_cdf, mills;
    log_cdf_and_mills(z, log_cdf, mills);
    total -= log_cdf;
    if (grad_psi) {
      const double g = -mills * s / sigma;  // dL/dDelta
      (*grad_psi)[p1.hi] += g;
      (*grad_psi)[p1.lo] -= g;
      (*grad_psi)[p2.hi] -= g;
      (*grad_psi)[p2.lo] += g;
    }
    if (grad_log_sigma) *grad_log_sigma += mills * z;
  }
  return total;
}

void validate_quadruplets(const std::vector<QuadrupletResponse>& data, std::size_t n) {
  for (const auto& q : data) {
    if (q.a >= n || q.b >= n || q.c >= n || q.d >= n)
      throw DataError("quadruplet index outside [0, " + std::to_string(n) + ")");
    if (q.a == q.b || q.c == q.d) throw DataError("quadruplet pair repeats a stimulus");
  }
}

}  // namespace

Embedding MldsFit::embedding() const {
  Eigen::MatrixXd points(static_cast<Eigen::Index>(scale.psi.size()), 1);
  for (std::size_t i = 0; i < scale.psi.size(); ++i) points(static_cast<Eigen::Index>(i), 0) = scale.psi[i];
  return Embedding(std::move(points), FitMeta{"mlds", 0, -scale.loglik, 0, {}});
}

bool is_mlds_valid(const Triplet& t) { return t.opt1 < t.ref && t.ref < t.opt2; }

QuadrupletResponse to_quadruplet(const TripletResponse& r) {
  if (!r.answered()) throw DataError("unanswered response " + canonical_triplet_id(r.triplet));
  return {r.triplet.ref, r.triplet.opt1, r.triplet.ref, r.triplet.opt2, r.answer == Answer::kOpt2};
}

double mlds_negloglik(const std::vector<double>& psi, double sigma,
                      const std::vector<QuadrupletResponse>& data) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be > 0");
  validate_quadruplets(data, psi.size());
  return negloglik_psi(psi, sigma, data, nullptr, nullptr);
}

MldsFit fit_mlds_quadruplets(const std::vector<QuadrupletResponse>& data, const EngineConfig& config,
                             std::size_t n) {
  config.validate();
  if (data.empty()) throw DataError("mlds: no responses to fit");
  if (n == 0)
    for (const auto& q : data) n = std::max({n, q.a + 1, q.b + 1, q.c + 1, q.d + 1});
  if (n < 3) throw DataError("mlds needs at least 3 stimuli");
  validate_quadruplets(data, n);

  const Parameterization param{n};
  const auto dim = static_cast<Eigen::Index>(n);  // n-1 increments + log sigma
  ObjectiveFn objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const auto psi = param.psi(x);
    const double sigma = param.sigma(x);
    std::vector<double> g_psi(n);
    double g_log_sigma = 0.0;
    const double value = negloglik_psi(psi, sigma, data, &g_psi, &g_log_sigma);
    // psi_t = C_t / S with C_t = sum_{m<t} inc_m, S = sum inc.
    double total = 0.0;
    for (std::size_t m = 0; m + 1 < n; ++m) total += softplus(x[static_cast<Eigen::Index>(m)]);
    double weighted = 0.0;
    for (std::size_t t = 0; t < n; ++t) weighted += g_psi[t] * psi[t];
    double tail = 0.0;  // sum_{t>m} g_psi[t]
    for (std::size_t m = n - 1; m-- > 0;) {
      tail += g_psi[m + 1];
      const double d_inc = (tail - weighted) / total;
      g[static_cast<Eigen::Index>(m)] = d_inc * logistic(x[static_cast<Eigen::Index>(m)]);
    }
    g[dim - 1] = g_log_sigma;
    return value;
  };

  DescentOptions options;
  options.max_iters = config.max_iters;
  options.tolerance = config.tolerance;

  std::optional<MldsFit> best;
  FitReport report;
  for (int restart = 0; restart < config.restarts; ++restart) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(restart)));
    Eigen::VectorXd x0(dim);
    for (Eigen::Index i = 0; i + 1 < dim; ++i) x0[i] = 0.1 * standard_normal(rng);
    x0[dim - 1] = std::log(0.2);
    auto result = gradient_descent(objective, std::move(x0), options);
    if (!std::isfinite(result.objective)) throw std::runtime_error("mlds: objective diverged");
    report.restart_objectives.push_back(result.objective);
    report.restart_training_errors.push_back(std::numeric_limits<double>::quiet_NaN());
    if (!best || result.objective < -best->scale.loglik) {
      best.emplace(MldsFit{{param.psi(result.x), param.sigma(result.x), -result.objective}, {}});
      report.chosen_restart = restart;
      report.objective_trace_length = result.trace.size();
      report.final_objective = result.objective;
    }
  }
  best->report = std::move(report);
  return std::move(*best);
}

MldsFit fit_mlds(const Responses& responses, const EngineConfig& config, std::size_t n) {
  if (responses.empty()) throw DataError("mlds: no responses to fit");
  for (const auto& r : responses)
    if (!is_mlds_valid(r.triplet))
      throw DataError("mlds: triplet " + canonical_triplet_id(r.triplet) +
                      " is not of the valid form (j;i,k) with i<j<k");
  auto fit = fit_mlds_any(responses, config, n);
  return fit;
}

MldsFit fit_mlds_any(const Responses& responses, const EngineConfig& config, std::size_t n) {
  if (responses.empty()) throw DataError("mlds: no responses to fit");
  if (n == 0) n = max_stimulus_index(responses) + 1;
  std::vector<QuadrupletResponse> data;
  data.reserve(responses.size());
  for (const auto& r : responses) {
    validate_triplet(r.triplet, n);
    data.push_back(to_quadruplet(r));
  }
  auto fit = fit_mlds_quadruplets(data, config, n);
  // Training triplet error of the chosen scale, for parity with the other engines.
  const double error = triplet_error(fit.embedding(), responses);
  fit.report.restart_training_errors.assign(fit.report.restart_objectives.size(),
                                            std::numeric_limits<double>::quiet_NaN());
  fit.report.restart_training_errors[static_cast<std::size_t>(fit.report.chosen_restart)] = error;
  return fit;
}

}  // namespace tripscale
