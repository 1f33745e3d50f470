#include "oracles.hpp"

#include "tripscale/metrics.hpp"
#include "tripscale/optimize.hpp"
#include "tripscale/random.hpp"
#include "tripscale/simulation.hpp"
#include "tripscale/ste.hpp"

#include <doctest.h>

using namespace tripscale;

namespace {

Responses random_responses(Rng& rng, std::size_t n, std::size_t count) {
  Responses out;
  while (out.size() < count) {
    const std::size_t a = uniform_index(rng, n), b = uniform_index(rng, n), c = uniform_index(rng, n);
    if (a == b || b == c || a == c) continue;
    TripletResponse r;
    r.triplet = {a, b, c};
    r.answer = (rng() & 1) ? Answer::kOpt1 : Answer::kOpt2;
    out.push_back(r);
  }
  return out;
}

Eigen::MatrixXd random_points(Rng& rng, std::size_t n, int d) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(n), d);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = standard_normal(rng);
  return p;
}

/// Relative gradient error ||analytic - numeric|| / ||numeric|| at one instance.
template <typename Fn>
double gradient_error(const Fn& fn, const Eigen::MatrixXd& points) {
  const auto analytic = fn(points).gradient;
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(points.data(), points.size());
  const auto numeric = oracle::numeric_gradient(
      [&](const Eigen::VectorXd& v) {
        const Eigen::MatrixXd p = Eigen::Map<const Eigen::MatrixXd>(v.data(), points.rows(), points.cols());
        return fn(p).value;
      },
      x);
  const Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(analytic.data(), analytic.size());
  return (a - numeric).norm() / numeric.norm();
}

}  // namespace

TEST_CASE("STE probabilities by hand") {
  CHECK(ste_probability(0.7, 0.7) == 0.5);
  CHECK(ste_probability(0.0, std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-14));
  TripletResponse r;
  r.triplet = {0, 1, 2};
  r.answer = Answer::kOpt1;
  Eigen::MatrixXd eq(3, 1);
  eq << 0.0, 1.0, -1.0;
  CHECK(ste_negloglik_and_grad(eq, {r}).value == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  Eigen::MatrixXd p(3, 1);
  p << 0.0, 0.0, std::sqrt(std::log(3.0));
  CHECK(ste_negloglik_and_grad(p, {r}).value == doctest::Approx(-std::log(0.75)).epsilon(1e-12));
}

TEST_CASE("t-STE probabilities by hand") {
  for (double alpha : {0.5, 1.0, 4.0}) CHECK(tste_probability(2.0, 2.0, alpha) == 0.5);
  CHECK(tste_probability(0.0, 1.0, 1.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  // Kernel ratio evaluated directly for another alpha.
  const double alpha = 3.0, dn = 0.4, df = 2.5;
  const double kn = std::pow(1.0 + dn / alpha, -(alpha + 1.0) / 2.0);
  const double kf = std::pow(1.0 + df / alpha, -(alpha + 1.0) / 2.0);
  CHECK(tste_probability(dn, df, alpha) == doctest::Approx(kn / (kn + kf)).epsilon(1e-13));
}

TEST_CASE("probabilities are complementary") {
  Rng rng(8);
  for (int i = 0; i < 1000; ++i) {
    const double a = std::exp(3.0 * standard_normal(rng)), b = std::exp(3.0 * standard_normal(rng));
    CHECK(std::abs(ste_probability(a, b) + ste_probability(b, a) - 1.0) < 1e-12);
    CHECK(std::abs(tste_probability(a, b, 1.0) + tste_probability(b, a, 1.0) - 1.0) < 1e-12);
  }
}

TEST_CASE("analytic gradients match central differences") {
  Rng rng(31);
  double worst_ste = 0.0, worst_tste = 0.0;
  for (int inst = 0; inst < 20; ++inst) {
    const int d = 1 + inst % 3;
    const auto points = random_points(rng, 10, d);
    const auto rs = random_responses(rng, 10, 60);
    worst_ste = std::max(worst_ste, gradient_error([&](const Eigen::MatrixXd& p) { return ste_negloglik_and_grad(p, rs); }, points));
    const double alpha = inst % 2 ? 1.0 : 2.5;
    worst_tste = std::max(worst_tste, gradient_error([&](const Eigen::MatrixXd& p) { return tste_negloglik_and_grad(p, rs, alpha); }, points));
  }
  CHECK(worst_ste < 1e-4);
  CHECK(worst_tste < 1e-4);
}

TEST_CASE("gradient descent on a quadratic") {
  const ObjectiveFn f = [](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    g = 2.0 * (x - Eigen::VectorXd::Constant(x.size(), 3.0));
    g[0] *= 10.0;
    return 10.0 * (x[0] - 3) * (x[0] - 3) + (x.tail(x.size() - 1).array() - 3).square().sum();
  };
  DescentOptions opt;
  opt.tolerance = 1e-14;
  opt.max_iters = 5000;
  const auto res = gradient_descent(f, Eigen::VectorXd::Zero(3), opt);
  CHECK((res.x.array() - 3.0).abs().maxCoeff() < 1e-5);
  for (std::size_t i = 1; i < res.trace.size(); ++i) CHECK(res.trace[i] <= res.trace[i - 1]);
  CHECK(res.objective <= res.initial_objective);
  const ObjectiveFn bad = [](const Eigen::VectorXd&, Eigen::VectorXd& g) {
    g.setZero();
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS(gradient_descent(bad, Eigen::VectorXd::Zero(2), opt));
}

TEST_CASE("noiseless collinear data embeds with zero training error") {
  const std::vector<double> xs{0.0, 1.0, 2.5, 4.5};
  Responses rs;
  for (const auto& t : enumerate_universe(4, UniverseMode::kGeneral).triplets) {
    TripletResponse r;
    r.triplet = t;
    r.answer = std::abs(xs[t.ref] - xs[t.opt1]) < std::abs(xs[t.ref] - xs[t.opt2]) ? Answer::kOpt1 : Answer::kOpt2;
    rs.push_back(r);
  }
  EngineConfig c;
  c.seed = 4;
  CHECK(triplet_error(fit_ste(rs, c).embedding, rs) == 0.0);
  CHECK(triplet_error(fit_tste(rs, c).embedding, rs) == 0.0);
}

TEST_CASE("noiseless planar data: STE fits exactly, t-STE trades a few triplets for tail mass") {
  Rng rng(77);
  const auto truth = random_points(rng, 8, 2);
  const Embedding e(truth);
  Responses rs;
  for (const auto& t : enumerate_universe(8, UniverseMode::kGeneral).triplets) {
    TripletResponse r;
    r.triplet = t;
    r.answer = e.squared_distance(t.ref, t.opt1) < e.squared_distance(t.ref, t.opt2) ? Answer::kOpt1 : Answer::kOpt2;
    rs.push_back(r);
  }
  EngineConfig c;
  c.dim = 2;
  c.seed = 2;
  c.max_iters = 5000;
  CHECK(triplet_error(fit_ste(rs, c).embedding, rs) == 0.0);
  // The heavy-tailed optimum is not the generating geometry: descending from
  // the truth itself lowers the objective while breaking some triplets.
  const auto tste = fit_tste(rs, c);
  CHECK(tste.embedding.meta().objective < tste_negloglik_and_grad(10.0 * truth, rs).value);
  CHECK(triplet_error(tste.embedding, rs) < 0.1);
}

TEST_CASE("fits are deterministic and report their restarts") {
  Rng rng(3);
  const auto rs = random_responses(rng, 9, 80);
  EngineConfig c;
  c.dim = 2;
  c.restarts = 4;
  c.seed = 12;
  const auto a = fit_tste(rs, c), b = fit_tste(rs, c);
  CHECK(a.embedding.points() == b.embedding.points());
  CHECK(a.report.restart_objectives.size() == 4);
  CHECK(a.report.restart_training_errors.size() == 4);
  const auto chosen = static_cast<std::size_t>(a.report.chosen_restart);
  for (double err : a.report.restart_training_errors) CHECK(a.report.restart_training_errors[chosen] <= err);
  CHECK(a.embedding.meta().engine == "tste");
  c.seed = 13;
  CHECK(fit_tste(rs, c).embedding.points() != a.embedding.points());
}

TEST_CASE("degenerate inputs") {
  TripletResponse r;
  r.triplet = {0, 1, 2};
  r.answer = Answer::kOpt1;
  EngineConfig c;
  c.restarts = 2;
  const auto fit = fit_ste({r}, c, 5);
  CHECK(fit.embedding.size() == 5);
  CHECK(fit.embedding.squared_distance(0, 1) < fit.embedding.squared_distance(0, 2));
  CHECK(fit.embedding.meta().unreferenced == std::vector<std::size_t>{3, 4});
  CHECK(fit.embedding.points().allFinite());
  CHECK_THROWS(fit_ste({}, c));
}
