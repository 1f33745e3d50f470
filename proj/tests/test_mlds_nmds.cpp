#include "oracles.hpp"

#include "tripscale/metrics.hpp"
#include "tripscale/mlds.hpp"
#include "tripscale/nmds.hpp"
#include "tripscale/random.hpp"
#include "tripscale/simulation.hpp"

#include <doctest.h>

using namespace tripscale;

TEST_CASE("PAVA on hand cases") {
  const std::vector<double> mono{1.0, 2.0, 2.0, 5.0};
  CHECK(pava(mono) == mono);
  const std::vector<double> y{3.0, 1.0, 2.0};
  const auto fit = pava(y);
  for (double v : fit) CHECK(v == doctest::Approx(2.0));
  CHECK(fit == oracle::brute_force_isotonic(y));
  const std::vector<double> w{1.0, 3.0};
  const std::vector<double> yy{4.0, 0.0};
  const auto wf = pava(yy, w);
  CHECK(wf[0] == doctest::Approx(1.0));
  CHECK(wf[1] == doctest::Approx(1.0));
}

TEST_CASE("PAVA equals the brute-force least-squares monotone fit") {
  Rng rng(1234);
  double worst = 0.0;
  for (int inst = 0; inst < 100; ++inst) {
    const std::size_t len = 1 + uniform_index(rng, 6);
    std::vector<double> y(len);
    for (auto& v : y) v = standard_normal(rng);
    if (inst % 5 == 0 && len > 1) y[1] = y[0];  // exercise equal targets
    const auto fit = pava(y);
    const auto ref = oracle::brute_force_isotonic(y);
    for (std::size_t i = 0; i < len; ++i) worst = std::max(worst, std::abs(fit[i] - ref[i]));
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("isotonic_fit orders by key and pools equal keys") {
  const std::vector<double> keys{3.0, 1.0, 2.0, 2.0};
  const std::vector<double> targets{0.0, 1.0, 5.0, 3.0};
  const auto fit = isotonic_fit(keys, targets);
  // Sorted by key: 1 -> 1, (2,2) -> pooled 4, 3 -> 0; then PAVA pools 4 and 0.
  CHECK(fit[1] == doctest::Approx(1.0));
  CHECK(fit[2] == fit[3]);
  CHECK(fit[2] == doctest::Approx(8.0 / 3.0));
  CHECK(fit[0] == doctest::Approx(8.0 / 3.0));
  CHECK_THROWS(isotonic_fit(std::vector<double>{}, std::vector<double>{}));
  CHECK_THROWS(isotonic_fit(keys, std::vector<double>{1.0}));
}

TEST_CASE("MLDS likelihood matches the probit model") {
  const std::vector<double> psi{0.0, 0.3, 0.55, 1.0};
  const double sigma = 0.2;
  const std::vector<QuadrupletResponse> data{{0, 1, 1, 3, false}, {1, 2, 0, 3, true}, {2, 3, 0, 1, true}};
  double expected = 0.0;
  for (const auto& q : data) {
    const double delta = std::abs(psi[q.a] - psi[q.b]) - std::abs(psi[q.c] - psi[q.d]);
    const double z = (q.first_larger ? 1.0 : -1.0) * delta / sigma;
    expected -= std::log(0.5 * std::erfc(-z / std::sqrt(2.0)));
  }
  CHECK(mlds_negloglik(psi, sigma, data) == doctest::Approx(expected).epsilon(1e-12));
  // Far tail stays finite.
  const std::vector<QuadrupletResponse> tail{{0, 3, 0, 1, false}};
  CHECK(std::isfinite(mlds_negloglik(psi, 1e-3, tail)));
}

TEST_CASE("triplet to quadruplet mapping") {
  TripletResponse r;
  r.triplet = {2, 1, 3};
  r.answer = Answer::kOpt1;
  auto q = to_quadruplet(r);
  CHECK((q.a == 2 && q.b == 1 && q.c == 2 && q.d == 3));
  CHECK_FALSE(q.first_larger);
  r.answer = Answer::kOpt2;
  CHECK(to_quadruplet(r).first_larger);
  CHECK(is_mlds_valid({2, 1, 3}));
  CHECK_FALSE(is_mlds_valid({1, 2, 3}));
}

TEST_CASE("MLDS recovers a noiseless monotone scale") {
  const auto stim = uniform_stimuli(8);
  NoisyObserver obs(ScalingFunctionSpec::sigmoid(), 0.0, 1);
  const auto rs = simulate_responses(obs, enumerate_universe(8, UniverseMode::kMldsValid).triplets, stim);
  REQUIRE(rs.size() == 56);
  EngineConfig c;
  c.seed = 3;
  const auto fit = fit_mlds(rs, c);
  const auto& psi = fit.scale.psi;
  CHECK(psi.front() == 0.0);
  CHECK(psi.back() == 1.0);
  for (std::size_t i = 1; i < psi.size(); ++i) CHECK(psi[i] > psi[i - 1]);
  const auto truth = true_percepts(ScalingFunctionSpec::sigmoid(), stim);
  std::vector<double> t(truth.data(), truth.data() + truth.size());
  CHECK(mse_1d(normalize_scale_1d(psi, minmax_scale(t)), minmax_scale(t)) < 0.01);
  CHECK(triplet_error(fit.embedding(), rs) == 0.0);
}

TEST_CASE("MLDS output stays monotone and anchored on lopsided answers") {
  Responses rs;
  for (std::size_t j = 1; j + 1 < 6; ++j)
    for (std::size_t k = j + 1; k < 6; ++k) {
      TripletResponse r;
      r.triplet = {j, j - 1, k};
      r.answer = Answer::kOpt1;
      rs.push_back(r);
    }
  EngineConfig c;
  c.restarts = 3;
  const auto psi = fit_mlds(rs, c).scale.psi;
  CHECK(psi.front() == 0.0);
  CHECK(psi.back() == 1.0);
  for (std::size_t i = 1; i < psi.size(); ++i) CHECK(psi[i] >= psi[i - 1]);
}

TEST_CASE("MLDS rejects non-valid triplets and fits quadruplets directly") {
  TripletResponse bad;
  bad.triplet = {0, 1, 2};
  bad.answer = Answer::kOpt1;
  try {
    fit_mlds({bad}, EngineConfig{});
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("0:1:2") != std::string::npos);
  }
  // Quadruplets from a known scale: wider pairs judged larger.
  const std::vector<double> psi{0.0, 0.1, 0.5, 0.6, 1.0};
  std::vector<QuadrupletResponse> qs;
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b)
      for (std::size_t c = 0; c < 5; ++c)
        for (std::size_t d = c + 1; d < 5; ++d) {
          const double diff = (psi[b] - psi[a]) - (psi[d] - psi[c]);
          if (std::abs(diff) > 1e-9) qs.push_back({a, b, c, d, diff > 0});
        }
  EngineConfig c;
  c.restarts = 2;
  const auto fit = fit_mlds_quadruplets(qs, c);
  for (std::size_t i = 0; i < 5; ++i) CHECK(std::abs(fit.scale.psi[i] - psi[i]) < 0.05);
}

TEST_CASE("classical scaling and NMDS reproduce exact planar distances") {
  Rng rng(5);
  Eigen::MatrixXd truth(12, 2);
  for (Eigen::Index i = 0; i < truth.size(); ++i) truth.data()[i] = uniform01(rng);
  Eigen::MatrixXd d(12, 12);
  for (Eigen::Index i = 0; i < 12; ++i)
    for (Eigen::Index j = 0; j < 12; ++j) d(i, j) = (truth.row(i) - truth.row(j)).norm();
  const DissimilarityMatrix delta(d);
  CHECK(oracle::procrustes_residual(truth, classical_scaling(delta, 2)) < 1e-9);
  EngineConfig c;
  c.dim = 2;
  c.restarts = 3;
  const auto res = fit_nmds(delta, c);
  CHECK(res.stress < 1e-3);
  CHECK(oracle::procrustes_residual(truth, res.embedding.points()) < 1e-2);
  CHECK(kruskal_stress(res.embedding.points(), res.disparities) == doctest::Approx(res.stress));
  for (std::size_t i = 1; i < res.stress_trace.size(); ++i) CHECK(res.stress_trace[i] <= res.stress_trace[i - 1] + 1e-12);
}

TEST_CASE("NMDS on a triangle and degenerate input") {
  Eigen::MatrixXd tri(3, 3);
  tri << 0, 3, 4, 3, 0, 5, 4, 5, 0;
  EngineConfig c;
  c.dim = 2;
  c.restarts = 2;
  CHECK(fit_nmds(DissimilarityMatrix(tri), c).stress < 1e-6);
  CHECK_THROWS_AS(fit_nmds(DissimilarityMatrix(Eigen::MatrixXd::Zero(4, 4)), c), DataError);
}

TEST_CASE("Kruskal stress by hand") {
  Eigen::MatrixXd pts(3, 1);
  pts << 0, 1, 3;
  Eigen::MatrixXd dhat(3, 3);
  dhat << 0, 1, 2, 1, 0, 2, 2, 2, 0;
  // distances (1, 3, 2); residuals (0, 1, 0); sum d^2 = 14.
  CHECK(kruskal_stress(pts, dhat) == doctest::Approx(1.0 / 14.0));
}
