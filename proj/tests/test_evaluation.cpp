#include "oracles.hpp"

#include "tripscale/evaluation.hpp"
#include "tripscale/simulation.hpp"
#include "tripscale/sweep.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace tripscale;

namespace {

Responses simulated(const ScalingFunctionSpec& spec, std::size_t n, double sigma, double r, std::uint64_t seed) {
  const auto stim = spec.kind == ScalingKind::kTabulated2d ? spec.table_stimuli() : uniform_stimuli(n);
  const auto universe = enumerate_universe(stim.size(), UniverseMode::kGeneral);
  NoisyObserver obs(spec, sigma, seed + 1);
  return simulate_responses(obs, sample_triplets(universe, r, seed), stim);
}

TripletResponse answered(Triplet t, Answer a, std::optional<int> repeat = std::nullopt) {
  TripletResponse r;
  r.triplet = t;
  r.answer = a;
  r.repeat_index = repeat;
  return r;
}

}  // namespace

TEST_CASE("folds partition the items with sizes differing by at most one") {
  for (std::size_t count : {10u, 23u, 101u})
    for (int k : {2, 3, 10}) {
      const auto folds = make_folds(count, k, 7);
      REQUIRE(folds.size() == static_cast<std::size_t>(k));
      std::set<std::size_t> seen;
      std::size_t lo = count, hi = 0;
      for (const auto& f : folds) {
        lo = std::min(lo, f.size());
        hi = std::max(hi, f.size());
        seen.insert(f.begin(), f.end());
      }
      CHECK(hi - lo <= 1);
      CHECK(seen.size() == count);
    }
  CHECK(make_folds(50, 5, 1) == make_folds(50, 5, 1));
  CHECK(make_folds(50, 5, 1) != make_folds(50, 5, 2));
  CHECK_THROWS(make_folds(5, 1, 0));
  CHECK_THROWS(make_folds(3, 4, 0));
}

TEST_CASE("cross-validated error is deterministic and validates input") {
  const auto rs = simulated(ScalingFunctionSpec::sigmoid(), 10, 0.05, 1.0, 3);
  EngineConfig c;
  c.restarts = 2;
  const auto a = cross_validated_triplet_error(rs, EngineKind::kTste, c, 5, 11);
  const auto b = cross_validated_triplet_error(rs, EngineKind::kTste, c, 5, 11, 0, 2);
  CHECK(a.fold_errors == b.fold_errors);
  CHECK(a.fold_errors.size() == 5);
  CHECK(a.mean == doctest::Approx(oracle::mean(a.fold_errors)));
  CHECK(a.std >= 0.0);
  CHECK_THROWS(cross_validated_triplet_error(rs, EngineKind::kTste, c, static_cast<int>(rs.size()) + 1, 1));
  auto with_na = rs;
  with_na[0].answer = Answer::kUnanswered;
  CHECK_THROWS(cross_validated_triplet_error(with_na, EngineKind::kTste, c, 5, 1));
  CHECK_THROWS(cross_validated_triplet_error(rs, EngineKind::kNmds, c, 5, 1));
}

TEST_CASE("duplicating every response leaves the CV error about the same") {
  const auto rs = simulated(ScalingFunctionSpec::sigmoid(), 12, 0.05, 1.0, 21);
  Responses doubled = rs;
  doubled.insert(doubled.end(), rs.begin(), rs.end());
  EngineConfig c;
  c.restarts = 2;
  double single = 0.0, twice = 0.0;
  for (std::uint64_t seed : {1u, 2u}) {
    single += cross_validated_triplet_error(rs, EngineKind::kTste, c, 10, seed).mean / 2;
    twice += cross_validated_triplet_error(doubled, EngineKind::kTste, c, 10, seed).mean / 2;
  }
  // Duplicates can land in both train and validation, so the doubled set may
  // only look easier, by a margin bounded by the fold noise.
  CHECK(std::abs(single - twice) < 0.05);
}

TEST_CASE("MLDS cross-validation uses one dimension") {
  const auto rs = simulated(ScalingFunctionSpec::sigmoid(), 8, 0.05, 1.0, 4);
  EngineConfig c;
  c.restarts = 2;
  const auto rep = cross_validated_triplet_error(rs, EngineKind::kMlds, c, 4, 3);
  CHECK(rep.engine == "mlds");
  CHECK(rep.dim == 1);
  c.dim = 2;
  CHECK_THROWS(cross_validated_triplet_error(rs, EngineKind::kMlds, c, 4, 3));
}

TEST_CASE("dimension sweep on 1-D data recommends one dimension") {
  const auto rs = simulated(ScalingFunctionSpec::sigmoid(), 15, 0.02, 0.6, 8);
  EngineConfig c;
  c.restarts = 2;
  const auto sweep = dimension_sweep(rs, {EngineKind::kTste, EngineKind::kMlds}, {1, 2, 3}, c, 5, 5);
  CHECK(sweep.recommended.at("tste") == 1);
  CHECK(sweep.recommended.at("mlds") == 1);
  std::size_t missing = 0;
  for (const auto& e : sweep.entries)
    if (!e.report) {
      ++missing;
      CHECK(e.engine == "mlds");
      CHECK(e.dim > 1);
    }
  CHECK(missing == 2);
  std::ostringstream csv;
  write_sweep_csv(csv, sweep);
  CHECK(csv.str().rfind("engine,d,fold,error\n", 0) == 0);
  CHECK(csv.str().find("mlds,2,NA,NA") != std::string::npos);
  const auto single = dimension_sweep(rs, {EngineKind::kTste}, {3}, c, 5, 5);
  CHECK(single.entries.size() == 1);
  CHECK(single.recommended.at("tste") == 3);
}

TEST_CASE("consistency floor") {
  Responses unanimous;
  for (int rep = 0; rep < 3; ++rep) unanimous.push_back(answered({0, 1, 2}, Answer::kOpt1, rep));
  const auto zero = consistency_floor(unanimous);
  CHECK(zero.hard_fraction == 0.0);
  CHECK(zero.floor == 0.0);
  Responses mixed;
  for (std::size_t t = 0; t < 10; ++t) {
    const Triplet tr{t, t + 1, t + 2};
    mixed.push_back(answered(tr, Answer::kOpt1, 0));
    mixed.push_back(answered(tr, Answer::kOpt1, 1));
    mixed.push_back(answered(tr, t < 2 ? Answer::kOpt2 : Answer::kOpt1, 2));
  }
  const auto f = consistency_floor(mixed);
  CHECK(f.repeated_triplets == 10);
  CHECK(f.hard_triplets == 2);
  CHECK(f.hard_fraction == doctest::Approx(0.2));
  CHECK(f.floor == doctest::Approx(0.10));
}

TEST_CASE("simulation sweep: tables, determinism and NMDS gating") {
  SweepConfig c;
  c.n = 6;
  c.sigma_list = {0.05};
  c.r_list = {0.5, 1.0};
  c.repetitions = 2;
  c.restarts = 2;
  c.seed = 9;
  const auto a = run_simulation(c);
  const auto b = run_simulation(c, 2);
  std::ostringstream ra, rb, ma, sa;
  write_runs_csv(ra, a);
  write_runs_csv(rb, b);
  CHECK(ra.str() == rb.str());
  write_summary_csv(ma, a.means);
  write_summary_csv(sa, a.stds);
  CHECK(ma.str().rfind("engine,sigma,r,mse,triplet_error\n", 0) == 0);
  // STE, t-STE and MLDS at both r; NMDS only at r = 1.
  CHECK(a.means.size() == 7);
  CHECK(a.runs.size() == 14);
  CHECK(!a.warnings.empty());
  for (const auto& run : a.runs) {
    CHECK(run.mse.has_value());
    CHECK(run.triplet_error >= 0.0);
    CHECK(run.triplet_error <= 1.0);
    CHECK(run.scale.size() == 6);
  }
  const auto j = to_json(c);
  const auto back = sweep_config_from_json(j);
  CHECK(to_json(back) == j);
  c.error_set = ErrorSet::kHoldout;
  std::ostringstream rh;
  write_runs_csv(rh, run_simulation(c));
  CHECK(rh.str() != ra.str());
}

TEST_CASE("MLDS output is monotone on non-monotone ground truth") {
  SweepConfig c;
  c.spec = ScalingFunctionSpec::poly2();
  c.n = 10;
  c.sigma_list = {0.05};
  c.r_list = {1.0};
  c.engines = {EngineKind::kMlds};
  c.repetitions = 2;
  c.restarts = 2;
  for (const auto& run : run_simulation(c).runs) {
    bool increasing = true, decreasing = true;
    for (std::size_t i = 1; i < run.scale.size(); ++i) {
      increasing = increasing && run.scale[i] >= run.scale[i - 1];
      decreasing = decreasing && run.scale[i] <= run.scale[i - 1];
    }
    CHECK((increasing || decreasing));
  }
}

TEST_CASE("sweep config validation") {
  SweepConfig c;
  c.r_list = {0.0};
  CHECK_THROWS(c.validate());
  c = {};
  c.repetitions = 0;
  CHECK_THROWS(c.validate());
  CHECK_THROWS_AS(sweep_config_from_json(nlohmann::json{{"n", "ten"}}), DataError);
}
