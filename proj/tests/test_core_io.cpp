#include "tripscale/core.hpp"
#include "tripscale/io.hpp"
#include "tripscale/metrics.hpp"
#include "tripscale/random.hpp"

#include <doctest.h>

#include <set>
#include <sstream>

using namespace tripscale;

namespace {

Embedding line(std::initializer_list<double> xs) {
  Eigen::MatrixXd p(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) p(i++, 0) = x;
  return Embedding(p);
}

TripletResponse resp(std::size_t r, std::size_t a, std::size_t b, Answer ans) {
  TripletResponse out;
  out.triplet = {r, a, b};
  out.answer = ans;
  return out;
}

}  // namespace

TEST_CASE("consistency_sign follows the answer and the distances") {
  const auto e = line({0.0, 1.0, 3.0});
  CHECK(consistency_sign(e, resp(0, 1, 2, Answer::kOpt1)) == 1);
  CHECK(consistency_sign(e, resp(0, 1, 2, Answer::kOpt2)) == -1);
  const auto tie = line({0.0, 1.0, -1.0});
  CHECK(consistency_sign(tie, resp(0, 1, 2, Answer::kOpt1)) == 0);
  CHECK(consistency_sign(tie, resp(0, 1, 2, Answer::kOpt2)) == 0);
}

TEST_CASE("canonical triplet ids keep option order") {
  CHECK(canonical_triplet_id({3, 1, 7}) == "3:1:7");
  CHECK(canonical_triplet_id({0, 2, 1}) == "0:2:1");
  CHECK(canonical_triplet_id({1, 0, 2}) != canonical_triplet_id({1, 2, 0}));
}

TEST_CASE("triplet validation") {
  CHECK_NOTHROW(validate_triplet({0, 1, 2}, 3));
  CHECK_THROWS_AS(validate_triplet({0, 0, 2}, 3), DataError);
  CHECK_THROWS_AS(validate_triplet({0, 1, 3}, 3), DataError);
}

TEST_CASE("dissimilarity matrix invariants") {
  Eigen::MatrixXd ok(2, 2);
  ok << 0, 1, 1, 0;
  CHECK_NOTHROW(DissimilarityMatrix{ok});
  Eigen::MatrixXd asym = ok;
  asym(0, 1) = 2;
  CHECK_THROWS_AS(DissimilarityMatrix{asym}, DataError);
  Eigen::MatrixXd diag = ok;
  diag(0, 0) = 0.5;
  CHECK_THROWS_AS(DissimilarityMatrix{diag}, DataError);
  Eigen::MatrixXd neg = ok;
  neg(0, 1) = neg(1, 0) = -1;
  CHECK_THROWS_AS(DissimilarityMatrix{neg}, DataError);
  CHECK_THROWS_AS(DissimilarityMatrix{Eigen::MatrixXd(2, 3)}, DataError);
}

TEST_CASE("engine config validation") {
  EngineConfig c;
  CHECK_NOTHROW(c.validate());
  c.dim = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.alpha = 0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("triplet error counts contradictions, ties at half weight") {
  const auto e = line({0.0, 1.0, 3.0, 6.0});
  Responses agree{resp(0, 1, 2, Answer::kOpt1), resp(3, 2, 0, Answer::kOpt1), resp(1, 3, 0, Answer::kOpt2)};
  CHECK(triplet_error(e, agree) == 0.0);
  Responses flipped = agree;
  for (auto& r : flipped) r.answer = r.answer == Answer::kOpt1 ? Answer::kOpt2 : Answer::kOpt1;
  CHECK(triplet_error(e, flipped) == 1.0);
  const auto tie = line({0.0, 1.0, -1.0});
  CHECK(triplet_error(tie, {resp(0, 1, 2, Answer::kOpt1)}) == 0.5);
  CHECK_THROWS_AS(triplet_error(e, {}), DataError);
  CHECK_THROWS_AS(triplet_error(e, {resp(0, 1, 2, Answer::kUnanswered)}), DataError);
}

TEST_CASE("triplet error plus flipped error is one without ties") {
  Rng rng(5);
  Eigen::MatrixXd p(12, 2);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = standard_normal(rng);
  const Embedding e(p);
  Responses v, f;
  for (int t = 0; t < 200; ++t) {
    std::size_t a = uniform_index(rng, 12), b = uniform_index(rng, 12), c = uniform_index(rng, 12);
    if (a == b || b == c || a == c) continue;
    const auto ans = (rng() & 1) ? Answer::kOpt1 : Answer::kOpt2;
    v.push_back(resp(a, b, c, ans));
    f.push_back(resp(a, b, c, ans == Answer::kOpt1 ? Answer::kOpt2 : Answer::kOpt1));
  }
  CHECK(triplet_error(e, v) + triplet_error(e, f) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("random embedding against random answers scores about one half") {
  Rng rng(17);
  Eigen::MatrixXd p(30, 2);
  for (Eigen::Index i = 0; i < p.size(); ++i) p.data()[i] = standard_normal(rng);
  Responses v;
  while (v.size() < 10000) {
    std::size_t a = uniform_index(rng, 30), b = uniform_index(rng, 30), c = uniform_index(rng, 30);
    if (a == b || b == c || a == c) continue;
    v.push_back(resp(a, b, c, (rng() & 1) ? Answer::kOpt1 : Answer::kOpt2));
  }
  CHECK(std::abs(triplet_error(Embedding(p), v) - 0.5) < 0.02);
}

TEST_CASE("1-D normalization and MSE") {
  const std::vector<double> truth{0.0, 0.2, 0.7, 1.0};
  SUBCASE("identity") {
    const auto out = normalize_scale_1d(truth, truth);
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(out[i] == truth[i]);
  }
  SUBCASE("reflection") {
    std::vector<double> mirrored;
    for (double t : truth) mirrored.push_back(-t + 4.0);
    const auto out = normalize_scale_1d(mirrored, truth);
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(out[i] == doctest::Approx(truth[i]).epsilon(1e-15));
  }
  SUBCASE("affine") {
    std::vector<double> scaled;
    for (double t : truth) scaled.push_back(5.0 * t + 3.0);
    const auto out = normalize_scale_1d(scaled, truth);
    for (std::size_t i = 0; i < truth.size(); ++i) CHECK(std::abs(out[i] - truth[i]) < 1e-12);
  }
  SUBCASE("offset vanishes") {
    std::vector<double> shifted;
    for (double t : truth) shifted.push_back(t + 0.1);
    CHECK(mse_1d(normalize_scale_1d(shifted, truth), truth) < 1e-30);
  }
  CHECK(mse_1d(truth, truth) == 0.0);
  const std::vector<double> a{0.0, 1.0}, b{1.0, 0.0};
  CHECK(mse_1d(minmax_scale(a), b) == 1.0);
}

TEST_CASE("seeds and rng helpers are reproducible") {
  CHECK(derive_seed(1, 2) == derive_seed(1, 2));
  CHECK(derive_seed(1, 2) != derive_seed(1, 3));
  CHECK(derive_seed(1, 2) != derive_seed(2, 2));
  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) CHECK(standard_normal(a) == standard_normal(b));
  std::vector<int> v{0, 1, 2, 3, 4, 5, 6, 7};
  Rng c(3);
  shuffle(v.begin(), v.end(), c);
  CHECK(std::set<int>(v.begin(), v.end()).size() == 8);
}

TEST_CASE("standard_normal moments") {
  Rng rng(123);
  double s = 0, ss = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = standard_normal(rng);
    s += z;
    ss += z * z;
  }
  CHECK(std::abs(s / n) < 0.01);
  CHECK(std::abs(ss / n - 1.0) < 0.01);
}

TEST_CASE("response CSV round trip") {
  Responses rs{resp(0, 1, 2, Answer::kOpt1), resp(2, 0, 1, Answer::kOpt2), resp(1, 2, 0, Answer::kUnanswered)};
  rs[0].rt_ms = 812.5;
  rs[1].session_id = "s000001-p1";
  rs[2].repeat_index = 2;
  std::stringstream buf;
  io::write_responses(buf, rs);
  const std::string text = buf.str();
  CHECK(text.rfind(io::kResponseHeader, 0) == 0);
  const auto back = io::read_responses(buf);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].triplet == rs[i].triplet);
    CHECK(back[i].answer == rs[i].answer);
    CHECK(back[i].rt_ms == rs[i].rt_ms);
    CHECK(back[i].session_id == rs[i].session_id);
    CHECK(back[i].repeat_index == rs[i].repeat_index);
  }
  std::stringstream again;
  io::write_responses(again, back);
  CHECK(again.str() == text);
}

TEST_CASE("response CSV errors carry line numbers") {
  std::stringstream empty;
  CHECK_THROWS_AS(io::read_responses(empty), DataError);
  std::stringstream no_answer("ref,opt1,opt2\n0,1,2\n");
  CHECK_THROWS_AS(io::read_responses(no_answer), DataError);
  std::stringstream bad("ref,opt1,opt2,answer\n0,1,2,1\n0,1,2,3\n");
  try {
    io::read_responses(bad);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  std::stringstream repeated("ref,opt1,opt2,answer\n0,0,2,1\n");
  CHECK_THROWS_AS(io::read_responses(repeated), DataError);
  std::stringstream plus("ref,opt1,opt2,answer\n0,1,2,+1\n1,0,2,NA\n");
  const auto ok = io::read_responses(plus);
  CHECK(ok[0].answer == Answer::kOpt1);
  CHECK(ok[1].answer == Answer::kUnanswered);
}

TEST_CASE("slant labels map degrees to indices") {
  const auto slant = io::slant_stimuli();
  CHECK(slant.size() == 8);
  CHECK(slant.index_of("0") == 0);
  CHECK(slant.index_of("70") == 7);
  std::stringstream in("ref,opt1,opt2,answer\n30,10,60,-1\n");
  const auto rs = io::read_responses(in, &slant);
  CHECK(rs[0].triplet == Triplet{3, 1, 6});
  std::stringstream unknown("ref,opt1,opt2,answer\n35,10,60,-1\n");
  CHECK_THROWS_AS(io::read_responses(unknown, &slant), DataError);
}

TEST_CASE("embedding JSON round trip") {
  Eigen::MatrixXd p(3, 2);
  p << 0.1, 0.2, -1.5, 3.25, 1e-7, 0.0;
  FitMeta meta;
  meta.engine = "tste";
  meta.seed = 42;
  meta.objective = 1.25;
  meta.iterations = 17;
  meta.unreferenced = {2};
  const Embedding e(p, meta);
  const auto back = io::embedding_from_json(io::to_json(e));
  CHECK(back.points() == p);
  CHECK(back.meta().engine == "tste");
  CHECK(back.meta().seed == 42);
  CHECK(back.meta().unreferenced == std::vector<std::size_t>{2});
  CHECK_THROWS_AS(io::embedding_from_json(nlohmann::json{{"points", 3}}), DataError);
}
