#include "tripscale/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace tripscale {
namespace {

double logistic(double gamma, double s) { return 1.0 / (1.0 + std::exp(-gamma * (s - 0.5))); }

}  // namespace

std::string to_string(ScalingKind kind) {
  switch (kind) {
    case ScalingKind::kSigmoid: return "sigmoid";
    case ScalingKind::kPoly2: return "poly2";
    case ScalingKind::kSinusoid: return "sinusoid";
    case ScalingKind::kPoly3Conditional: return "poly3_conditional";
    case ScalingKind::kTabulated2d: return "tabulated_2d";
  }
  return "unknown";
}

ScalingKind scaling_kind_from_string(const std::string& name) {
  for (auto k : {ScalingKind::kSigmoid, ScalingKind::kPoly2, ScalingKind::kSinusoid,
                 ScalingKind::kPoly3Conditional, ScalingKind::kTabulated2d})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown scaling function kind '" + name + "'");
}

ScalingFunctionSpec ScalingFunctionSpec::sigmoid(double gamma) {
  if (!(gamma > 0.0)) throw std::invalid_argument("sigmoid gamma must be > 0");
  ScalingFunctionSpec s;
  s.kind = ScalingKind::kSigmoid;
  s.gamma = gamma;
  return s;
}

ScalingFunctionSpec ScalingFunctionSpec::poly2(double vertex) {
  if (!(vertex > 0.0 && vertex < 1.0)) throw std::invalid_argument("poly2 vertex must lie in (0,1)");
  ScalingFunctionSpec s;
  s.kind = ScalingKind::kPoly2;
  s.vertex = vertex;
  return s;
}

ScalingFunctionSpec ScalingFunctionSpec::sinusoid() {
  ScalingFunctionSpec s;
  s.kind = ScalingKind::kSinusoid;
  return s;
}

ScalingFunctionSpec ScalingFunctionSpec::poly3_conditional() {
  ScalingFunctionSpec s;
  s.kind = ScalingKind::kPoly3Conditional;
  return s;
}

ScalingFunctionSpec ScalingFunctionSpec::tabulated(std::vector<TableEntry> table) {
  if (table.size() < 2) throw DataError("a tabulated scaling function needs at least 2 rows");
  std::sort(table.begin(), table.end(),
            [](const TableEntry& a, const TableEntry& b) { return a.stimulus < b.stimulus; });
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto& e = table[i];
    if (!(e.stimulus > 0.0 && e.stimulus < 1.0))
      throw DataError("table stimulus " + std::to_string(e.stimulus) + " outside (0,1)");
    if (i > 0 && !(e.stimulus > table[i - 1].stimulus))
      throw DataError("duplicate table stimulus");
    if (e.point.size() != table.front().point.size() || e.point.size() < 1)
      throw DataError("table points must share one dimension");
    if (!e.point.allFinite()) throw DataError("table point is not finite");
  }
  ScalingFunctionSpec s;
  s.kind = ScalingKind::kTabulated2d;
  s.table = std::move(table);
  return s;
}

int ScalingFunctionSpec::dim() const {
  if (kind == ScalingKind::kTabulated2d) return static_cast<int>(table.front().point.size());
  return 1;
}

std::vector<double> ScalingFunctionSpec::table_stimuli() const {
  std::vector<double> out;
  for (const auto& e : table) out.push_back(e.stimulus);
  return out;
}

Eigen::VectorXd eval_scaling(const ScalingFunctionSpec& spec, double s) {
  if (!(s > 0.0 && s < 1.0))
    throw std::domain_error("scaling functions are defined on (0,1), got " + std::to_string(s));
  Eigen::VectorXd out(1);
  switch (spec.kind) {
    case ScalingKind::kSigmoid: {
      const double lo = logistic(spec.gamma, 0.0);
      const double hi = logistic(spec.gamma, 1.0);
      out[0] = (logistic(spec.gamma, s) - lo) / (hi - lo);
      break;
    }
    case ScalingKind::kPoly2: {
      const double v = spec.vertex;
      const double sup = std::max(v * v, (1.0 - v) * (1.0 - v));
      out[0] = (s - v) * (s - v) / sup;
      break;
    }
    case ScalingKind::kSinusoid:
      out[0] = 0.5 + 0.5 * std::sin(2.0 * std::numbers::pi * s);
      break;
    case ScalingKind::kPoly3Conditional: {
      const double x = s - 0.5;
      out[0] = 0.5 + 4.0 * x * x * x;
      break;
    }
    case ScalingKind::kTabulated2d: {
      const auto& t = spec.table;
      if (s <= t.front().stimulus) return t.front().point;
      if (s >= t.back().stimulus) return t.back().point;
      auto hi = std::upper_bound(t.begin(), t.end(), s,
                                 [](double v, const TableEntry& e) { return v < e.stimulus; });
      auto lo = hi - 1;
      const double w = (s - lo->stimulus) / (hi->stimulus - lo->stimulus);
      return (1.0 - w) * lo->point + w * hi->point;
    }
  }
  return out;
}

double wavelength_to_stimulus(double wavelength_nm) { return (wavelength_nm - 400.0) / 300.0; }

nlohmann::json to_json(const ScalingFunctionSpec& spec) {
  nlohmann::json j{{"kind", to_string(spec.kind)}};
  switch (spec.kind) {
    case ScalingKind::kSigmoid: j["gamma"] = spec.gamma; break;
    case ScalingKind::kPoly2: j["vertex"] = spec.vertex; break;
    case ScalingKind::kTabulated2d: {
      nlohmann::json table = nlohmann::json::object();
      for (const auto& e : spec.table) {
        std::vector<double> p(e.point.data(), e.point.data() + e.point.size());
        table[e.label] = p;
      }
      j["dim"] = spec.dim();
      j["table"] = std::move(table);
      break;
    }
    default: break;
  }
  return j;
}

ScalingFunctionSpec scaling_spec_from_json(const nlohmann::json& j) {
  try {
    const auto kind = scaling_kind_from_string(j.at("kind").get<std::string>());
    switch (kind) {
      case ScalingKind::kSigmoid: return ScalingFunctionSpec::sigmoid(j.value("gamma", 10.0));
      case ScalingKind::kPoly2: return ScalingFunctionSpec::poly2(j.value("vertex", 0.5));
      case ScalingKind::kSinusoid: return ScalingFunctionSpec::sinusoid();
      case ScalingKind::kPoly3Conditional: return ScalingFunctionSpec::poly3_conditional();
      case ScalingKind::kTabulated2d: {
        std::vector<TableEntry> rows;
        for (const auto& [key, value] : j.at("table").items()) {
          TableEntry e;
          e.label = key;
          e.stimulus = wavelength_to_stimulus(std::stod(key));
          const auto p = value.get<std::vector<double>>();
          e.point = Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
          rows.push_back(std::move(e));
        }
        return ScalingFunctionSpec::tabulated(std::move(rows));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("scaling spec JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("scaling spec JSON: ") + e.what());
  }
  throw DataError("scaling spec JSON: unsupported kind");
}

std::vector<double> uniform_stimuli(std::size_t n) {
  std::vector<double> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = (static_cast<double>(i) + 0.5) / static_cast<double>(n);
  return s;
}

Eigen::MatrixXd true_percepts(const ScalingFunctionSpec& spec, const std::vector<double>& stimuli) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(stimuli.size()), spec.dim());
  for (std::size_t i = 0; i < stimuli.size(); ++i)
    out.row(static_cast<Eigen::Index>(i)) = eval_scaling(spec, stimuli[i]).transpose();
  return out;
}

NoisyObserver::NoisyObserver(ScalingFunctionSpec spec, double sigma, std::uint64_t seed,
                             TiePolicy tie_policy)
    : spec_(std::move(spec)), sigma_(sigma), tie_policy_(tie_policy), rng_(seed) {
  if (!(sigma_ >= 0.0)) throw std::invalid_argument("observer sigma must be >= 0");
}

Eigen::VectorXd NoisyObserver::percept(std::size_t index, const std::vector<double>& stimuli) {
  Eigen::VectorXd y = eval_scaling(spec_, stimuli.at(index));
  if (sigma_ > 0.0)
    for (Eigen::Index c = 0; c < y.size(); ++c) y[c] += sigma_ * standard_normal(rng_);
  return y;
}

TripletResponse NoisyObserver::answer(const Triplet& t, const std::vector<double>& stimuli) {
  validate_triplet(t, stimuli.size());
  const Eigen::VectorXd yi = percept(t.ref, stimuli);
  const Eigen::VectorXd yj = percept(t.opt1, stimuli);
  const Eigen::VectorXd yk = percept(t.opt2, stimuli);
  const double dj = (yi - yj).squaredNorm();
  const double dk = (yi - yk).squaredNorm();
  TripletResponse r;
  r.triplet = t;
  if (dj < dk) {
    r.answer = Answer::kOpt1;
  } else if (dj > dk) {
    r.answer = Answer::kOpt2;
  } else if (tie_policy_ == TiePolicy::kFixedPlus) {
    r.answer = Answer::kOpt1;
  } else {
    r.answer = (rng_() & 1ULL) ? Answer::kOpt1 : Answer::kOpt2;
  }
  return r;
}

DissimilarityMatrix NoisyObserver::noisy_dissimilarities(const std::vector<double>& stimuli) {
  const auto n = static_cast<Eigen::Index>(stimuli.size());
  std::vector<Eigen::VectorXd> y;
  y.reserve(stimuli.size());
  for (std::size_t i = 0; i < stimuli.size(); ++i) y.push_back(percept(i, stimuli));
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (y[static_cast<std::size_t>(i)] - y[static_cast<std::size_t>(j)]).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  return DissimilarityMatrix(std::move(d));
}

std::uint64_t choose3(std::uint64_t n) { return n < 3 ? 0 : n * (n - 1) * (n - 2) / 6; }

TripletUniverse enumerate_universe(std::size_t n, UniverseMode mode) {
  if (n < 3) throw std::invalid_argument("a triplet universe needs n >= 3");
  TripletUniverse u;
  u.mode = mode;
  u.n = n;
  u.triplets.reserve((mode == UniverseMode::kGeneral ? 3 : 1) * choose3(n));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      for (std::size_t c = b + 1; c < n; ++c) {
        if (mode == UniverseMode::kMldsValid) {
          u.triplets.push_back({b, a, c});
        } else {
          u.triplets.push_back({a, b, c});
          u.triplets.push_back({b, a, c});
          u.triplets.push_back({c, a, b});
        }
      }
  return u;
}

std::vector<Triplet> sample_triplets(const TripletUniverse& universe, double r, std::uint64_t seed) {
  if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("triplet fraction r must lie in (0,1]");
  // Round half up.
  const auto count = static_cast<std::size_t>(
      std::floor(r * static_cast<double>(choose3(universe.n)) + 0.5));
  if (count > universe.triplets.size())
    throw std::invalid_argument("requested " + std::to_string(count) +
                                " triplets from a universe of " +
                                std::to_string(universe.triplets.size()));
  std::vector<Triplet> pool = universe.triplets;
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots become a uniform sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

Responses simulate_responses(NoisyObserver& observer, const std::vector<Triplet>& triplets,
                             const std::vector<double>& stimuli) {
  Responses out;
  out.reserve(triplets.size());
  for (const auto& t : triplets) out.push_back(observer.answer(t, stimuli));
  return out;
}

TripletBudget triplet_budget(std::size_t n, int d) {
  if (n < 3) throw std::invalid_argument("triplet budget needs n >= 3");
  if (d < 1) throw std::invalid_argument("triplet budget needs d >= 1");
  const double base = static_cast<double>(d) * static_cast<double>(n) * std::log2(static_cast<double>(n));
  return {static_cast<std::uint64_t>(std::ceil(base)),
          static_cast<std::uint64_t>(std::ceil(2.0 * base))};
}

std::uint64_t nmds_sort_budget(std::size_t n) {
  if (n < 3) throw std::invalid_argument("sort budget needs n >= 3");
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  return static_cast<std::uint64_t>(std::llround(pairs * std::log2(pairs)));
}

}  // namespace tripscale
