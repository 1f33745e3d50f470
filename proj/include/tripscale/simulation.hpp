#pragma once

#include "tripscale/core.hpp"
#include "tripscale/random.hpp"

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include <map>
#include <string>
#include <vector>

namespace tripscale {

enum class ScalingKind { kSigmoid, kPoly2, kSinusoid, kPoly3Conditional, kTabulated2d };

std::string to_string(ScalingKind kind);
ScalingKind scaling_kind_from_string(const std::string& name);

/// One row of a tabulated ground truth: stimulus value and its percept.
struct TableEntry {
  double stimulus = 0.0;
  std::string label;
  Eigen::VectorXd point;
};

/// Ground-truth scaling function f: (0,1) -> [0,1]^dim.
///
///   sigmoid            1/(1+exp(-gamma (s-0.5))), rescaled so f(0)=0, f(1)=1
///   poly2              (s-vertex)^2 divided by its supremum on (0,1)
///   sinusoid           0.5 + 0.5 sin(2 pi s)
///   poly3_conditional  0.5 + 4 (s-0.5)^3 (monotone, flat at the midpoint)
///   tabulated_2d       piecewise-linear through `table`, clamped at the ends
struct ScalingFunctionSpec {
  ScalingKind kind = ScalingKind::kSigmoid;
  double gamma = 10.0;
  double vertex = 0.5;
  std::vector<TableEntry> table;

  static ScalingFunctionSpec sigmoid(double gamma = 10.0);
  static ScalingFunctionSpec poly2(double vertex = 0.5);
  static ScalingFunctionSpec sinusoid();
  static ScalingFunctionSpec poly3_conditional();
  /// Table entries are sorted by stimulus; stimuli must lie in (0,1).
  static ScalingFunctionSpec tabulated(std::vector<TableEntry> table);

  int dim() const;
  /// Stimulus values of the table rows (tabulated kind only).
  std::vector<double> table_stimuli() const;
};

Eigen::VectorXd eval_scaling(const ScalingFunctionSpec& spec, double s);

/// Wavelength in nm to stimulus value in (0,1): (w - 400) / 300.
double wavelength_to_stimulus(double wavelength_nm);

/// JSON forms. Analytic kinds: {"kind": ..., "gamma"|"vertex": ...}.
/// Tabulated: {"kind": "tabulated_2d", "table": {"<wavelength>": [x, y], ...}}.
nlohmann::json to_json(const ScalingFunctionSpec& spec);
ScalingFunctionSpec scaling_spec_from_json(const nlohmann::json& j);

/// n equally spaced stimuli (i + 0.5) / n.
std::vector<double> uniform_stimuli(std::size_t n);

/// f evaluated at each stimulus, one row per stimulus.
Eigen::MatrixXd true_percepts(const ScalingFunctionSpec& spec, const std::vector<double>& stimuli);

enum class TiePolicy { kRandom, kFixedPlus };

/// Simulated observer answering from f(S) + N(0, sigma^2 I), with fresh
/// noise for every question asked.
class NoisyObserver {
 public:
  NoisyObserver(ScalingFunctionSpec spec, double sigma, std::uint64_t seed,
                TiePolicy tie_policy = TiePolicy::kRandom);

  const ScalingFunctionSpec& spec() const { return spec_; }
  double sigma() const { return sigma_; }

  TripletResponse answer(const Triplet& t, const std::vector<double>& stimuli);

  /// One noisy percept per stimulus, shared by all pairs.
  DissimilarityMatrix noisy_dissimilarities(const std::vector<double>& stimuli);

 private:
  Eigen::VectorXd percept(std::size_t index, const std::vector<double>& stimuli);

  ScalingFunctionSpec spec_;
  double sigma_;
  TiePolicy tie_policy_;
  Rng rng_;
};

inline TripletResponse simulate_answer(NoisyObserver& observer, const Triplet& t,
                                       const std::vector<double>& stimuli) {
  return observer.answer(t, stimuli);
}

enum class UniverseMode { kMldsValid, kGeneral };

struct TripletUniverse {
  UniverseMode mode = UniverseMode::kGeneral;
  std::size_t n = 0;
  std::vector<Triplet> triplets;
};

std::uint64_t choose3(std::uint64_t n);

/// mlds_valid: (j; i, k) for every i < j < k. general: for every trio
/// a < b < c the three questions (a; b, c), (b; a, c), (c; a, b).
/// Lexicographic in the sorted trio.
TripletUniverse enumerate_universe(std::size_t n, UniverseMode mode);

/// round(r * C(n,3)) triplets drawn uniformly without replacement.
std::vector<Triplet> sample_triplets(const TripletUniverse& universe, double r, std::uint64_t seed);

/// Answers every triplet in order with the observer.
Responses simulate_responses(NoisyObserver& observer, const std::vector<Triplet>& triplets,
                             const std::vector<double>& stimuli);

struct TripletBudget {
  std::uint64_t single = 0;  // ceil(d n log2 n)
  std::uint64_t doubled = 0; // ceil(2 d n log2 n)
};

TripletBudget triplet_budget(std::size_t n, int d);

/// round(C(n,2) log2 C(n,2)): comparisons to sort all pairwise distances.
std::uint64_t nmds_sort_budget(std::size_t n);

}  // namespace tripscale
