#pragma once

#include "tripscale/core.hpp"
#include "tripscale/metrics.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tripscale {

enum class EngineKind { kSte, kTste, kMlds, kNmds };

std::string to_string(EngineKind kind);
EngineKind engine_from_string(const std::string& name);

/// Fits a triplet-consuming engine (ste, tste, mlds) and returns its embedding.
/// MLDS is one-dimensional; it takes the strict valid-triplet route when every
/// triplet is of the form (j;i,k), i<j<k, and the quadruplet route otherwise.
/// NMDS does not consume triplets and is rejected with std::invalid_argument.
Embedding fit_engine(EngineKind engine, const Responses& responses, const EngineConfig& config,
                     std::size_t n);

struct CvReport {
  int k = 0;
  std::vector<double> fold_errors;
  double mean = 0.0;
  /// Sample standard deviation (n - 1 denominator).
  double std = 0.0;
  std::string engine;
  int dim = 0;
};

/// Fold assignment for `count` items: shuffled with `seed`, cut into k
/// contiguous chunks whose sizes differ by at most one.
std::vector<std::vector<std::size_t>> make_folds(std::size_t count, int k, std::uint64_t seed);

/// k-fold cross-validated triplet error. Folds are fit with seeds derived
/// from config.seed and run on up to `jobs` threads.
CvReport cross_validated_triplet_error(const Responses& responses, EngineKind engine,
                                       const EngineConfig& config, int k, std::uint64_t seed,
                                       std::size_t n = 0, unsigned jobs = 1);

struct SweepEntry {
  std::string engine;
  int dim = 0;
  /// Empty when the engine cannot embed in this dimension (MLDS beyond d = 1).
  std::optional<CvReport> report;
};

struct DimensionSweep {
  std::vector<int> dims;
  std::vector<SweepEntry> entries;
  /// Smallest d whose mean error is within `slack` of the engine's best.
  std::map<std::string, int> recommended;
  double slack = 0.01;
};

DimensionSweep dimension_sweep(const Responses& responses, const std::vector<EngineKind>& engines,
                               const std::vector<int>& dims, const EngineConfig& config, int k,
                               std::uint64_t seed, std::size_t n = 0, double slack = 0.01,
                               unsigned jobs = 1);

struct ConsistencyFloor {
  std::size_t repeated_triplets = 0;
  std::size_t hard_triplets = 0;
  double hard_fraction = 0.0;
  /// hard_fraction / 2: guessing on hard questions is wrong half the time.
  double floor = 0.0;
};

/// Groups answered responses by canonical triplet id; questions with at least
/// two answers are "repeated", and repeated ones with mixed answers are "hard".
ConsistencyFloor consistency_floor(const Responses& responses);

nlohmann::json to_json(const CvReport& r);
nlohmann::json to_json(const DimensionSweep& s);
nlohmann::json to_json(const ConsistencyFloor& f);

/// Long-format table: engine,d,fold,error. Inapplicable entries get one NA row.
void write_sweep_csv(std::ostream& out, const DimensionSweep& s);

}  // namespace tripscale
