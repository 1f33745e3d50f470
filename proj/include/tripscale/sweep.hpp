#pragma once

#include "tripscale/evaluation.hpp"
#include "tripscale/simulation.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace tripscale {

/// Parameters of a simulation sweep over noise level sigma and triplet
/// fraction r, repeated on independent data draws.
/// Which answers the per-run triplet error is computed on. kTraining scores
/// each engine on its own input (NMDS, fit on a matrix, on the general-mode
/// draw); kHoldout uses a fresh general-mode draw of the same size.
enum class ErrorSet { kTraining, kHoldout };

std::string to_string(ErrorSet e);
ErrorSet error_set_from_string(const std::string& name);

struct SweepConfig {
  ScalingFunctionSpec spec = ScalingFunctionSpec::sigmoid();
  std::size_t n = 10;
  std::vector<double> sigma_list{0.01, 0.05, 0.1, 0.5};
  std::vector<double> r_list{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<EngineKind> engines{EngineKind::kSte, EngineKind::kTste, EngineKind::kMlds,
                                  EngineKind::kNmds};
  int repetitions = 10;
  int restarts = 10;
  int max_iters = 1000;
  double tolerance = 1e-7;
  std::uint64_t seed = 0;
  ErrorSet error_set = ErrorSet::kTraining;

  void validate() const;
  /// Stimulus values: the table's own stimuli for tabulated specs, otherwise
  /// n uniform steps.
  std::vector<double> stimuli() const;
};

/// Overlays the keys present in `j` onto `base`.
SweepConfig sweep_config_from_json(const nlohmann::json& j, SweepConfig base = {});
nlohmann::json to_json(const SweepConfig& c);

struct RunRecord {
  std::string engine;
  double sigma = 0.0;
  double r = 0.0;
  int repetition = 0;
  /// Only for one-dimensional ground truth.
  std::optional<double> mse;
  double triplet_error = 0.0;
  std::vector<double> scale;  // normalized 1-D scale, empty for 2-D
};

struct SummaryRow {
  std::string engine;
  double sigma = 0.0;
  double r = 0.0;
  std::optional<double> mse;
  double triplet_error = 0.0;
};

struct SweepResult {
  std::vector<RunRecord> runs;
  std::vector<SummaryRow> means;
  std::vector<SummaryRow> stds;  // sample standard deviation, 0 for one repetition
  std::vector<std::string> warnings;
};

/// Runs every (engine, sigma, r, repetition) task. NMDS only runs at r = 1,
/// where its input is a full noisy dissimilarity matrix; its triplet error is
/// scored on the general-mode responses of the same draw. The other engines
/// report the triplet error on their own training responses.
SweepResult run_simulation(const SweepConfig& config, unsigned jobs = 1);

void write_runs_csv(std::ostream& out, const SweepResult& result);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

}  // namespace tripscale
