#include "tripscale/sweep.hpp"

#include "tripscale/io.hpp"
#include "tripscale/mlds.hpp"
#include "tripscale/nmds.hpp"
#include "tripscale/parallel.hpp"
#include "tripscale/random.hpp"
#include "tripscale/ste.hpp"

#include <cmath>
#include <map>
#include <ostream>

namespace tripscale {
namespace {

enum Purpose : std::uint64_t { kSampleGeneral, kAnswerGeneral, kSampleValid, kAnswerValid, kDissim, kFit, kSampleHoldout, kAnswerHoldout };

std::uint64_t task_key(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d,
                       std::uint64_t purpose) {
  return mix64(mix64(mix64(mix64(a) ^ b) ^ c) ^ d) ^ (purpose * 0x9e3779b97f4a7c15ULL);
}

bool is_full(double r) { return std::abs(r - 1.0) < 1e-12; }

struct Task {
  EngineKind engine;
  std::size_t sigma_index, r_index;
  int repetition;
};

}  // namespace

std::string to_string(ErrorSet e) { return e == ErrorSet::kTraining ? "training" : "holdout"; }

ErrorSet error_set_from_string(const std::string& name) {
  if (name == "training") return ErrorSet::kTraining;
  if (name == "holdout") return ErrorSet::kHoldout;
  throw std::invalid_argument("error set must be 'training' or 'holdout', got '" + name + "'");
}

void SweepConfig::validate() const {
  if (sigma_list.empty() || r_list.empty() || engines.empty())
    throw std::invalid_argument("sweep lists must be nonempty");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (restarts < 1) throw std::invalid_argument("restarts must be >= 1");
  for (double s : sigma_list)
    if (!(s >= 0.0)) throw std::invalid_argument("sigma values must be >= 0");
  for (double r : r_list)
    if (!(r > 0.0 && r <= 1.0)) throw std::invalid_argument("r values must lie in (0,1]");
  if (spec.kind != ScalingKind::kTabulated2d && n < 3)
    throw std::invalid_argument("n must be >= 3");
}

std::vector<double> SweepConfig::stimuli() const {
  if (spec.kind == ScalingKind::kTabulated2d) return spec.table_stimuli();
  return uniform_stimuli(n);
}

SweepConfig sweep_config_from_json(const nlohmann::json& j, SweepConfig c) {
  try {
    if (j.contains("spec")) c.spec = scaling_spec_from_json(j["spec"]);
    if (j.contains("n")) c.n = j["n"].get<std::size_t>();
    if (j.contains("sigma_list")) c.sigma_list = j["sigma_list"].get<std::vector<double>>();
    if (j.contains("r_list")) c.r_list = j["r_list"].get<std::vector<double>>();
    if (j.contains("engines")) {
      c.engines.clear();
      for (const auto& e : j["engines"]) c.engines.push_back(engine_from_string(e.get<std::string>()));
    }
    if (j.contains("repetitions")) c.repetitions = j["repetitions"].get<int>();
    if (j.contains("restarts")) c.restarts = j["restarts"].get<int>();
    if (j.contains("max_iters")) c.max_iters = j["max_iters"].get<int>();
    if (j.contains("tolerance")) c.tolerance = j["tolerance"].get<double>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("triplet_error_on")) c.error_set = error_set_from_string(j["triplet_error_on"].get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("sweep config: ") + e.what());
  }
  return c;
}

nlohmann::json to_json(const SweepConfig& c) {
  std::vector<std::string> engines;
  for (auto e : c.engines) engines.push_back(to_string(e));
  return {{"spec", to_json(c.spec)},         {"n", c.n},
          {"sigma_list", c.sigma_list},      {"r_list", c.r_list},
          {"engines", engines},              {"repetitions", c.repetitions},
          {"restarts", c.restarts},          {"max_iters", c.max_iters},
          {"tolerance", c.tolerance},        {"seed", c.seed},
          {"triplet_error_on", to_string(c.error_set)}};
}

SweepResult run_simulation(const SweepConfig& config, unsigned jobs) {
  config.validate();
  const auto stimuli = config.stimuli();
  const std::size_t n = stimuli.size();
  const Eigen::MatrixXd truth = true_percepts(config.spec, stimuli);
  const bool one_d = config.spec.dim() == 1;
  std::vector<double> psi_true;
  if (one_d) psi_true.assign(truth.data(), truth.data() + truth.rows());

  SweepResult result;
  std::vector<Task> tasks;
  for (auto engine : config.engines) {
    bool any = false;
    for (std::size_t si = 0; si < config.sigma_list.size(); ++si)
      for (std::size_t ri = 0; ri < config.r_list.size(); ++ri) {
        if (engine == EngineKind::kNmds && !is_full(config.r_list[ri])) continue;
        any = true;
        for (int rep = 0; rep < config.repetitions; ++rep) tasks.push_back({engine, si, ri, rep});
      }
    if (engine == EngineKind::kNmds) {
      for (double r : config.r_list)
        if (!is_full(r))
          result.warnings.push_back("nmds skipped at r=" + io::format_double(r) +
                                    ": it needs the full dissimilarity matrix (r=1)");
      if (!any) result.warnings.push_back("nmds produced no rows: r_list does not contain 1");
    }
  }

  const auto general = enumerate_universe(n, UniverseMode::kGeneral);
  const auto valid = enumerate_universe(n, UniverseMode::kMldsValid);

  auto general_responses = [&](const Task& t) {
    const double sigma = config.sigma_list[t.sigma_index];
    const double r = config.r_list[t.r_index];
    const auto rep = static_cast<std::uint64_t>(t.repetition);
    const auto triplets = sample_triplets(
        general, r, derive_seed(config.seed, task_key(t.sigma_index, t.r_index, rep, 0, kSampleGeneral)));
    NoisyObserver observer(config.spec, sigma,
                           derive_seed(config.seed, task_key(t.sigma_index, t.r_index, rep, 0, kAnswerGeneral)));
    return simulate_responses(observer, triplets, stimuli);
  };

  auto holdout_responses = [&](const Task& t) {
    const double sigma = config.sigma_list[t.sigma_index];
    const double r = config.r_list[t.r_index];
    const auto rep = static_cast<std::uint64_t>(t.repetition);
    const auto triplets = sample_triplets(
        general, r, derive_seed(config.seed, task_key(t.sigma_index, t.r_index, rep, 0, kSampleHoldout)));
    NoisyObserver observer(config.spec, sigma,
                           derive_seed(config.seed, task_key(t.sigma_index, t.r_index, rep, 0, kAnswerHoldout)));
    return simulate_responses(observer, triplets, stimuli);
  };
  const bool holdout = config.error_set == ErrorSet::kHoldout;

  result.runs.resize(tasks.size());
  parallel_for(tasks.size(), jobs, [&](std::size_t idx) {
    const Task& t = tasks[idx];
    const double sigma = config.sigma_list[t.sigma_index];
    const double r = config.r_list[t.r_index];
    const auto rep = static_cast<std::uint64_t>(t.repetition);
    EngineConfig ec;
    ec.dim = config.spec.dim();
    ec.restarts = config.restarts;
    ec.max_iters = config.max_iters;
    ec.tolerance = config.tolerance;
    ec.seed = derive_seed(config.seed, task_key(static_cast<std::uint64_t>(t.engine), t.sigma_index,
                                                t.r_index, rep, kFit));

    RunRecord rec;
    rec.engine = to_string(t.engine);
    rec.sigma = sigma;
    rec.r = r;
    rec.repetition = t.repetition;
    std::optional<Embedding> embedding;
    switch (t.engine) {
      case EngineKind::kSte:
      case EngineKind::kTste: {
        const auto responses = general_responses(t);
        embedding = fit_engine(t.engine, responses, ec, n);
        rec.triplet_error = triplet_error(*embedding, holdout ? holdout_responses(t) : responses);
        break;
      }
      case EngineKind::kMlds: {
        ec.dim = 1;
        Responses responses;
        if (config.spec.dim() == 1) {
          const auto triplets = sample_triplets(
              valid, r, derive_seed(config.seed, task_key(t.sigma_index, t.r_index, rep, 0, kSampleValid)));
          NoisyObserver observer(config.spec, sigma,
                                 derive_seed(config.seed, task_key(t.sigma_index, t.r_index, rep, 0, kAnswerValid)));
          responses = simulate_responses(observer, triplets, stimuli);
          embedding = fit_mlds(responses, ec, n).embedding();
        } else {
          // No monotone stimulus ordering to lean on: same draw as STE/t-STE.
          responses = general_responses(t);
          embedding = fit_mlds_any(responses, ec, n).embedding();
        }
        rec.triplet_error = triplet_error(*embedding, holdout ? holdout_responses(t) : responses);
        break;
      }
      case EngineKind::kNmds: {
        NoisyObserver observer(config.spec, sigma,
                               derive_seed(config.seed, task_key(t.sigma_index, 0, rep, 0, kDissim)));
        const auto delta = observer.noisy_dissimilarities(stimuli);
        embedding = fit_nmds(delta, ec).embedding;
        rec.triplet_error = triplet_error(*embedding, holdout ? holdout_responses(t) : general_responses(t));
        break;
      }
    }
    if (one_d) {
      const auto coords = embedding->coordinates_1d();
      rec.scale = normalize_scale_1d(coords, psi_true);
      rec.mse = mse_1d(rec.scale, psi_true);
    }
    result.runs[idx] = std::move(rec);
  });

  // Aggregate in task order, which is fixed by the config.
  std::map<std::tuple<std::size_t, std::size_t, std::size_t>, std::vector<const RunRecord*>> groups;
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t>> order;
  for (std::size_t idx = 0; idx < tasks.size(); ++idx) {
    const auto key = std::make_tuple(static_cast<std::size_t>(tasks[idx].engine), tasks[idx].sigma_index,
                                     tasks[idx].r_index);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) order.push_back(key);
    it->second.push_back(&result.runs[idx]);
  }
  for (const auto& key : order) {
    const auto& runs = groups[key];
    const double count = static_cast<double>(runs.size());
    SummaryRow mean{runs.front()->engine, runs.front()->sigma, runs.front()->r, std::nullopt, 0.0};
    SummaryRow sd = mean;
    double mse_sum = 0.0, err_sum = 0.0;
    for (const auto* run : runs) {
      err_sum += run->triplet_error;
      if (run->mse) mse_sum += *run->mse;
    }
    mean.triplet_error = err_sum / count;
    if (one_d) mean.mse = mse_sum / count;
    double mse_ss = 0.0, err_ss = 0.0;
    for (const auto* run : runs) {
      err_ss += (run->triplet_error - mean.triplet_error) * (run->triplet_error - mean.triplet_error);
      if (run->mse) mse_ss += (*run->mse - *mean.mse) * (*run->mse - *mean.mse);
    }
    const double denom = count > 1.0 ? count - 1.0 : 1.0;
    sd.triplet_error = std::sqrt(err_ss / denom);
    if (one_d) sd.mse = std::sqrt(mse_ss / denom);
    result.means.push_back(std::move(mean));
    result.stds.push_back(std::move(sd));
  }
  return result;
}

void write_runs_csv(std::ostream& out, const SweepResult& result) {
  out << "engine,sigma,r,repetition,mse,triplet_error,scale\n";
  for (const auto& run : result.runs) {
    out << run.engine << ',' << io::format_double(run.sigma) << ',' << io::format_double(run.r) << ','
        << run.repetition << ',' << (run.mse ? io::format_double(*run.mse) : "NA") << ','
        << io::format_double(run.triplet_error) << ',';
    for (std::size_t i = 0; i < run.scale.size(); ++i)
      out << (i ? ";" : "") << io::format_double(run.scale[i]);
    if (run.scale.empty()) out << "NA";
    out << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "engine,sigma,r,mse,triplet_error\n";
  for (const auto& row : rows)
    out << row.engine << ',' << io::format_double(row.sigma) << ',' << io::format_double(row.r) << ','
        << (row.mse ? io::format_double(*row.mse) : "NA") << ',' << io::format_double(row.triplet_error)
        << '\n';
}

}  // namespace tripscale
