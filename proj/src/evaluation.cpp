#include "tripscale/evaluation.hpp"

#include "tripscale/io.hpp"
#include "tripscale/mlds.hpp"
#include "tripscale/parallel.hpp"
#include "tripscale/random.hpp"
#include "tripscale/ste.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <unordered_map>

namespace tripscale {

std::string to_string(EngineKind kind) {
  switch (kind) {
    case EngineKind::kSte: return "ste";
    case EngineKind::kTste: return "tste";
    case EngineKind::kMlds: return "mlds";
    case EngineKind::kNmds: return "nmds";
  }
  return "unknown";
}

EngineKind engine_from_string(const std::string& name) {
  for (auto k : {EngineKind::kSte, EngineKind::kTste, EngineKind::kMlds, EngineKind::kNmds})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown engine '" + name + "'");
}

Embedding fit_engine(EngineKind engine, const Responses& responses, const EngineConfig& config,
                     std::size_t n) {
  switch (engine) {
    case EngineKind::kSte: return fit_ste(responses, config, n).embedding;
    case EngineKind::kTste: return fit_tste(responses, config, n).embedding;
    case EngineKind::kMlds: {
      if (config.dim != 1) throw std::invalid_argument("mlds embeds in one dimension only");
      const bool valid = std::all_of(responses.begin(), responses.end(),
                                     [](const TripletResponse& r) { return is_mlds_valid(r.triplet); });
      auto fit = valid ? fit_mlds(responses, config, n) : fit_mlds_any(responses, config, n);
      auto e = fit.embedding();
      e.meta().seed = config.seed;
      return e;
    }
    case EngineKind::kNmds:
      throw std::invalid_argument("nmds consumes a dissimilarity matrix, not triplets");
  }
  throw std::invalid_argument("unknown engine");
}

std::vector<std::vector<std::size_t>> make_folds(std::size_t count, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("cross-validation needs k >= 2");
  if (count < static_cast<std::size_t>(k))
    throw std::invalid_argument("cannot split " + std::to_string(count) + " responses into " +
                                std::to_string(k) + " folds");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
  const std::size_t base = count / static_cast<std::size_t>(k);
  const std::size_t extra = count % static_cast<std::size_t>(k);
  std::size_t pos = 0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const std::size_t size = base + (f < extra ? 1 : 0);
    folds[f].assign(order.begin() + static_cast<std::ptrdiff_t>(pos),
                    order.begin() + static_cast<std::ptrdiff_t>(pos + size));
    pos += size;
  }
  return folds;
}

CvReport cross_validated_triplet_error(const Responses& responses, EngineKind engine,
                                       const EngineConfig& config, int k, std::uint64_t seed,
                                       std::size_t n, unsigned jobs) {
  config.validate();
  for (const auto& r : responses)
    if (!r.answered()) throw DataError("cross-validation input contains unanswered responses");
  const auto folds = make_folds(responses.size(), k, seed);
  if (n == 0) n = max_stimulus_index(responses) + 1;

  CvReport report;
  report.k = k;
  report.engine = to_string(engine);
  report.dim = config.dim;
  report.fold_errors.assign(folds.size(), 0.0);
  parallel_for(folds.size(), jobs, [&](std::size_t f) {
    std::vector<bool> held_out(responses.size(), false);
    for (auto idx : folds[f]) held_out[idx] = true;
    Responses train, validation;
    for (std::size_t i = 0; i < responses.size(); ++i)
      (held_out[i] ? validation : train).push_back(responses[i]);
    EngineConfig fold_config = config;
    fold_config.seed = derive_seed(config.seed, f);
    const auto embedding = fit_engine(engine, train, fold_config, n);
    report.fold_errors[f] = triplet_error(embedding, validation);
  });
  const double kd = static_cast<double>(k);
  report.mean = std::accumulate(report.fold_errors.begin(), report.fold_errors.end(), 0.0) / kd;
  double ss = 0.0;
  for (double e : report.fold_errors) ss += (e - report.mean) * (e - report.mean);
  report.std = std::sqrt(ss / (kd - 1.0));
  return report;
}

DimensionSweep dimension_sweep(const Responses& responses, const std::vector<EngineKind>& engines,
                               const std::vector<int>& dims, const EngineConfig& config, int k,
                               std::uint64_t seed, std::size_t n, double slack, unsigned jobs) {
  if (dims.empty()) throw std::invalid_argument("dimension sweep needs at least one dimension");
  if (engines.empty()) throw std::invalid_argument("dimension sweep needs at least one engine");
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i] < 1) throw std::invalid_argument("dimensions must be >= 1");
    if (i > 0 && dims[i] <= dims[i - 1]) throw std::invalid_argument("dimensions must be strictly increasing");
  }
  if (n == 0) n = max_stimulus_index(responses) + 1;

  DimensionSweep sweep;
  sweep.dims = dims;
  sweep.slack = slack;
  for (auto engine : engines) {
    for (int d : dims) {
      SweepEntry entry{to_string(engine), d, std::nullopt};
      if (engine == EngineKind::kNmds)
        throw std::invalid_argument("nmds cannot be cross-validated on triplets");
      if (!(engine == EngineKind::kMlds && d > 1)) {
        EngineConfig c = config;
        c.dim = d;
        entry.report = cross_validated_triplet_error(responses, engine, c, k, seed, n, jobs);
      }
      sweep.entries.push_back(std::move(entry));
    }
    double best = std::numeric_limits<double>::infinity();
    for (const auto& e : sweep.entries)
      if (e.engine == to_string(engine) && e.report) best = std::min(best, e.report->mean);
    for (const auto& e : sweep.entries)
      if (e.engine == to_string(engine) && e.report && e.report->mean <= best + slack) {
        sweep.recommended[e.engine] = e.dim;
        break;
      }
  }
  return sweep;
}

ConsistencyFloor consistency_floor(const Responses& responses) {
  std::unordered_map<std::string, std::pair<int, int>> votes;  // (+1 count, -1 count)
  std::vector<std::string> order;
  for (const auto& r : responses) {
    if (!r.answered()) continue;
    const auto id = canonical_triplet_id(r.triplet);
    auto [it, inserted] = votes.try_emplace(id, 0, 0);
    if (inserted) order.push_back(id);
    (r.answer == Answer::kOpt1 ? it->second.first : it->second.second)++;
  }
  ConsistencyFloor out;
  for (const auto& id : order) {
    const auto [plus, minus] = votes[id];
    if (plus + minus < 2) continue;
    ++out.repeated_triplets;
    if (plus > 0 && minus > 0) ++out.hard_triplets;
  }
  if (out.repeated_triplets == 0) throw DataError("no triplet was answered at least twice");
  out.hard_fraction = static_cast<double>(out.hard_triplets) / static_cast<double>(out.repeated_triplets);
  out.floor = out.hard_fraction / 2.0;
  return out;
}

nlohmann::json to_json(const CvReport& r) {
  return {{"k", r.k}, {"fold_errors", r.fold_errors}, {"mean", r.mean},
          {"std", r.std}, {"engine", r.engine},       {"dim", r.dim}};
}

nlohmann::json to_json(const DimensionSweep& s) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& e : s.entries) {
    if (e.report) {
      reports.push_back(to_json(*e.report));
    } else {
      reports.push_back({{"engine", e.engine}, {"dim", e.dim}, {"status", "not applicable"}});
    }
  }
  return {{"dims", s.dims}, {"slack", s.slack}, {"reports", std::move(reports)},
          {"recommended", s.recommended}};
}

nlohmann::json to_json(const ConsistencyFloor& f) {
  return {{"repeated_triplets", f.repeated_triplets},
          {"hard_triplets", f.hard_triplets},
          {"hard_fraction", f.hard_fraction},
          {"floor", f.floor}};
}

void write_sweep_csv(std::ostream& out, const DimensionSweep& s) {
  out << "engine,d,fold,error\n";
  for (const auto& e : s.entries) {
    if (!e.report) {
      out << e.engine << ',' << e.dim << ",NA,NA\n";
      continue;
    }
    for (std::size_t f = 0; f < e.report->fold_errors.size(); ++f)
      out << e.engine << ',' << e.dim << ',' << f << ',' << io::format_double(e.report->fold_errors[f])
          << '\n';
  }
}

}  // namespace tripscale
