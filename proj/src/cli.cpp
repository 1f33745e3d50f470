#include "tripscale/cli.hpp"

#include "tripscale/ekman.hpp"
#include "tripscale/evaluation.hpp"
#include "tripscale/io.hpp"
#include "tripscale/mlds.hpp"
#include "tripscale/nmds.hpp"
#include "tripscale/server.hpp"
#include "tripscale/simulation.hpp"
#include "tripscale/ste.hpp"
#include "tripscale/sweep.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace tripscale::cli {
namespace fs = std::filesystem;

double round_significant(double value, int digits) {
  if (value == 0.0) return 0.0;
  const double magnitude = std::floor(std::log10(std::abs(value)));
  const double factor = std::pow(10.0, static_cast<double>(digits) - 1.0 - magnitude);
  return std::round(value * factor) / factor;
}

namespace {

struct Globals {
  std::uint64_t seed = 0;
  std::string config_path;
  std::string out_dir = ".";
  unsigned jobs = 1;
  bool to_stdout = false;
  nlohmann::json config = nlohmann::json::object();
};

/// Engine settings shared by embed / evaluate / sweep-dims.
struct EngineFlags {
  int dim = 1;
  int restarts = 10;
  int max_iters = 1000;
  double tolerance = 1e-7;
  double alpha = 1.0;
};

void add_engine_flags(CLI::App* cmd, EngineFlags& f, bool with_dim) {
  if (with_dim) cmd->add_option("--dim,-d", f.dim, "Embedding dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--restarts", f.restarts, "Random restarts per fit")->check(CLI::PositiveNumber);
  cmd->add_option("--max-iters", f.max_iters, "Iteration cap per restart")->check(CLI::PositiveNumber);
  cmd->add_option("--tolerance", f.tolerance, "Relative objective change threshold")->check(CLI::PositiveNumber);
  cmd->add_option("--alpha", f.alpha, "Student-t degrees of freedom (tste)")->check(CLI::PositiveNumber);
}

/// Flags given on the command line win; otherwise config-file keys apply.
template <typename T>
void overlay(const CLI::App* cmd, const char* flag, const nlohmann::json& config, const char* key, T& value) {
  const auto* opt = cmd->get_option_no_throw(flag);
  if ((opt == nullptr || opt->count() == 0) && config.contains(key)) value = config[key].get<T>();
}

void overlay_engine(const CLI::App* cmd, const nlohmann::json& config, EngineFlags& f) {
  overlay(cmd, "--dim", config, "dim", f.dim);
  overlay(cmd, "--restarts", config, "restarts", f.restarts);
  overlay(cmd, "--max-iters", config, "max_iters", f.max_iters);
  overlay(cmd, "--tolerance", config, "tolerance", f.tolerance);
  overlay(cmd, "--alpha", config, "alpha", f.alpha);
}

EngineConfig to_engine_config(const EngineFlags& f, std::uint64_t seed) {
  EngineConfig c;
  c.dim = f.dim;
  c.restarts = f.restarts;
  c.max_iters = f.max_iters;
  c.tolerance = f.tolerance;
  c.alpha = f.alpha;
  c.seed = seed;
  c.validate();
  return c;
}

Responses load_responses(const std::string& path, const std::string& labels, std::ostream& err,
                         std::size_t& n) {
  std::optional<StimulusSet> stimuli;
  if (labels == "slant") stimuli = io::slant_stimuli();
  else if (labels != "index") throw std::invalid_argument("--labels must be 'index' or 'slant'");
  auto all = io::read_responses_file(path, stimuli ? &*stimuli : nullptr);
  if (all.empty()) throw DataError(path + ": no response rows");
  auto answered = answered_only(all);
  if (answered.size() != all.size())
    err << "note: dropped " << (all.size() - answered.size()) << " unanswered rows\n";
  if (answered.empty()) throw DataError(path + ": no answered responses");
  n = stimuli ? stimuli->size() : max_stimulus_index(answered) + 1;
  return answered;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

fs::path out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.out_dir);
  return fs::path(g.out_dir) / name;
}

nlohmann::json report_json(const FitReport& r) {
  return {{"objective_trace_length", r.objective_trace_length},
          {"final_objective", r.final_objective},
          {"restart_objectives", r.restart_objectives},
          {"chosen_restart", r.chosen_restart}};
}

// ---- plan -----------------------------------------------------------------

int cmd_plan(std::size_t n, int d, std::ostream& out) {
  const auto budget = triplet_budget(n, d);
  const auto sort_budget = nmds_sort_budget(n);
  out << "n=" << n << " d=" << d << '\n';
  out << "universe_mlds_valid=" << choose3(n) << '\n';
  out << "universe_general=" << 3 * choose3(n) << '\n';
  out << "recommended_triplets=" << budget.single << " (~" << round_significant(static_cast<double>(budget.single), 2)
      << ")\n";
  out << "recommended_triplets_doubled=" << budget.doubled << " (~"
      << round_significant(static_cast<double>(budget.doubled), 2) << ")\n";
  out << "nmds_sort_comparisons=" << sort_budget << '\n';
  return kOk;
}

// ---- simulate ---------------------------------------------------------------

ScalingFunctionSpec spec_from_name(const std::string& name) {
  if (name == "color" || name == "ekman")
    return scaling_spec_from_json(io::read_json_file(default_color_ground_truth_path()));
  nlohmann::json j{{"kind", name}};
  return scaling_spec_from_json(j);
}

struct SimulateFlags {
  std::string spec = "sigmoid";
  std::string spec_file;
  std::size_t n = 10;
  std::vector<double> sigma;
  std::vector<double> r;
  std::vector<std::string> engines;
  int repetitions = 10;
  int restarts = 10;
  int max_iters = 1000;
  double tolerance = 1e-7;
  std::string error_on = "training";
};

int cmd_simulate(const CLI::App* cmd, const SimulateFlags& f, const Globals& g, std::ostream& out,
                 std::ostream& err) {
  SweepConfig c = sweep_config_from_json(g.config);
  if (cmd->count("--spec")) c.spec = spec_from_name(f.spec);
  if (cmd->count("--spec-file")) c.spec = scaling_spec_from_json(io::read_json_file(f.spec_file));
  if (cmd->count("--n")) c.n = f.n;
  if (cmd->count("--sigma")) c.sigma_list = f.sigma;
  if (cmd->count("--r")) c.r_list = f.r;
  if (cmd->count("--engines")) {
    c.engines.clear();
    for (const auto& e : f.engines) c.engines.push_back(engine_from_string(e));
  }
  if (cmd->count("--repetitions")) c.repetitions = f.repetitions;
  if (cmd->count("--restarts")) c.restarts = f.restarts;
  if (cmd->count("--max-iters")) c.max_iters = f.max_iters;
  if (cmd->count("--tolerance")) c.tolerance = f.tolerance;
  if (cmd->count("--error-on")) c.error_set = error_set_from_string(f.error_on);
  c.seed = g.seed;

  const auto result = run_simulation(c, g.jobs);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';

  std::ostringstream runs, means, stds;
  write_runs_csv(runs, result);
  write_summary_csv(means, result.means);
  write_summary_csv(stds, result.stds);
  write_text(out_path(g, "simulate_runs.csv"), runs.str());
  write_text(out_path(g, "simulate_mean.csv"), means.str());
  write_text(out_path(g, "simulate_std.csv"), stds.str());
  io::write_json_file(out_path(g, "simulate_config.json"), to_json(c));
  if (g.to_stdout) out << means.str();
  err << "wrote " << result.means.size() << " mean rows and " << result.stds.size() << " std rows to "
      << g.out_dir << '\n';
  return kOk;
}

// ---- embed / evaluate / sweep-dims -----------------------------------------

int cmd_embed(const std::string& responses_path, const std::string& engine_name, const std::string& labels,
              const EngineConfig& config, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto engine = engine_from_string(engine_name);
  std::size_t n = 0;
  const auto responses = load_responses(responses_path, labels, err, n);
  nlohmann::json embedding_json, report;
  switch (engine) {
    case EngineKind::kSte:
    case EngineKind::kTste: {
      const auto fit = engine == EngineKind::kSte ? fit_ste(responses, config, n) : fit_tste(responses, config, n);
      embedding_json = io::to_json(fit.embedding);
      report = report_json(fit.report);
      report["training_triplet_error"] = triplet_error(fit.embedding, responses);
      if (!fit.embedding.meta().unreferenced.empty())
        err << "warning: " << fit.embedding.meta().unreferenced.size()
            << " stimuli never appear in a response; placed at the centroid\n";
      break;
    }
    case EngineKind::kMlds: {
      if (config.dim != 1) throw std::invalid_argument("mlds embeds in one dimension only (--dim 1)");
      const bool valid = std::all_of(responses.begin(), responses.end(),
                                     [](const TripletResponse& r) { return is_mlds_valid(r.triplet); });
      if (!valid) err << "note: non-valid triplets present; fitting MLDS through the quadruplet model\n";
      const auto fit = valid ? fit_mlds(responses, config, n) : fit_mlds_any(responses, config, n);
      auto e = fit.embedding();
      e.meta().seed = config.seed;
      embedding_json = io::to_json(e);
      report = report_json(fit.report);
      report["sigma_hat"] = fit.scale.sigma_hat;
      report["loglik"] = fit.scale.loglik;
      report["training_triplet_error"] = triplet_error(e, responses);
      break;
    }
    case EngineKind::kNmds:
      throw std::invalid_argument("nmds needs a dissimilarity matrix; use simulate or ingest-ekman");
  }
  io::write_json_file(out_path(g, "embedding.json"), embedding_json);
  io::write_json_file(out_path(g, "fit_report.json"), report);
  if (g.to_stdout) out << embedding_json.dump(2) << '\n';
  err << engine_name << ": training triplet error " << report["training_triplet_error"].get<double>() << '\n';
  return kOk;
}

int cmd_evaluate(const std::string& responses_path, const std::vector<std::string>& engines,
                 const std::string& labels, const EngineConfig& config, int k, const Globals& g,
                 std::ostream& out, std::ostream& err) {
  std::size_t n = 0;
  const auto responses = load_responses(responses_path, labels, err, n);
  if (static_cast<std::size_t>(k) > responses.size())
    throw std::invalid_argument("k=" + std::to_string(k) + " exceeds the " + std::to_string(responses.size()) +
                                " answered responses");
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& name : engines) {
    const auto engine = engine_from_string(name);
    EngineConfig c = config;
    if (engine == EngineKind::kMlds) c.dim = 1;
    const auto report = cross_validated_triplet_error(responses, engine, c, k, g.seed, n, g.jobs);
    err << name << " d=" << c.dim << ": cv triplet error " << std::fixed << std::setprecision(4) << report.mean
        << " +- " << report.std << '\n'
        << std::defaultfloat;
    reports.push_back(to_json(report));
  }
  io::write_json_file(out_path(g, "cv_report.json"), reports);
  if (g.to_stdout) out << reports.dump(2) << '\n';
  return kOk;
}

int cmd_sweep_dims(const std::string& responses_path, const std::vector<std::string>& engine_names,
                   const std::string& labels, const EngineConfig& config, int dmin, int dmax, int k,
                   double slack, const Globals& g, std::ostream& out, std::ostream& err) {
  if (dmin > dmax) throw std::invalid_argument("--dmin must not exceed --dmax");
  std::size_t n = 0;
  const auto responses = load_responses(responses_path, labels, err, n);
  std::vector<EngineKind> engines;
  for (const auto& e : engine_names) engines.push_back(engine_from_string(e));
  std::vector<int> dims;
  for (int d = dmin; d <= dmax; ++d) dims.push_back(d);
  const auto sweep = dimension_sweep(responses, engines, dims, config, k, g.seed, n, slack, g.jobs);
  std::ostringstream csv;
  write_sweep_csv(csv, sweep);
  write_text(out_path(g, "dimension_sweep.csv"), csv.str());
  io::write_json_file(out_path(g, "dimension_sweep.json"), to_json(sweep));
  for (const auto& [engine, d] : sweep.recommended) err << engine << ": recommended d=" << d << '\n';
  if (g.to_stdout) out << csv.str();
  return kOk;
}

int cmd_floor(const std::string& responses_path, const Globals& g, std::ostream& out, std::ostream& err) {
  const auto floor = consistency_floor(io::read_responses_file(responses_path));
  io::write_json_file(out_path(g, "consistency_floor.json"), to_json(floor));
  err << "hard fraction " << floor.hard_fraction << ", expected error floor " << floor.floor << '\n';
  if (g.to_stdout) out << to_json(floor).dump(2) << '\n';
  return kOk;
}

int cmd_ingest(const std::string& similarity_path, const std::string& output, const EngineFlags& f,
               const Globals& g, std::ostream& out, std::ostream& err) {
  std::ifstream in(similarity_path);
  if (!in) throw DataError("cannot open " + similarity_path);
  const auto table = read_similarity_csv(in);
  EngineFlags flags = f;
  flags.dim = 2;
  const auto spec = ingest_color_similarity(table, to_engine_config(flags, g.seed));
  const fs::path target = output.empty() ? out_path(g, "ekman_ground_truth.json") : fs::path(output);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  io::write_json_file(target, to_json(spec));
  if (g.to_stdout) out << to_json(spec).dump(2) << '\n';
  err << "wrote " << spec.table.size() << "-point ground truth to " << target.string() << '\n';
  return kOk;
}

service::CollectionServer* g_server = nullptr;
void handle_signal(int) {
  if (g_server) g_server->stop();
}

int cmd_serve(const service::ServerOptions& options, std::ostream& err) {
  service::CollectionServer server(options);
  const int port = server.bind();
  err << "collection service on http://" << options.host << ':' << port << " (journal " << options.journal_dir
      << ")\n";
  g_server = &server;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);
  server.listen();
  g_server = nullptr;
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Perceptual scaling from triplet comparisons", "tripscale"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Master RNG seed");
  app.add_option("--config", g.config_path, "JSON config file (flags override it)");
  app.add_option("--out-dir", g.out_dir, "Directory for output files");
  app.add_option("--jobs", g.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--stdout", g.to_stdout, "Also print the main result to stdout");

  std::size_t plan_n = 0;
  int plan_d = 1;
  auto* plan = app.add_subcommand("plan", "Triplet budgets and universe sizes");
  plan->add_option("--n,-n", plan_n, "Number of stimuli")->required()->check(CLI::Range(3, 1 << 20));
  plan->add_option("--d,-d", plan_d, "Embedding dimension")->check(CLI::PositiveNumber);

  SimulateFlags sim;
  auto* simulate = app.add_subcommand("simulate", "Simulation sweep over sigma, r and engines");
  simulate->add_option("--spec", sim.spec, "sigmoid | poly2 | sinusoid | poly3_conditional | color");
  simulate->add_option("--spec-file", sim.spec_file, "Scaling function JSON (e.g. ingested ground truth)");
  simulate->add_option("--n", sim.n, "Stimulus count (analytic specs)");
  simulate->add_option("--sigma", sim.sigma, "Noise levels")->delimiter(',');
  simulate->add_option("--r", sim.r, "Triplet fractions")->delimiter(',');
  simulate->add_option("--engines", sim.engines, "Engines (ste,tste,mlds,nmds)")->delimiter(',');
  simulate->add_option("--repetitions", sim.repetitions, "Independent data draws");
  simulate->add_option("--restarts", sim.restarts, "Random restarts per fit");
  simulate->add_option("--max-iters", sim.max_iters, "Iteration cap per restart");
  simulate->add_option("--tolerance", sim.tolerance, "Relative objective change threshold");
  simulate->add_option("--error-on", sim.error_on, "Triplet error set: training | holdout");

  std::string responses_path, engine_name = "tste", labels = "index";
  std::vector<std::string> engine_list{"tste"};
  EngineFlags ef;
  int k = 10;
  auto* embed = app.add_subcommand("embed", "Fit one engine to a response file");
  embed->add_option("responses", responses_path, "Response CSV")->required();
  embed->add_option("--engine,-e", engine_name, "ste | tste | mlds");
  embed->add_option("--labels", labels, "Stimulus column format: index | slant");
  add_engine_flags(embed, ef, true);

  auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validated triplet error");
  evaluate->add_option("responses", responses_path, "Response CSV")->required();
  evaluate->add_option("--engines,--engine,-e", engine_list, "Engines")->delimiter(',');
  evaluate->add_option("--labels", labels, "Stimulus column format: index | slant");
  evaluate->add_option("--k", k, "Folds")->check(CLI::Range(2, 1 << 20));
  add_engine_flags(evaluate, ef, true);

  int dmin = 1, dmax = 8;
  double slack = 0.01;
  auto* sweep = app.add_subcommand("sweep-dims", "Cross-validated error across embedding dimensions");
  sweep->add_option("responses", responses_path, "Response CSV")->required();
  sweep->add_option("--engines,-e", engine_list, "Engines")->delimiter(',');
  sweep->add_option("--labels", labels, "Stimulus column format: index | slant");
  sweep->add_option("--dmin", dmin, "Smallest dimension")->check(CLI::PositiveNumber);
  sweep->add_option("--dmax", dmax, "Largest dimension")->check(CLI::PositiveNumber);
  sweep->add_option("--k", k, "Folds")->check(CLI::Range(2, 1 << 20));
  sweep->add_option("--slack", slack, "Tolerance for the smallest-acceptable-dimension rule");
  add_engine_flags(sweep, ef, false);

  auto* floor = app.add_subcommand("floor", "Hard-triplet fraction and error floor from repeated questions");
  floor->add_option("responses", responses_path, "Response CSV")->required();

  std::string similarity_path = default_color_similarity_path(), ingest_output;
  auto* ingest = app.add_subcommand("ingest-ekman", "Build the 2-D color ground truth from similarity data");
  ingest->add_option("similarity", similarity_path, "Similarity CSV (header row of wavelengths)");
  ingest->add_option("--output,-o", ingest_output, "Output JSON (default <out-dir>/ekman_ground_truth.json)");
  add_engine_flags(ingest, ef, false);

  service::ServerOptions server_options;
  std::string journal_dir = "journal", assets_dir;
  auto* serve = app.add_subcommand("serve", "Run the triplet collection HTTP service");
  serve->add_option("--host", server_options.host, "Bind address");
  serve->add_option("--port", server_options.port, "Port (0 picks a free one)");
  serve->add_option("--journal-dir", journal_dir, "Session journal directory");
  serve->add_option("--assets-dir", assets_dir, "Static stimulus directory served under /assets");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kUsage;
  }

  try {
    if (!g.config_path.empty()) g.config = io::read_json_file(g.config_path);
    auto sub = app.get_subcommands().front();
    if (sub != simulate && sub != plan) {
      overlay_engine(sub, g.config, ef);
      overlay(sub, "--k", g.config, "k", k);
    }
    if (!app.count("--seed") && g.config.contains("seed")) g.seed = g.config["seed"].get<std::uint64_t>();

    if (sub == plan) return cmd_plan(plan_n, plan_d, out);
    if (sub == simulate) return cmd_simulate(simulate, sim, g, out, err);
    if (sub == embed) return cmd_embed(responses_path, engine_name, labels, to_engine_config(ef, g.seed), g, out, err);
    if (sub == evaluate) return cmd_evaluate(responses_path, engine_list, labels, to_engine_config(ef, g.seed), k, g, out, err);
    if (sub == sweep) {
      overlay(sweep, "--dmin", g.config, "dmin", dmin);
      overlay(sweep, "--dmax", g.config, "dmax", dmax);
      return cmd_sweep_dims(responses_path, engine_list, labels, to_engine_config(ef, g.seed), dmin, dmax, k, slack, g,
                            out, err);
    }
    if (sub == floor) return cmd_floor(responses_path, g, out, err);
    if (sub == ingest) return cmd_ingest(similarity_path, ingest_output, ef, g, out, err);
    if (sub == serve) {
      server_options.journal_dir = journal_dir;
      if (!assets_dir.empty()) server_options.assets_dir = assets_dir;
      return cmd_serve(server_options, err);
    }
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const nlohmann::json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
  return kUsage;
}

}  // namespace tripscale::cli
