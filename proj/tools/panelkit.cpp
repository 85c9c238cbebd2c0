// Command-line front end: ingestion, resampling metrics, decision reports,
// differential diagnostics, scenario simulation, and theory verification.
// One command per process; every command writes a manifest next to its
// outputs so a run can be reproduced from the manifest alone.

#include <CLI11.hpp>
#include <json.hpp>

#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "panelkit/analytics.hpp"
#include "panelkit/annotator.hpp"
#include "panelkit/bootstrap.hpp"
#include "panelkit/data.hpp"
#include "panelkit/dpt.hpp"
#include "panelkit/errors.hpp"
#include "panelkit/report_io.hpp"
#include "panelkit/rng.hpp"
#include "panelkit/scenarios.hpp"
#include "panelkit/stats.hpp"

namespace {

using nlohmann::json;
namespace fs = std::filesystem;
using namespace panelkit;

// Files a command writes, closed out by the manifest. The manifest config
// deliberately excludes the output directory and thread count: neither
// affects a single output byte, so runs that differ only there produce
// identical manifests and identical files.
class OutputDir {
 public:
  explicit OutputDir(const std::string& dir) : dir_(dir) {
    if (dir.empty()) throw ValidationError("--out directory is required");
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec)
      throw ValidationError("cannot create output directory '" + dir +
                            "': " + ec.message());
  }

  void emit(const std::string& name, const std::string& content) {
    write(name, content);
    names_.push_back(name);
  }

  void close(const std::string& command, const json& config) {
    write("manifest.json",
          report_io::manifest_to_json(command, config.dump(), names_));
  }

 private:
  void write(const std::string& name, const std::string& content) {
    const fs::path path = dir_ / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    if (!out)
      throw ValidationError("cannot write '" + path.string() + "'");
  }

  fs::path dir_;
  std::vector<std::string> names_;
};

struct LoadedData {
  data::AnnotationTable annotations;
  data::GroundTruth truth;
  data::Pools pools;  // perspective pools ("human_pt") plus prediction pools
};

LoadedData load_inputs(const std::string& annotations_path,
                       const std::vector<std::string>& prediction_paths) {
  LoadedData out;
  out.annotations = data::load_annotations(annotations_path);
  out.truth = data::derive_ground_truth(out.annotations);
  out.pools = data::pools_from_perspective(out.annotations);
  if (!prediction_paths.empty()) {
    std::vector<data::PredictionTable> tables;
    tables.reserve(prediction_paths.size());
    for (const auto& p : prediction_paths)
      tables.push_back(data::load_predictions(p));
    out.pools = data::merge_pools(
        std::move(out.pools),
        data::pools_from_predictions(data::merge_predictions(tables)));
  }
  return out;
}

data::Pools filter_pools(const data::Pools& pools,
                         const std::vector<std::string>& groups,
                         const std::vector<std::string>& estimators) {
  if (groups.empty() && estimators.empty()) return pools;
  const std::set<std::string> gset(groups.begin(), groups.end());
  const std::set<std::string> eset(estimators.begin(), estimators.end());
  data::Pools kept;
  for (const auto& [key, pool] : pools) {
    if (!gset.empty() && !gset.contains(key.group_id)) continue;
    if (!eset.empty() && !eset.contains(key.estimator_id)) continue;
    kept.emplace(key, pool);
  }
  if (kept.empty())
    throw ValidationError(
        "--group/--estimator filters matched none of the " +
        std::to_string(pools.size()) + " pools in the inputs");
  return kept;
}

std::string sanitize_id(const std::string& id) {
  std::string out;
  for (unsigned char c : id)
    out += (std::isalnum(c) || c == '-' || c == '_') ? static_cast<char>(c)
                                                     : '_';
  return out.empty() ? std::string("_") : out;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string annotations;
  std::vector<std::string> predictions;
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t B = 1000;
  std::uint64_t k_min = 1;
  std::uint64_t k_max = 1;
  std::vector<std::string> groups;
  std::vector<std::string> estimators;
  std::string format = "json";
  unsigned threads = 1;
};

int cmd_analyze(const AnalyzeArgs& a) {
  if (a.k_min < 1 || a.k_min > a.k_max || a.k_max > 1000000)
    throw ValidationError(
        "budget range must satisfy 1 <= --k-min <= --k-max <= 1000000");
  const auto loaded = load_inputs(a.annotations, a.predictions);
  const auto pools = filter_pools(loaded.pools, a.groups, a.estimators);

  std::vector<std::uint64_t> ks;
  for (std::uint64_t k = a.k_min; k <= a.k_max; ++k) ks.push_back(k);
  bootstrap::Options opts;
  opts.B = a.B;
  opts.seed = a.seed;
  opts.threads = a.threads;
  const auto report = bootstrap::budget_curve(pools, loaded.truth, ks, opts);

  OutputDir out(a.out);
  if (a.format == "json") {
    out.emit("metrics.json", report_io::metrics_to_json(report));
  } else {
    out.emit("metrics_items.csv", report_io::items_to_csv(report));
    out.emit("metrics_aggregates.csv", report_io::aggregates_to_csv(report));
  }
  out.close("analyze", json{{"annotations", a.annotations},
                            {"predictions", a.predictions},
                            {"seed", a.seed},
                            {"bootstrap", a.B},
                            {"k_min", a.k_min},
                            {"k_max", a.k_max},
                            {"group", a.groups},
                            {"estimator", a.estimators},
                            {"format", a.format}});
  return 0;
}

// ----------------------------------------------------------------- decide

struct DecideArgs {
  std::string specs;
  std::string annotations;
  std::vector<std::string> predictions;
  std::string llm_estimator;
  std::string human_estimator;
  std::vector<std::string> groups;
  std::string out;
  std::uint64_t m = 1;
  std::uint64_t n = 1;
  bool asymptotic = false;
  std::uint64_t curve_max_k = 10;
};

// Exactly one fitted (group, estimator) class may match; anything else is
// reported with the candidate list so the caller can narrow the filters.
const bootstrap::FittedSpec& pick_fitted(const bootstrap::FittedSpecs& fits,
                                         const std::string& estimator,
                                         const std::vector<std::string>& groups,
                                         std::string* source) {
  const std::set<std::string> gset(groups.begin(), groups.end());
  const bootstrap::FittedSpec* hit = nullptr;
  std::vector<std::string> matches;
  for (const auto& [key, fit] : fits) {
    const auto& [group, est] = key;
    if (est != estimator) continue;
    if (!gset.empty() && !gset.contains(group)) continue;
    matches.push_back("(" + group + ", " + est + ")");
    hit = &fit;
    *source = "fitted(group=" + group + ", estimator=" + est + ")";
  }
  if (matches.empty()) {
    std::string known;
    for (const auto& [key, fit] : fits) {
      (void)fit;
      if (!known.empty()) known += ", ";
      known += "(" + key.first + ", " + key.second + ")";
    }
    throw ValidationError("estimator '" + estimator +
                          "' matches no fitted class; fitted classes: " +
                          (known.empty() ? "none" : known));
  }
  if (matches.size() > 1) {
    std::string list;
    for (const auto& m : matches) {
      if (!list.empty()) list += ", ";
      list += m;
    }
    throw ValidationError("estimator '" + estimator +
                          "' is ambiguous across groups: " + list +
                          "; narrow with --group");
  }
  return *hit;
}

int cmd_decide(const DecideArgs& a) {
  const bool explicit_mode = !a.specs.empty();
  const bool fitted_mode = !a.annotations.empty() || !a.predictions.empty() ||
                           !a.llm_estimator.empty() ||
                           !a.human_estimator.empty();
  if (explicit_mode == fitted_mode)
    throw ValidationError(
        "pass either --specs FILE, or --annotations (plus optional "
        "--predictions) with --llm-estimator and --human-estimator");

  report_io::DecisionBundle bundle;
  bundle.asymptotic = a.asymptotic;
  bundle.m = a.m;
  bundle.n = a.n;
  bundle.curve_max_k = a.curve_max_k;

  if (explicit_mode) {
    auto [llm, human] = scenarios::load_spec_pair(a.specs);
    bundle.llm = llm;
    bundle.human = human;
    bundle.llm_source = "explicit";
    bundle.human_source = "explicit";
  } else {
    if (a.annotations.empty())
      throw ValidationError("fitted decisions need --annotations");
    if (a.llm_estimator.empty() || a.human_estimator.empty())
      throw ValidationError(
          "fitted decisions need --llm-estimator and --human-estimator");
    const auto loaded = load_inputs(a.annotations, a.predictions);
    const auto fits = bootstrap::fit_spec(loaded.pools, loaded.truth);
    bundle.llm = bootstrap::to_annotator_spec(
        pick_fitted(fits, a.llm_estimator, a.groups, &bundle.llm_source));
    bundle.human = bootstrap::to_annotator_spec(
        pick_fitted(fits, a.human_estimator, a.groups, &bundle.human_source));
  }

  if (a.asymptotic) {
    bundle.decision =
        analytics::superiority(bundle.llm, bundle.human,
                               analytics::Budget::infinite(),
                               analytics::Budget::infinite());
    bundle.crossover = std::nullopt;
  } else {
    if (a.m < 1 || a.n < 1)
      throw ValidationError("budgets --m and --n must be at least 1");
    bundle.decision = analytics::superiority(bundle.llm, bundle.human,
                                             analytics::Budget::finite(a.m),
                                             analytics::Budget::finite(a.n));
    bundle.crossover = analytics::budget_crossover(bundle.llm, bundle.human,
                                                   a.m);
  }

  OutputDir out(a.out);
  out.emit("decision.json", report_io::decision_to_json(bundle));
  out.close("decide", json{{"specs", a.specs},
                           {"annotations", a.annotations},
                           {"predictions", a.predictions},
                           {"llm_estimator", a.llm_estimator},
                           {"human_estimator", a.human_estimator},
                           {"group", a.groups},
                           {"m", a.m},
                           {"n", a.n},
                           {"asymptotic", a.asymptotic},
                           {"curve_max_k", a.curve_max_k}});
  return 0;
}

// -------------------------------------------------------------------- dpt

struct DptArgs {
  std::string annotations;
  std::vector<std::string> predictions;
  std::vector<std::string> groups;
  std::vector<std::string> estimators;
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t B = 2000;
  double zero_tol = 0.0;
};

int cmd_dpt(const DptArgs& a) {
  if (a.groups.size() < 2)
    throw ValidationError("--group must name at least two groups to compare");
  std::set<std::string> seen;
  for (const auto& g : a.groups)
    if (!seen.insert(g).second)
      throw ValidationError("--group lists '" + g + "' twice");

  const auto loaded = load_inputs(a.annotations, a.predictions);
  const std::set<std::string> eset(a.estimators.begin(), a.estimators.end());

  std::map<std::string, dpt::EstimatorMeans> means;
  for (const auto& [key, pool] : loaded.pools) {
    if (!eset.empty() && !eset.contains(key.estimator_id)) continue;
    means[key.estimator_id][data::Key{key.item_id, key.group_id}] =
        stats::mean(pool);
  }
  for (const auto& e : a.estimators)
    if (!means.contains(e))
      throw ValidationError("estimator '" + e + "' has no pools in the inputs");
  if (means.empty())
    throw ValidationError("inputs contain no prediction pools to diagnose");

  std::vector<report_io::DptEntry> entries;
  OutputDir out(a.out);
  std::set<std::string> used_names;
  for (const auto& [est, emeans] : means) {
    for (std::size_t i = 0; i < a.groups.size(); ++i) {
      for (std::size_t j = i + 1; j < a.groups.size(); ++j) {
        report_io::DptEntry entry;
        entry.estimator_id = est;
        entry.g1 = a.groups[i];
        entry.g2 = a.groups[j];
        try {
          const auto series =
              dpt::differentials(loaded.truth, emeans, entry.g1, entry.g2);
          const std::uint64_t pair_seed = rng::SubstreamKey{}
                                              .with("dpt")
                                              .with(est)
                                              .with(entry.g1)
                                              .with(entry.g2)
                                              .value(a.seed);
          entry.report = dpt::analyze(series, a.B, pair_seed, a.zero_tol);
          std::string base = "scatter_" + sanitize_id(est) + "_" +
                             sanitize_id(entry.g1) + "_vs_" +
                             sanitize_id(entry.g2);
          std::string name = base;
          for (int suffix = 2; !used_names.insert(name).second; ++suffix)
            name = base + "_" + std::to_string(suffix);
          out.emit(name + ".csv", report_io::scatter_to_csv(series));
        } catch (const UndefinedStatError& e) {
          entry.error = e.what();  // this pair only; the sweep continues
        } catch (const ValidationError& e) {
          entry.error = e.what();  // e.g. no overlapping items for the pair
        }
        entries.push_back(std::move(entry));
      }
    }
  }
  out.emit("dpt.json", report_io::dpt_to_json(entries));
  out.close("dpt", json{{"annotations", a.annotations},
                        {"predictions", a.predictions},
                        {"group", a.groups},
                        {"estimator", a.estimators},
                        {"seed", a.seed},
                        {"bootstrap", a.B},
                        {"zero_tol", a.zero_tol}});
  return 0;
}

// --------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string scenario;
  std::string preset;
  std::string out;
  std::uint64_t seed = 0;
  std::uint64_t replications = 0;
  unsigned threads = 1;
  std::string format = "json";
  bool seed_given = false;
  bool replications_given = false;
};

scenarios::Scenario find_preset(const std::string& name) {
  std::vector<std::string> known;
  for (auto& s : scenarios::all_presets()) {
    if (s.name == name) return s;
    const std::string alias = s.name.substr(0, s.name.find('_'));
    if (alias == name) return s;
    known.push_back(alias);
  }
  std::string list;
  for (const auto& k : known) {
    if (!list.empty()) list += ", ";
    list += k;
  }
  throw ValidationError("unknown preset '" + name +
                        "'; shipped presets: " + list);
}

int cmd_simulate(const SimulateArgs& a) {
  if (a.scenario.empty() == a.preset.empty())
    throw ValidationError("pass exactly one of --scenario FILE or --preset NAME");
  scenarios::Scenario s = a.preset.empty() ? scenarios::load_scenario(a.scenario)
                                           : find_preset(a.preset);
  if (a.seed_given) s.seed = a.seed;
  if (a.replications_given) s.replications = a.replications;
  s.validate();

  const auto result = scenarios::run_scenario(s, a.threads);
  OutputDir out(a.out);
  if (a.format == "json") {
    out.emit("scenario_result.json",
             report_io::scenario_result_to_json(result));
  } else {
    out.emit("scenario_aggregates.csv",
             report_io::aggregates_to_csv(result.empirical));
    out.emit("scenario_items.csv", report_io::items_to_csv(result.empirical));
  }
  out.close("simulate",
            json{{"scenario_config", json::parse(scenarios::to_json_string(s))},
                 {"format", a.format}});
  return 0;
}

// ----------------------------------------------------------------- verify

struct VerifyArgs {
  std::uint64_t seed = 0;
  std::uint64_t trials = 10000;
  bool inject_bug = false;
  std::string out;
};

int cmd_verify(const VerifyArgs& a) {
  const auto fault =
      a.inject_bug ? scenarios::Fault::floor_bug : scenarios::Fault::none;
  const auto ledger = scenarios::verify_theory(a.seed, a.trials, fault);
  const std::string text = scenarios::format_ledger(ledger);
  std::cout << text;
  if (!a.out.empty()) {
    OutputDir out(a.out);
    out.emit("ledger.json", report_io::ledger_to_json(ledger));
    out.emit("ledger.txt", text);
    out.close("verify", json{{"seed", a.seed},
                             {"trials", a.trials},
                             {"inject_bug", a.inject_bug}});
  }
  return ledger.all_pass() ? 0 : 3;
}

// -------------------------------------------------------------------- mix

struct MixArgs {
  std::vector<std::string> predictions;
  std::vector<std::string> members;
  std::vector<double> weights;
  std::string mixed_id;
  std::string out;
};

int cmd_mix(const MixArgs& a) {
  std::vector<data::PredictionTable> tables;
  tables.reserve(a.predictions.size());
  for (const auto& p : a.predictions)
    tables.push_back(data::load_predictions(p));
  const auto merged = data::merge_predictions(tables);
  const auto result =
      bootstrap::mix_estimators(merged, a.members, a.weights, a.mixed_id);

  OutputDir out(a.out);
  std::ostringstream csv;
  data::write_predictions(csv, result.table);
  out.emit("mixed_predictions.csv", csv.str());
  out.emit("mix_notes.json", report_io::mix_notes_to_json(result));
  out.close("mix", json{{"predictions", a.predictions},
                        {"members", a.members},
                        {"weights", a.weights},
                        {"mixed_id", result.mixed_id}});
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"statistical comparison of pooled estimators of group-level judgments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(report_io::kToolName) + " " +
                                        std::string(report_io::kToolVersion));

  AnalyzeArgs aa;
  auto* analyze = app.add_subcommand(
      "analyze", "resampling MSE/bias/variance metrics over budget range");
  analyze->add_option("--annotations", aa.annotations,
                      "annotation CSV (direct + perspective rows)")
      ->required()
      ->check(CLI::ExistingFile);
  analyze->add_option("--predictions", aa.predictions,
                      "prediction CSV files (repeatable)")
      ->check(CLI::ExistingFile);
  analyze->add_option("--out", aa.out, "output directory")->required();
  analyze->add_option("--seed", aa.seed, "master seed for resampling")
      ->required();
  analyze->add_option("--bootstrap", aa.B, "resamples per item (default 1000)");
  analyze->add_option("--k-min", aa.k_min, "smallest budget (default 1)");
  analyze->add_option("--k-max", aa.k_max, "largest budget (default 1)");
  analyze->add_option("--group", aa.groups, "keep only these group ids");
  analyze->add_option("--estimator", aa.estimators,
                      "keep only these estimator ids");
  analyze->add_option("--format", aa.format, "json or csv (default json)")
      ->check(CLI::IsMember({"json", "csv"}));
  analyze->add_option("--threads", aa.threads, "worker threads (default 1)");

  DecideArgs da;
  auto* decide = app.add_subcommand(
      "decide", "closed-form winner, curves, and crossover budget");
  decide->add_option("--specs", da.specs,
                     "JSON file with explicit llm/human estimator profiles")
      ->check(CLI::ExistingFile);
  decide->add_option("--annotations", da.annotations,
                     "annotation CSV, for fitting profiles from data")
      ->check(CLI::ExistingFile);
  decide->add_option("--predictions", da.predictions,
                     "prediction CSV files (repeatable)")
      ->check(CLI::ExistingFile);
  decide->add_option("--llm-estimator", da.llm_estimator,
                     "estimator id fitted as the LLM side");
  decide->add_option("--human-estimator", da.human_estimator,
                     "estimator id fitted as the human side");
  decide->add_option("--group", da.groups,
                     "restrict fitting to these group ids");
  decide->add_option("--out", da.out, "output directory")->required();
  decide->add_option("--m", da.m, "LLM-side budget (default 1)");
  decide->add_option("--n", da.n, "human-side budget (default 1)");
  decide->add_flag("--asymptotic", da.asymptotic,
                   "compare error floors instead of finite budgets");
  decide->add_option("--curve-max-k", da.curve_max_k,
                     "largest budget in the emitted curves (default 10)");

  DptArgs pa;
  auto* dptc = app.add_subcommand(
      "dpt", "differential diagnostics per (estimator, group pair)");
  dptc->add_option("--annotations", pa.annotations, "annotation CSV")
      ->required()
      ->check(CLI::ExistingFile);
  dptc->add_option("--predictions", pa.predictions,
                   "prediction CSV files (repeatable)")
      ->check(CLI::ExistingFile);
  dptc->add_option("--group", pa.groups,
                   "group ids to pair up (at least two)")
      ->required();
  dptc->add_option("--estimator", pa.estimators,
                   "keep only these estimator ids");
  dptc->add_option("--out", pa.out, "output directory")->required();
  dptc->add_option("--seed", pa.seed, "master seed for the interval resamples")
      ->required();
  dptc->add_option("--bootstrap", pa.B, "interval resamples (default 2000)");
  dptc->add_option("--zero-tol", pa.zero_tol,
                   "half-width treated as zero disagreement (default 0)");

  SimulateArgs sa;
  auto* simulate = app.add_subcommand(
      "simulate", "run a synthetic scenario and compare against closed forms");
  simulate->add_option("--scenario", sa.scenario, "scenario JSON file")
      ->check(CLI::ExistingFile);
  simulate->add_option("--preset", sa.preset,
                       "shipped scenario: h1, h2, h3, or h4");
  simulate->add_option("--out", sa.out, "output directory")->required();
  auto* sim_seed =
      simulate->add_option("--seed", sa.seed, "override the scenario's seed");
  auto* sim_reps = simulate->add_option(
      "--replications", sa.replications,
      "override the scenario's replication count");
  simulate->add_option("--threads", sa.threads, "worker threads (default 1)");
  simulate->add_option("--format", sa.format, "json or csv (default json)")
      ->check(CLI::IsMember({"json", "csv"}));

  VerifyArgs va;
  auto* verify = app.add_subcommand(
      "verify", "re-derive every documented closed-form property");
  verify->add_option("--seed", va.seed, "master seed for randomized trials")
      ->required();
  verify->add_option("--trials", va.trials,
                     "randomized trials per property (default 10000)");
  verify->add_flag("--inject-bug", va.inject_bug,
                   "perturb a floor formula to prove the harness catches it");
  verify->add_option("--out", va.out,
                     "optional output directory for ledger files");

  MixArgs ma;
  auto* mix = app.add_subcommand(
      "mix", "weighted pointwise mixture of estimators' samples");
  mix->add_option("--predictions", ma.predictions,
                  "prediction CSV files (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  mix->add_option("--members", ma.members, "estimator ids to mix")->required();
  mix->add_option("--weights", ma.weights,
                  "member weights (default equal)");
  mix->add_option("--mixed-id", ma.mixed_id,
                  "id of the synthetic estimator (default mix(a+b+...))");
  mix->add_option("--out", ma.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*analyze) return cmd_analyze(aa);
    if (*decide) return cmd_decide(da);
    if (*dptc) return cmd_dpt(pa);
    if (*simulate) {
      sa.seed_given = sim_seed->count() > 0;
      sa.replications_given = sim_reps->count() > 0;
      return cmd_simulate(sa);
    }
    if (*verify) return cmd_verify(va);
    if (*mix) return cmd_mix(ma);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
