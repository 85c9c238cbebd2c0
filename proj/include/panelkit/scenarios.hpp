#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "panelkit/analytics.hpp"
#include "panelkit/annotator.hpp"
#include "panelkit/bootstrap.hpp"
#include "panelkit/mixture.hpp"

namespace panelkit::scenarios {

// A synthetic experiment: items define the latent targets, estimators the
// generative error profiles, budgets the aggregation sizes to sweep.
struct Scenario {
  std::string name;
  std::vector<mixture::MixtureSpec> items;  // one latent target per item
  std::map<std::string, annotator::AnnotatorSpec> estimators;
  std::vector<std::uint64_t> budgets;
  std::uint64_t replications = 1000;  // simulated panels per (item, k)
  std::uint64_t seed = 0;
  bool clip = false;  // clamp predictions to [0,1]; moments then approximate

  void validate() const;
};

// JSON round-trip for scenario configs (schema_version 1). Parsing rejects
// unknown fields and re-validates the result.
std::string to_json_string(const Scenario& s, int indent = 2);
Scenario scenario_from_json_string(const std::string& text,
                                   const std::string& source);
Scenario load_scenario(const std::filesystem::path& path);
void save_scenario(const std::filesystem::path& path, const Scenario& s);

// Parses a {"llm": {...}, "human": {...}} file of two estimator profiles,
// for decisions made from explicit parameters instead of fitted ones.
std::pair<annotator::AnnotatorSpec, annotator::AnnotatorSpec> load_spec_pair(
    const std::filesystem::path& path);

struct ScenarioResult {
  Scenario scenario;  // echo of the config the result came from
  bootstrap::MetricsReport empirical;
  // closed-form curves and empirical-vs-analytic relative gaps,
  // keyed by (estimator_id, k)
  std::map<std::pair<std::string, std::uint64_t>, analytics::MseBreakdown>
      analytic;
  std::map<std::pair<std::string, std::uint64_t>, double> agreement;
};

// For each (item, estimator, budget): simulates `replications` panels,
// aggregates each, and scores the aggregate draws against the item's target
// mean; the per-item group column is "sim". Items run in parallel on
// per-(item, estimator, k) substreams, so results are bit-identical for a
// fixed (scenario, seed) regardless of thread count.
ScenarioResult run_scenario(const Scenario& s, unsigned threads = 1);

// Shipped experiment configurations. Factories are the source of truth;
// the presets/ directory carries the same configs as JSON.
Scenario preset_h1();  // low-variance single sample vs high-variance crowd
Scenario preset_h2();  // in-group vs out-group profile: coupled biases
Scenario preset_h3();  // internal-mixture mismatch ladder
Scenario preset_h4();  // model choice moves the processing profile
std::vector<Scenario> all_presets();

// One row per verified claim: the largest violation seen over randomized
// inputs, against the row's tolerance.
struct LedgerRow {
  std::string name;
  std::uint64_t trials = 0;
  double max_violation = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct Ledger {
  std::vector<LedgerRow> rows;
  bool all_pass() const;
};

// Deliberate perturbations for testing that the verification harness
// actually detects broken formulas.
enum class Fault { none, floor_bug };

// Randomized re-derivation of every documented closed-form property:
// mixture bounds, the representation-bias inequality and its equality case,
// sampled moments of panels and labels, monotone budget curves, exact floor
// identities, and decision consistency against Monte Carlo. `trials` scales
// the randomized rows; sampling-based rows use fixed draw counts chosen for
// their stated tolerances.
Ledger verify_theory(std::uint64_t seed, std::uint64_t trials,
                     Fault fault = Fault::none);

// Fixed-width text table of the ledger, one row per line, ending with a
// summary line.
std::string format_ledger(const Ledger& ledger);

}  // namespace panelkit::scenarios
