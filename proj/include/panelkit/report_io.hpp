#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "panelkit/analytics.hpp"
#include "panelkit/bootstrap.hpp"
#include "panelkit/dpt.hpp"
#include "panelkit/scenarios.hpp"

// Text renderings of the analysis artifacts: nested JSON for machine
// consumption, tidy CSV for plotting. Every rendering is a pure function of
// its inputs (no timestamps, no environment), so identical runs produce
// byte-identical files.
namespace panelkit::report_io {

inline constexpr std::string_view kToolName = "panelkit";
inline constexpr std::string_view kToolVersion = "1.0.0";
inline constexpr int kSchemaVersion = 1;

std::string metrics_to_json(const bootstrap::MetricsReport& r,
                            int indent = 2);
// one row per (item, group, estimator, k)
std::string items_to_csv(const bootstrap::MetricsReport& r);
// one row per (group, estimator, k)
std::string aggregates_to_csv(const bootstrap::MetricsReport& r);

// One differential diagnosis per (estimator, group pair); pairs whose
// correlation is undefined carry the error text instead of a report.
struct DptEntry {
  std::string estimator_id;
  std::string g1;
  std::string g2;
  std::optional<dpt::DptReport> report;
  std::string error;  // set when report is absent
};

std::string dpt_to_json(const std::vector<DptEntry>& entries, int indent = 2);
// item_id, delta_star, delta_hat
std::string scatter_to_csv(const dpt::DifferentialSeries& series);

struct DecisionBundle {
  annotator::AnnotatorSpec llm;
  annotator::AnnotatorSpec human;
  std::string llm_source;    // "explicit" or "fitted(group, estimator)"
  std::string human_source;
  bool asymptotic = false;
  std::uint64_t m = 1;  // llm budget (when finite)
  std::uint64_t n = 1;  // human budget (when finite)
  analytics::DecisionReport decision;
  std::optional<std::uint64_t> crossover;  // human budget beating llm at m
  std::uint64_t curve_max_k = 10;
};

std::string decision_to_json(const DecisionBundle& b, int indent = 2);

std::string ledger_to_json(const scenarios::Ledger& ledger, int indent = 2);

std::string scenario_result_to_json(const scenarios::ScenarioResult& r,
                                    int indent = 2);

std::string mix_notes_to_json(const bootstrap::MixResult& r, int indent = 2);

// Run manifest: the command, its fully resolved config (as compact JSON),
// a hash of that config, tool identity, and the list of files the run
// wrote. Identical manifests imply identical outputs.
std::string manifest_to_json(const std::string& command,
                             const std::string& config_json_compact,
                             const std::vector<std::string>& outputs,
                             int indent = 2);

}  // namespace panelkit::report_io
