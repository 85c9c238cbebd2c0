#include "panelkit/report_io.hpp"

#include <cinttypes>
#include <cstdio>

#include <json.hpp>

#include "panelkit/csv.hpp"
#include "panelkit/rng.hpp"

namespace panelkit::report_io {

using nlohmann::json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string num(std::uint64_t v) { return std::to_string(v); }

json provenance_json(const bootstrap::Provenance& p) {
  return {{"B", p.B},
          {"seed", p.seed},
          {"k_range", p.k_range},
          {"n_pools", p.n_pools},
          {"n_evaluated", p.n_evaluated},
          {"n_skipped_no_truth", p.n_skipped_no_truth}};
}

json item_json(const bootstrap::ItemMetrics& m) {
  return {{"item_id", m.item_id},
          {"group_id", m.group_id},
          {"estimator_id", m.estimator_id},
          {"k", m.k},
          {"mse", m.mse},
          {"bias", m.bias},
          {"variance", m.variance},
          {"bootstrap_mean", m.bootstrap_mean},
          {"exhaustive", m.exhaustive},
          {"mc_se", m.mc_se}};
}

json aggregate_json(const bootstrap::AggregateMetrics& a) {
  return {{"group_id", a.group_id},
          {"estimator_id", a.estimator_id},
          {"k", a.k},
          {"mean_mse", a.mean_mse},
          {"mean_signed_bias", a.mean_signed_bias},
          {"mean_sq_bias", a.mean_sq_bias},
          {"mean_variance", a.mean_variance},
          {"mc_se", a.mc_se},
          {"n_items", a.n_items}};
}

json flag_json(const bootstrap::MonotonicityFlag& f) {
  return {{"group_id", f.group_id},
          {"estimator_id", f.estimator_id},
          {"k_prev", f.k_prev},
          {"k", f.k},
          {"increase", f.increase},
          {"se", f.se}};
}

json spec_json(const annotator::AnnotatorSpec& a) {
  return {{"mu_w", a.mu_w},     {"mu_c", a.mu_c},
          {"var_w", a.var_w},   {"var_c", a.var_c},
          {"cov_wc", a.cov_wc}, {"var_eps", a.var_eps},
          {"gamma", a.gamma}};
}

json breakdown_json(const analytics::MseBreakdown& b) {
  return {{"bias_sq", b.bias_sq},
          {"correlation_floor", b.correlation_floor},
          {"reducible_variance", b.reducible_variance},
          {"total", b.total}};
}

const char* winner_name(analytics::Winner w) {
  switch (w) {
    case analytics::Winner::llm: return "llm";
    case analytics::Winner::human: return "human";
    default: return "tie";
  }
}

}  // namespace

std::string metrics_to_json(const bootstrap::MetricsReport& r, int indent) {
  json items = json::array();
  for (const auto& m : r.items) items.push_back(item_json(m));
  json aggregates = json::array();
  for (const auto& a : r.aggregates) aggregates.push_back(aggregate_json(a));
  json flags = json::array();
  for (const auto& f : r.flags) flags.push_back(flag_json(f));
  json j = {{"provenance", provenance_json(r.provenance)},
            {"aggregates", aggregates},
            {"items", items},
            {"monotonicity_flags", flags}};
  return j.dump(indent) + "\n";
}

std::string items_to_csv(const bootstrap::MetricsReport& r) {
  csv::Table t;
  t.header = {"item_id", "group_id", "estimator_id", "k",
              "mse",     "bias",     "variance",     "bootstrap_mean",
              "exhaustive", "mc_se"};
  for (const auto& m : r.items) {
    t.rows.push_back({m.item_id, m.group_id, m.estimator_id, num(m.k),
                      num(m.mse), num(m.bias), num(m.variance),
                      num(m.bootstrap_mean), m.exhaustive ? "1" : "0",
                      num(m.mc_se)});
  }
  return csv::to_string(t);
}

std::string aggregates_to_csv(const bootstrap::MetricsReport& r) {
  csv::Table t;
  t.header = {"group_id",         "estimator_id",  "k",
              "mean_mse",         "mean_signed_bias", "mean_sq_bias",
              "mean_variance",    "mc_se",         "n_items"};
  for (const auto& a : r.aggregates) {
    t.rows.push_back({a.group_id, a.estimator_id, num(a.k), num(a.mean_mse),
                      num(a.mean_signed_bias), num(a.mean_sq_bias),
                      num(a.mean_variance), num(a.mc_se),
                      std::to_string(a.n_items)});
  }
  return csv::to_string(t);
}

std::string dpt_to_json(const std::vector<DptEntry>& entries, int indent) {
  json arr = json::array();
  for (const auto& e : entries) {
    json j = {{"estimator_id", e.estimator_id},
              {"g1", e.g1},
              {"g2", e.g2}};
    if (e.report) {
      const auto& r = *e.report;
      j["report"] = {{"rho", r.rho},
                     {"ci_low", r.ci_low},
                     {"ci_high", r.ci_high},
                     {"directional_accuracy", r.directional_accuracy},
                     {"n_items", r.n_items},
                     {"sigma_delta_star", r.sigma_delta_star},
                     {"ci_redrawn", r.ci_redrawn},
                     {"B", r.B},
                     {"seed", r.seed},
                     {"zero_tol", r.zero_tol}};
    } else {
      j["error"] = e.error;
    }
    arr.push_back(std::move(j));
  }
  return json{{"pairs", arr}}.dump(indent) + "\n";
}

std::string scatter_to_csv(const dpt::DifferentialSeries& series) {
  csv::Table t;
  t.header = {"item_id", "delta_star", "delta_hat"};
  for (std::size_t i = 0; i < series.item_ids.size(); ++i)
    t.rows.push_back({series.item_ids[i], num(series.delta_star[i]),
                      num(series.delta_hat[i])});
  return csv::to_string(t);
}

std::string decision_to_json(const DecisionBundle& b, int indent) {
  json curves = json::array();
  for (std::uint64_t k = 1; k <= b.curve_max_k; ++k) {
    curves.push_back({{"k", k},
                      {"llm", breakdown_json(analytics::analytic_mse(b.llm, k))},
                      {"human",
                       breakdown_json(analytics::analytic_mse(b.human, k))}});
  }
  json j = {{"llm_spec", spec_json(b.llm)},
            {"human_spec", spec_json(b.human)},
            {"llm_source", b.llm_source},
            {"human_source", b.human_source},
            {"asymptotic", b.asymptotic},
            {"decision",
             {{"winner", winner_name(b.decision.winner)},
              {"llm_mse", b.decision.llm_mse},
              {"human_mse", b.decision.human_mse},
              {"margin", b.decision.margin}}},
            {"error_floors",
             {{"llm", analytics::error_floor(b.llm)},
              {"human", analytics::error_floor(b.human)}}},
            {"curves", curves}};
  if (!b.asymptotic) {
    j["m"] = b.m;
    j["n"] = b.n;
    if (b.crossover) {
      j["crossover"] = *b.crossover;
    } else {
      j["crossover"] = nullptr;
    }
  }
  return j.dump(indent) + "\n";
}

std::string ledger_to_json(const scenarios::Ledger& ledger, int indent) {
  json rows = json::array();
  for (const auto& r : ledger.rows) {
    rows.push_back({{"name", r.name},
                    {"trials", r.trials},
                    {"max_violation", r.max_violation},
                    {"tolerance", r.tolerance},
                    {"pass", r.pass}});
  }
  json j = {{"rows", rows}, {"all_pass", ledger.all_pass()}};
  return j.dump(indent) + "\n";
}

std::string scenario_result_to_json(const scenarios::ScenarioResult& r,
                                    int indent) {
  json analytic = json::array();
  for (const auto& [key, breakdown] : r.analytic) {
    json entry = {{"estimator_id", key.first},
                  {"k", key.second},
                  {"analytic", breakdown_json(breakdown)}};
    auto it = r.agreement.find(key);
    if (it != r.agreement.end()) entry["relative_gap"] = it->second;
    analytic.push_back(std::move(entry));
  }
  json aggregates = json::array();
  for (const auto& a : r.empirical.aggregates)
    aggregates.push_back(aggregate_json(a));
  json items = json::array();
  for (const auto& m : r.empirical.items) items.push_back(item_json(m));
  json j = {{"scenario", json::parse(scenarios::to_json_string(r.scenario))},
            {"provenance", provenance_json(r.empirical.provenance)},
            {"curves", analytic},
            {"aggregates", aggregates},
            {"items", items}};
  return j.dump(indent) + "\n";
}

std::string mix_notes_to_json(const bootstrap::MixResult& r, int indent) {
  json notes = json::array();
  for (const auto& n : r.notes) {
    notes.push_back({{"item_id", n.item_id},
                     {"group_id", n.group_id},
                     {"kept", n.kept},
                     {"largest", n.largest},
                     {"dropped", n.dropped}});
  }
  json j = {{"mixed_id", r.mixed_id},
            {"rows", r.table.rows.size()},
            {"notes", notes}};
  return j.dump(indent) + "\n";
}

std::string manifest_to_json(const std::string& command,
                             const std::string& config_json_compact,
                             const std::vector<std::string>& outputs,
                             int indent) {
  char hash[24];
  std::snprintf(hash, sizeof(hash), "%016" PRIx64,
                rng::fnv1a(config_json_compact));
  json j = {{"command", command},
            {"config", json::parse(config_json_compact)},
            {"config_hash", hash},
            {"tool",
             {{"name", std::string(kToolName)},
              {"version", std::string(kToolVersion)},
              {"schema_version", kSchemaVersion}}},
            {"outputs", outputs}};
  return j.dump(indent) + "\n";
}

}  // namespace panelkit::report_io
