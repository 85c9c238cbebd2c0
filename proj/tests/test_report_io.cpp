#include <doctest.h>

#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "panelkit/analytics.hpp"
#include "panelkit/bootstrap.hpp"
#include "panelkit/csv.hpp"
#include "panelkit/data.hpp"
#include "panelkit/report_io.hpp"
#include "panelkit/rng.hpp"
#include "panelkit/scenarios.hpp"

using namespace panelkit;
using nlohmann::json;

namespace {

bootstrap::MetricsReport tiny_report() {
  data::Pools pools;
  pools[{"g", "e", "i"}] = {0.5, 0.9};
  data::GroundTruth truth;
  truth[{"i", "g"}] = {0.75, 1};
  bootstrap::Options opts;
  return bootstrap::budget_curve(pools, truth, {1, 2}, opts);
}

}  // namespace

TEST_CASE("report_io: metrics json carries the full report") {
  const auto r = tiny_report();
  const auto j = json::parse(report_io::metrics_to_json(r));
  CHECK(j.at("provenance").at("B").get<std::uint64_t>() == 1000);
  CHECK(j.at("provenance").at("n_pools").get<std::size_t>() == 1);
  CHECK(j.at("provenance").at("n_evaluated").get<std::size_t>() == 1);
  REQUIRE(j.at("items").size() == 2);
  const auto& item = j.at("items").at(0);
  CHECK(item.at("item_id") == "i");
  CHECK(item.at("k").get<std::uint64_t>() == 1);
  // json doubles survive the round trip bit for bit
  CHECK(item.at("mse").get<double>() == r.items[0].mse);
  CHECK(item.at("bias").get<double>() == r.items[0].bias);
  CHECK(item.at("exhaustive").get<bool>());
  CHECK(item.at("mc_se").get<double>() == 0.0);
  REQUIRE(j.at("aggregates").size() == 2);
  CHECK(j.at("aggregates").at(0).at("mean_mse").get<double>() ==
        r.aggregates[0].mean_mse);
  CHECK(j.at("monotonicity_flags").is_array());
}

TEST_CASE("report_io: csv renderings round-trip their numbers") {
  bootstrap::ItemMetrics m;
  m.item_id = "weird,id";  // forces quoting
  m.group_id = "g";
  m.estimator_id = "e";
  m.k = 3;
  m.mse = 1.0 / 3.0;
  m.bias = -0.0425;
  m.variance = 1e-300;
  m.bootstrap_mean = 0.1 + 0.2;  // 0.30000000000000004
  m.mc_se = 0.007;
  bootstrap::Provenance prov;
  prov.k_range = {3};
  const auto rep = bootstrap::assemble_report({m}, prov);

  const std::string items_csv = report_io::items_to_csv(rep);
  std::istringstream in(items_csv);
  const auto t = csv::read(in, "items");
  REQUIRE(t.header.size() == 10);
  CHECK(t.header[0] == "item_id");
  CHECK(t.header[4] == "mse");
  REQUIRE(t.rows.size() == 1);
  CHECK(t.rows[0][0] == "weird,id");
  CHECK(std::strtod(t.rows[0][4].c_str(), nullptr) == 1.0 / 3.0);
  CHECK(std::strtod(t.rows[0][5].c_str(), nullptr) == -0.0425);
  CHECK(std::strtod(t.rows[0][6].c_str(), nullptr) == 1e-300);
  CHECK(std::strtod(t.rows[0][7].c_str(), nullptr) == 0.1 + 0.2);
  CHECK(t.rows[0][8] == "0");

  const std::string agg_csv = report_io::aggregates_to_csv(rep);
  std::istringstream in2(agg_csv);
  const auto t2 = csv::read(in2, "aggregates");
  REQUIRE(t2.rows.size() == 1);
  CHECK(t2.header[3] == "mean_mse");
  CHECK(std::strtod(t2.rows[0][3].c_str(), nullptr) ==
        rep.aggregates[0].mean_mse);
  CHECK(t2.rows[0][8] == "1");
}

TEST_CASE("report_io: dpt entries keep reports and errors apart") {
  std::vector<report_io::DptEntry> entries(2);
  entries[0].estimator_id = "llm";
  entries[0].g1 = "a";
  entries[0].g2 = "b";
  dpt::DptReport rep;
  rep.rho = 0.75;
  rep.ci_low = 0.5;
  rep.ci_high = 0.9;
  rep.directional_accuracy = 0.8;
  rep.n_items = 40;
  rep.B = 2000;
  entries[0].report = rep;
  entries[1].estimator_id = "llm";
  entries[1].g1 = "a";
  entries[1].g2 = "c";
  entries[1].error = "correlation undefined: constant series";

  const auto j = json::parse(report_io::dpt_to_json(entries));
  REQUIRE(j.at("pairs").size() == 2);
  const auto& ok = j.at("pairs").at(0);
  CHECK(ok.at("report").at("rho").get<double>() == 0.75);
  CHECK(ok.at("report").at("n_items").get<std::size_t>() == 40);
  CHECK(!ok.contains("error"));
  const auto& bad = j.at("pairs").at(1);
  CHECK(bad.at("error") == "correlation undefined: constant series");
  CHECK(!bad.contains("report"));

  dpt::DifferentialSeries s;
  s.g1 = "a";
  s.g2 = "b";
  s.item_ids = {"i1", "i2"};
  s.delta_star = {0.25, -0.125};
  s.delta_hat = {0.5, -0.25};
  const std::string scatter = report_io::scatter_to_csv(s);
  CHECK(scatter ==
        "item_id,delta_star,delta_hat\ni1,0.25,0.5\ni2,-0.125,-0.25\n");
}

TEST_CASE("report_io: decision json reflects the budget story") {
  report_io::DecisionBundle b;
  b.llm.mu_w = 0.08;
  b.llm.mu_c = 0.04;
  b.llm.var_eps = 0.002;
  b.llm.gamma = 0.05;
  b.human.var_eps = 0.0625;
  b.llm_source = "explicit";
  b.human_source = "explicit";
  b.m = 1;
  b.n = 1;
  b.decision = analytics::superiority(b.llm, b.human,
                                      analytics::Budget::finite(1),
                                      analytics::Budget::finite(1));
  b.crossover = analytics::budget_crossover(b.llm, b.human, 1);
  REQUIRE(b.crossover.has_value());

  const auto j = json::parse(report_io::decision_to_json(b));
  CHECK(j.at("decision").at("winner") == "llm");
  CHECK(j.at("decision").at("llm_mse").get<double>() == b.decision.llm_mse);
  CHECK(j.at("m").get<std::uint64_t>() == 1);
  CHECK(j.at("crossover").get<std::uint64_t>() == *b.crossover);
  CHECK(j.at("llm_spec").at("mu_w").get<double>() == 0.08);
  CHECK(j.at("error_floors").at("human").get<double>() == 0.0);
  REQUIRE(j.at("curves").size() == b.curve_max_k);
  CHECK(j.at("curves").at(0).at("k").get<std::uint64_t>() == 1);
  CHECK(j.at("curves").at(0).at("llm").at("total").get<double>() ==
        analytics::analytic_mse(b.llm, 1).total);

  SUBCASE("no crossover serializes as null") {
    b.crossover.reset();
    const auto j2 = json::parse(report_io::decision_to_json(b));
    CHECK(j2.at("crossover").is_null());
  }
  SUBCASE("asymptotic bundles omit the budgets") {
    b.asymptotic = true;
    const auto j2 = json::parse(report_io::decision_to_json(b));
    CHECK(!j2.contains("m"));
    CHECK(!j2.contains("n"));
    CHECK(!j2.contains("crossover"));
    CHECK(j2.at("asymptotic").get<bool>());
  }
}

TEST_CASE("report_io: ledger json mirrors pass state") {
  scenarios::Ledger led;
  led.rows.push_back({"alpha", 10, 0.0, 1e-12, true});
  led.rows.push_back({"beta", 10, 0.5, 1e-12, false});
  const auto j = json::parse(report_io::ledger_to_json(led));
  CHECK(!j.at("all_pass").get<bool>());
  REQUIRE(j.at("rows").size() == 2);
  CHECK(j.at("rows").at(0).at("name") == "alpha");
  CHECK(j.at("rows").at(0).at("pass").get<bool>());
  CHECK(j.at("rows").at(1).at("max_violation").get<double>() == 0.5);
  CHECK(!j.at("rows").at(1).at("pass").get<bool>());
}

TEST_CASE("report_io: scenario result json embeds config and curves") {
  scenarios::Scenario s;
  s.name = "tiny";
  mixture::MixtureSpec m;
  m.communities = {mixture::Community{1.0, 0.5}};
  s.items = {m};
  annotator::AnnotatorSpec a;
  a.var_eps = 0.01;
  s.estimators["e"] = a;
  s.budgets = {1, 2};
  s.replications = 50;
  const auto result = scenarios::run_scenario(s);
  const auto j = json::parse(report_io::scenario_result_to_json(result));
  CHECK(j.at("scenario").at("name") == "tiny");
  CHECK(j.at("scenario").at("replications").get<std::uint64_t>() == 50);
  REQUIRE(j.at("curves").size() == 2);
  CHECK(j.at("curves").at(0).at("estimator_id") == "e");
  CHECK(j.at("curves").at(0).contains("relative_gap"));
  CHECK(j.at("curves").at(0).at("analytic").at("total").get<double>() ==
        analytics::analytic_mse(a, 1).total);
  CHECK(j.at("items").size() == 2);
  CHECK(j.at("aggregates").size() == 2);
  CHECK(j.at("provenance").at("B").get<std::uint64_t>() == 50);
}

TEST_CASE("report_io: mix notes json") {
  data::PredictionTable preds;
  preds.rows.push_back({"i1", "g", "a", 0, 0.2});
  preds.rows.push_back({"i1", "g", "b", 0, 0.6});
  preds.rows.push_back({"i1", "g", "b", 1, 0.6});
  const auto mixed = bootstrap::mix_estimators(preds, {"a", "b"});
  const auto j = json::parse(report_io::mix_notes_to_json(mixed));
  CHECK(j.at("mixed_id") == "mix(a+b)");
  CHECK(j.at("rows").get<std::size_t>() == 1);
  REQUIRE(j.at("notes").size() == 1);
  CHECK(j.at("notes").at(0).at("kept").get<std::size_t>() == 1);
  CHECK(j.at("notes").at(0).at("largest").get<std::size_t>() == 2);
  CHECK(!j.at("notes").at(0).at("dropped").get<bool>());
}

TEST_CASE("report_io: manifests hash their config") {
  const std::string config = R"({"a":1,"b":"x"})";
  const auto text =
      report_io::manifest_to_json("analyze", config, {"metrics.json"});
  const auto j = json::parse(text);
  CHECK(j.at("command") == "analyze");
  CHECK(j.at("config").at("a").get<int>() == 1);
  CHECK(j.at("config").at("b") == "x");
  char want[24];
  std::snprintf(want, sizeof(want), "%016llx",
                static_cast<unsigned long long>(rng::fnv1a(config)));
  CHECK(j.at("config_hash") == want);
  CHECK(j.at("tool").at("name") == "panelkit");
  CHECK(j.at("tool").at("version") == "1.0.0");
  CHECK(j.at("tool").at("schema_version").get<int>() == 1);
  REQUIRE(j.at("outputs").size() == 1);
  CHECK(j.at("outputs").at(0) == "metrics.json");
  // pure function: same inputs, same bytes
  CHECK(report_io::manifest_to_json("analyze", config, {"metrics.json"}) ==
        text);
}
