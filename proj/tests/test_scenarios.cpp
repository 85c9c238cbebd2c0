#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "panelkit/errors.hpp"
#include "panelkit/mixture.hpp"
#include "panelkit/scenarios.hpp"

using namespace panelkit;

#ifndef PANELKIT_PRESET_DIR
#define PANELKIT_PRESET_DIR "presets"
#endif

namespace {

scenarios::Scenario small_scenario() {
  scenarios::Scenario s;
  s.name = "tiny";
  mixture::MixtureSpec m;
  m.communities = {mixture::Community{0.6, 0.35}, mixture::Community{0.4, 0.65}};
  s.items = {m};
  annotator::AnnotatorSpec a;
  a.mu_w = 0.08;
  a.mu_c = 0.04;
  a.var_eps = 0.002;
  a.gamma = 0.05;
  s.estimators["llm_pt"] = a;
  annotator::AnnotatorSpec h;
  h.var_eps = 0.0625;
  s.estimators["human_direct"] = h;
  s.budgets = {1, 3};
  s.replications = 50;
  s.seed = 5;
  return s;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path);
  REQUIRE(bool(in));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("scenarios: json round trip preserves every field") {
  auto s = small_scenario();
  s.clip = true;
  s.replications = 123;
  const std::string text = scenarios::to_json_string(s);
  const auto back = scenarios::scenario_from_json_string(text, "test");
  CHECK(back.name == s.name);
  CHECK(back.seed == s.seed);
  CHECK(back.replications == s.replications);
  CHECK(back.clip == s.clip);
  CHECK(back.budgets == s.budgets);
  REQUIRE(back.items.size() == 1);
  CHECK(back.items[0].communities[0].weight == 0.6);
  CHECK(back.items[0].communities[1].mean == 0.65);
  REQUIRE(back.estimators.size() == 2);
  CHECK(back.estimators.at("llm_pt").mu_w == 0.08);
  CHECK(back.estimators.at("llm_pt").gamma == 0.05);
  CHECK(back.estimators.at("human_direct").var_eps == 0.0625);
  // serializing the parsed scenario reproduces the text exactly
  CHECK(scenarios::to_json_string(back) == text);
}

TEST_CASE("scenarios: parser rejects malformed configs") {
  const auto s = small_scenario();
  const std::string good = scenarios::to_json_string(s);

  SUBCASE("unknown top-level field") {
    std::string bad = good;
    bad.insert(bad.find("\"name\""), "\"extra\": 1,\n  ");
    CHECK_THROWS_WITH_AS(scenarios::scenario_from_json_string(bad, "cfg"),
                         "cfg: unknown field 'extra' in the scenario",
                         ValidationError);
  }
  SUBCASE("unknown estimator field") {
    std::string bad = good;
    bad.insert(bad.find("\"mu_w\""), "\"mu_x\": 0.0,\n        ");
    CHECK_THROWS_WITH_AS(scenarios::scenario_from_json_string(bad, "cfg"),
                         "cfg: unknown field 'mu_x' in an estimator",
                         ValidationError);
  }
  SUBCASE("unknown label model") {
    std::string bad = good;
    const auto pos = bad.find("bernoulli");
    bad.replace(pos, 9, "guessing!");
    CHECK_THROWS_WITH_AS(scenarios::scenario_from_json_string(bad, "cfg"),
                         "cfg: unknown label_model 'guessing!'",
                         ValidationError);
  }
  SUBCASE("wrong schema version") {
    std::string bad = good;
    const auto pos = bad.find("\"schema_version\": 1");
    bad.replace(pos, 19, "\"schema_version\": 2");
    CHECK_THROWS_WITH_AS(scenarios::scenario_from_json_string(bad, "cfg"),
                         "cfg: unsupported schema_version", ValidationError);
  }
  SUBCASE("negative budget") {
    std::string bad = good;
    const auto pos = bad.find("[\n    1,\n    3\n  ]");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, 18, "[-1]");
    CHECK_THROWS_WITH_AS(scenarios::scenario_from_json_string(bad, "cfg"),
                         "cfg: budgets must be positive integers",
                         ValidationError);
  }
  SUBCASE("not json at all") {
    CHECK_THROWS_AS(scenarios::scenario_from_json_string("nope", "cfg"),
                    ValidationError);
  }
}

TEST_CASE("scenarios: validation catches structural problems") {
  auto ok = small_scenario();
  CHECK_NOTHROW(ok.validate());

  auto s = ok;
  s.name.clear();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.items.clear();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.estimators.clear();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.budgets.clear();
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.budgets = {1, 0};
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.replications = 0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.items[0].communities[0].weight = 0.5;  // weights now sum to 0.9
  CHECK_THROWS_AS(s.validate(), ValidationError);
  s = ok;
  s.estimators["llm_pt"].gamma = 1.0;
  CHECK_THROWS_AS(s.validate(), ValidationError);
}

TEST_CASE("scenarios: scenario files round trip through disk") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "panelkit_test_scenario.json";
  const auto s = small_scenario();
  scenarios::save_scenario(path, s);
  const auto back = scenarios::load_scenario(path);
  CHECK(scenarios::to_json_string(back) == scenarios::to_json_string(s));
  fs::remove(path);
  CHECK_THROWS_AS(scenarios::load_scenario(path), ValidationError);
}

TEST_CASE("scenarios: shipped presets validate and match their files") {
  const auto presets = scenarios::all_presets();
  REQUIRE(presets.size() == 4);
  CHECK(presets[0].name == "h1_single_sample_advantage");
  CHECK(presets[1].name == "h2_outgroup_coupling");
  CHECK(presets[2].name == "h3_representation_mismatch");
  CHECK(presets[3].name == "h4_model_choice");
  for (const auto& p : presets) CHECK_NOTHROW(p.validate());

  const char* files[] = {"h1.json", "h2.json", "h3.json", "h4.json"};
  for (std::size_t i = 0; i < 4; ++i) {
    const auto path =
        std::filesystem::path(PANELKIT_PRESET_DIR) / files[i];
    CAPTURE(files[i]);
    CHECK(slurp(path) == scenarios::to_json_string(presets[i]));
  }
}

TEST_CASE("scenarios: the mismatch ladder is built from real mixtures") {
  const auto h3 = scenarios::preset_h3();
  REQUIRE(h3.items.size() == 1);
  const auto& m = h3.items[0];

  const std::vector<std::vector<double>> ladders = {
      {0.2, 0.3, 0.5},
      {0.3, 0.3, 0.4},
      {0.45, 0.25, 0.30},
      {0.6, 0.2, 0.2},
  };
  const char* ids[] = {"mismatch_00", "mismatch_01", "mismatch_02",
                       "mismatch_03"};
  double prev_chi2 = -1.0;
  for (std::size_t i = 0; i < ladders.size(); ++i) {
    const mixture::InternalMixture q{ladders[i]};
    const double bias = mixture::repr_bias(m, q);
    CHECK(h3.estimators.at(ids[i]).mu_w ==
          doctest::Approx(bias).epsilon(1e-12));
    const double chi2 = mixture::chi2_divergence(q, m);
    CHECK(chi2 > prev_chi2);  // the ladder drifts monotonically
    prev_chi2 = chi2;
  }
  CHECK(h3.estimators.at("mismatch_00").mu_w == 0.0);
  CHECK(h3.estimators.at("mismatch_01").mu_w ==
        doctest::Approx(0.075).epsilon(1e-12));
  CHECK(h3.estimators.at("mismatch_02").mu_w ==
        doctest::Approx(0.17).epsilon(1e-12));
  CHECK(h3.estimators.at("mismatch_03").mu_w ==
        doctest::Approx(0.265).epsilon(1e-12));
}

TEST_CASE("scenarios: simulation agrees with the closed forms") {
  auto s = small_scenario();
  s.replications = 20000;
  const auto result = scenarios::run_scenario(s);
  CHECK(result.scenario.name == "tiny");
  // 1 item x 2 estimators x 2 budgets
  REQUIRE(result.empirical.items.size() == 4);
  for (const auto& m : result.empirical.items) {
    CHECK(m.group_id == "sim");
    CHECK(m.item_id == "item_000");
  }
  REQUIRE(result.analytic.size() == 4);
  REQUIRE(result.agreement.size() == 4);
  for (const auto& [key, gap] : result.agreement) {
    CAPTURE(key.first);
    CAPTURE(key.second);
    CHECK(gap < 0.05);  // 20k replications put the MC noise near 1% relative
  }
  // the llm profile: bias^2 + gamma V + (1-gamma) V / k
  const auto& an = result.analytic.at({"llm_pt", 1});
  CHECK(an.total == doctest::Approx(0.0164).epsilon(1e-12));
  const auto& an3 = result.analytic.at({"human_direct", 3});
  CHECK(an3.total == doctest::Approx(0.0625 / 3.0).epsilon(1e-12));

  SUBCASE("thread count changes nothing") {
    const auto par = scenarios::run_scenario(s, 4);
    REQUIRE(par.empirical.items.size() == result.empirical.items.size());
    for (std::size_t i = 0; i < par.empirical.items.size(); ++i) {
      CHECK(par.empirical.items[i].mse == result.empirical.items[i].mse);
      CHECK(par.empirical.items[i].bias == result.empirical.items[i].bias);
    }
    REQUIRE(par.empirical.aggregates.size() ==
            result.empirical.aggregates.size());
    for (std::size_t i = 0; i < par.empirical.aggregates.size(); ++i)
      CHECK(par.empirical.aggregates[i].mean_mse ==
            result.empirical.aggregates[i].mean_mse);
  }
  SUBCASE("larger panels reduce the measured error") {
    for (const char* est : {"llm_pt", "human_direct"}) {
      double k1 = -1.0, k3 = -1.0;
      for (const auto& agg : result.empirical.aggregates) {
        if (agg.estimator_id != est) continue;
        (agg.k == 1 ? k1 : k3) = agg.mean_mse;
      }
      CAPTURE(est);
      CHECK(k3 < k1);
    }
  }
}

TEST_CASE("scenarios: the property ledger holds and detects faults") {
  const auto led = scenarios::verify_theory(3, 60);
  CHECK(led.rows.size() == 16);
  CHECK(led.all_pass());
  for (const auto& row : led.rows) {
    CAPTURE(row.name);
    CHECK(row.pass);
  }
  const std::string text = scenarios::format_ledger(led);
  CHECK(text.find("16/16 properties hold") != std::string::npos);
  CHECK(text.find("expanded_floor_identity") != std::string::npos);
  CHECK(text.find("decision_consistency") != std::string::npos);
  CHECK(text.find("FAIL") == std::string::npos);

  SUBCASE("an injected floor bug is caught by exactly one row") {
    const auto bad =
        scenarios::verify_theory(3, 60, scenarios::Fault::floor_bug);
    CHECK(!bad.all_pass());
    std::size_t failed = 0;
    for (const auto& row : bad.rows) {
      if (!row.pass) {
        ++failed;
        CHECK(row.name == "expanded_floor_identity");
      }
    }
    CHECK(failed == 1);
    CHECK(scenarios::format_ledger(bad).find("15/16 properties hold") !=
          std::string::npos);
  }
  SUBCASE("zero trials make no ledger") {
    CHECK_THROWS_AS(scenarios::verify_theory(3, 0), ValidationError);
  }
}

TEST_CASE("scenarios: explicit spec pairs load from json") {
  namespace fs = std::filesystem;
  const auto path = fs::temp_directory_path() / "panelkit_test_specs.json";
  {
    std::ofstream out(path);
    out << R"({
      "llm": {"mu_w": 0.08, "mu_c": 0.04, "var_eps": 0.002, "gamma": 0.05},
      "human": {"var_eps": 0.0625}
    })";
  }
  const auto [llm, human] = scenarios::load_spec_pair(path);
  CHECK(llm.mu_w == 0.08);
  CHECK(llm.mu_c == 0.04);
  CHECK(llm.var_eps == 0.002);
  CHECK(llm.gamma == 0.05);
  CHECK(human.var_eps == 0.0625);
  CHECK(human.mu_w == 0.0);

  SUBCASE("unknown keys and missing halves are rejected") {
    {
      std::ofstream out(path);
      out << R"({"llm": {"mu_w": 0.1}, "human": {}, "alien": {}})";
    }
    CHECK_THROWS_AS(scenarios::load_spec_pair(path), ValidationError);
    {
      std::ofstream out(path);
      out << R"({"llm": {"mu_w": 0.1}})";
    }
    CHECK_THROWS_AS(scenarios::load_spec_pair(path), ValidationError);
    {
      std::ofstream out(path);
      out << R"({"llm": {"gamma": 1.0}, "human": {}})";
    }
    CHECK_THROWS_AS(scenarios::load_spec_pair(path), ValidationError);
  }
  fs::remove(path);
  CHECK_THROWS_AS(scenarios::load_spec_pair(path), ValidationError);
}
