#include "panelkit/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>

#include <json.hpp>

#include "detail_sum.hpp"
#include "panelkit/errors.hpp"
#include "panelkit/rng.hpp"
#include "panelkit/stats.hpp"

namespace panelkit::scenarios {

using nlohmann::json;

void Scenario::validate() const {
  if (name.empty()) throw ValidationError("scenario needs a name");
  if (items.empty()) throw ValidationError("scenario needs at least one item");
  if (estimators.empty())
    throw ValidationError("scenario needs at least one estimator");
  if (budgets.empty())
    throw ValidationError("scenario needs at least one budget");
  for (std::uint64_t k : budgets)
    if (k < 1) throw ValidationError("budget k must be at least 1");
  if (replications < 1)
    throw ValidationError("scenario needs at least one replication");
  for (const auto& m : items) mixture::validate(m);
  for (const auto& [id, spec] : estimators) {
    if (id.empty()) throw ValidationError("estimator id must be nonempty");
    annotator::validate(spec);
  }
}

namespace {

std::string item_label(std::size_t idx) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "item_%03zu", idx);
  return buf;
}

void require_keys(const json& j,
                  std::initializer_list<const char*> allowed,
                  const std::string& where, const std::string& source) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* a : allowed)
      if (it.key() == a) {
        known = true;
        break;
      }
    if (!known)
      throw ValidationError(source + ": unknown field '" + it.key() +
                            "' in " + where);
  }
}

std::uint64_t get_u64(const json& j, const char* field,
                      const std::string& source) {
  const auto& v = j.at(field);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<std::int64_t>() >= 0)
    return static_cast<std::uint64_t>(v.get<std::int64_t>());
  throw ValidationError(source + ": field '" + std::string(field) +
                        "' must be a non-negative integer");
}

json mixture_to_json(const mixture::MixtureSpec& m) {
  json communities = json::array();
  for (const auto& c : m.communities)
    communities.push_back({{"weight", c.weight}, {"mean", c.mean}});
  return {{"label_model", m.label_model == mixture::LabelModel::bernoulli
                              ? "bernoulli"
                              : "deterministic"},
          {"communities", communities}};
}

mixture::MixtureSpec mixture_from_json(const json& j,
                                       const std::string& source) {
  require_keys(j, {"label_model", "communities"}, "an item", source);
  mixture::MixtureSpec m;
  std::string model = j.value("label_model", "bernoulli");
  if (model == "bernoulli") {
    m.label_model = mixture::LabelModel::bernoulli;
  } else if (model == "deterministic") {
    m.label_model = mixture::LabelModel::deterministic;
  } else {
    throw ValidationError(source + ": unknown label_model '" + model + "'");
  }
  for (const auto& c : j.at("communities")) {
    require_keys(c, {"weight", "mean"}, "a community", source);
    m.communities.push_back(mixture::Community{c.at("weight").get<double>(),
                                               c.at("mean").get<double>()});
  }
  return m;
}

json annotator_to_json(const annotator::AnnotatorSpec& a) {
  return {{"mu_w", a.mu_w},     {"mu_c", a.mu_c},
          {"var_w", a.var_w},   {"var_c", a.var_c},
          {"cov_wc", a.cov_wc}, {"var_eps", a.var_eps},
          {"gamma", a.gamma}};
}

annotator::AnnotatorSpec annotator_from_json(const json& j,
                                             const std::string& source) {
  require_keys(j,
               {"mu_w", "mu_c", "var_w", "var_c", "cov_wc", "var_eps",
                "gamma"},
               "an estimator", source);
  annotator::AnnotatorSpec a;
  a.mu_w = j.value("mu_w", 0.0);
  a.mu_c = j.value("mu_c", 0.0);
  a.var_w = j.value("var_w", 0.0);
  a.var_c = j.value("var_c", 0.0);
  a.cov_wc = j.value("cov_wc", 0.0);
  a.var_eps = j.value("var_eps", 0.0);
  a.gamma = j.value("gamma", 0.0);
  return a;
}

json scenario_to_json(const Scenario& s) {
  json items = json::array();
  for (const auto& m : s.items) items.push_back(mixture_to_json(m));
  json estimators = json::object();
  for (const auto& [id, spec] : s.estimators)
    estimators[id] = annotator_to_json(spec);
  return {{"schema_version", 1},
          {"name", s.name},
          {"seed", s.seed},
          {"replications", s.replications},
          {"clip", s.clip},
          {"budgets", s.budgets},
          {"items", items},
          {"estimators", estimators}};
}

}  // namespace

std::string to_json_string(const Scenario& s, int indent) {
  return scenario_to_json(s).dump(indent) + "\n";
}

Scenario scenario_from_json_string(const std::string& text,
                                   const std::string& source) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  try {
    require_keys(j,
                 {"schema_version", "name", "seed", "replications", "clip",
                  "budgets", "items", "estimators"},
                 "the scenario", source);
    if (get_u64(j, "schema_version", source) != 1)
      throw ValidationError(source + ": unsupported schema_version");
    Scenario s;
    s.name = j.at("name").get<std::string>();
    s.seed = get_u64(j, "seed", source);
    s.replications = get_u64(j, "replications", source);
    s.clip = j.value("clip", false);
    for (const auto& b : j.at("budgets")) {
      if (!b.is_number_unsigned() &&
          !(b.is_number_integer() && b.get<std::int64_t>() > 0))
        throw ValidationError(source + ": budgets must be positive integers");
      s.budgets.push_back(b.get<std::uint64_t>());
    }
    for (const auto& item : j.at("items"))
      s.items.push_back(mixture_from_json(item, source));
    for (const auto& [id, spec] : j.at("estimators").items())
      s.estimators[id] = annotator_from_json(spec, source);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open scenario file '" + path.string() +
                          "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json_string(buf.str(), path.string());
}

void save_scenario(const std::filesystem::path& path, const Scenario& s) {
  s.validate();
  std::ofstream out(path);
  if (!out)
    throw ValidationError("cannot write scenario file '" + path.string() +
                          "'");
  out << to_json_string(s);
}

std::pair<annotator::AnnotatorSpec, annotator::AnnotatorSpec> load_spec_pair(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open spec file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string source = path.string();
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
  try {
    require_keys(j, {"llm", "human"}, "the spec pair", source);
    auto llm = annotator_from_json(j.at("llm"), source);
    auto human = annotator_from_json(j.at("human"), source);
    annotator::validate(llm);
    annotator::validate(human);
    return {llm, human};
  } catch (const json::exception& e) {
    throw ValidationError(source + ": " + e.what());
  }
}

ScenarioResult run_scenario(const Scenario& s, unsigned threads) {
  s.validate();
  ScenarioResult result;
  result.scenario = s;

  std::vector<double> f_stars(s.items.size());
  std::vector<std::string> item_ids(s.items.size());
  for (std::size_t i = 0; i < s.items.size(); ++i) {
    f_stars[i] = mixture::target_mean(s.items[i]);
    item_ids[i] = item_label(i);
  }

  struct Job {
    std::size_t item;
    const std::string* estimator_id;
    const annotator::AnnotatorSpec* spec;
    std::uint64_t k;
  };
  std::vector<Job> jobs;
  for (const auto& [id, spec] : s.estimators)
    for (std::uint64_t k : s.budgets)
      for (std::size_t i = 0; i < s.items.size(); ++i)
        jobs.push_back(Job{i, &id, &spec, k});

  std::vector<bootstrap::ItemMetrics> rows(jobs.size());
  auto run_range = [&](std::size_t lo, std::size_t hi) {
    std::vector<double> draws;
    for (std::size_t j = lo; j < hi; ++j) {
      const Job& job = jobs[j];
      auto stream = rng::SubstreamKey{}
                        .with("scenario")
                        .with(item_ids[job.item])
                        .with(*job.estimator_id)
                        .with(job.k)
                        .stream(s.seed);
      draws.clear();
      draws.reserve(s.replications);
      for (std::uint64_t r = 0; r < s.replications; ++r) {
        auto panel = annotator::sample_panel(*job.spec, f_stars[job.item],
                                             job.k, stream, s.clip);
        draws.push_back(annotator::aggregate(panel));
      }
      auto m = bootstrap::metrics_from_draws(draws, f_stars[job.item]);
      m.item_id = item_ids[job.item];
      m.group_id = "sim";
      m.estimator_id = *job.estimator_id;
      m.k = job.k;
      rows[j] = std::move(m);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || jobs.size() < 2) {
    run_range(0, jobs.size());
  } else {
    std::vector<std::future<void>> futures;
    std::size_t chunk = (jobs.size() + threads - 1) / threads;
    for (std::size_t lo = 0; lo < jobs.size(); lo += chunk)
      futures.push_back(std::async(std::launch::async, run_range, lo,
                                   std::min(lo + chunk, jobs.size())));
    for (auto& f : futures) f.get();
  }

  bootstrap::Provenance prov;
  prov.B = s.replications;
  prov.seed = s.seed;
  prov.k_range = s.budgets;
  prov.n_pools = s.items.size() * s.estimators.size();
  prov.n_evaluated = prov.n_pools;
  result.empirical = bootstrap::assemble_report(std::move(rows), prov);

  for (const auto& [id, spec] : s.estimators)
    for (std::uint64_t k : s.budgets)
      result.analytic[{id, k}] = analytics::analytic_mse(spec, k);

  for (const auto& agg : result.empirical.aggregates) {
    const auto& breakdown = result.analytic.at({agg.estimator_id, agg.k});
    double gap = std::abs(agg.mean_mse - breakdown.total);
    result.agreement[{agg.estimator_id, agg.k}] =
        breakdown.total > 0.0 ? gap / breakdown.total : gap;
  }
  return result;
}

namespace {

mixture::MixtureSpec two_community(double w1, double f1, double w2,
                                   double f2) {
  mixture::MixtureSpec m;
  m.communities = {mixture::Community{w1, f1}, mixture::Community{w2, f2}};
  return m;
}

annotator::AnnotatorSpec make_spec(double mu_w, double mu_c, double var_w,
                                   double var_c, double cov_wc,
                                   double var_eps, double gamma) {
  annotator::AnnotatorSpec a;
  a.mu_w = mu_w;
  a.mu_c = mu_c;
  a.var_w = var_w;
  a.var_c = var_c;
  a.cov_wc = cov_wc;
  a.var_eps = var_eps;
  a.gamma = gamma;
  return a;
}

}  // namespace

Scenario preset_h1() {
  // A biased but tight estimator against unbiased high-variance labels:
  // the tight one wins at k=1 and stays ahead until the crowd reaches
  // k=4 (analytic crossover 0.0625/k < 0.0164).
  Scenario s;
  s.name = "h1_single_sample_advantage";
  s.items = {two_community(0.6, 0.35, 0.4, 0.65),
             two_community(0.5, 0.2, 0.5, 0.6),
             two_community(0.3, 0.15, 0.7, 0.55)};
  s.estimators["llm_pt"] = make_spec(0.08, 0.04, 0.0, 0.0, 0.0, 0.002, 0.05);
  s.estimators["human_direct"] =
      make_spec(0.0, 0.0, 0.0, 0.0, 0.0, 0.0625, 0.0);
  s.budgets = {1, 2, 3, 4, 5, 6, 7, 8};
  s.replications = 200000;
  s.seed = 7;
  return s;
}

Scenario preset_h2() {
  // Same-direction systematic errors for the out-group profile: the mean
  // coupling term is positive and its floor tops the in-group floor.
  Scenario s;
  s.name = "h2_outgroup_coupling";
  s.items = {two_community(0.5, 0.3, 0.5, 0.7),
             two_community(0.7, 0.25, 0.3, 0.6)};
  s.estimators["human_ingroup"] =
      make_spec(0.0, 0.02, 0.004, 0.004, 0.0, 0.03, 0.15);
  s.estimators["human_outgroup"] =
      make_spec(0.06, 0.05, 0.006, 0.006, 0.003, 0.03, 0.25);
  s.budgets = {1, 2, 3, 4, 5, 6};
  s.replications = 100000;
  s.seed = 11;
  return s;
}

Scenario preset_h3() {
  // Mismatch ladder: each estimator's systematic error equals the
  // misrepresentation bias of an internal weighting that drifts further
  // from the true (0.2, 0.3, 0.5) weights — chi-squared divergences 0,
  // 0.07, ~0.40, ~1.01 — so reported error must climb along the ladder.
  Scenario s;
  s.name = "h3_representation_mismatch";
  mixture::MixtureSpec m;
  m.communities = {mixture::Community{0.2, 0.9}, mixture::Community{0.3, 0.5},
                   mixture::Community{0.5, 0.15}};
  s.items = {m};
  s.estimators["mismatch_00"] =
      make_spec(0.0, 0.0, 0.0, 0.0, 0.0, 0.005, 0.1);
  s.estimators["mismatch_01"] =
      make_spec(0.075, 0.0, 0.0, 0.0, 0.0, 0.005, 0.1);
  s.estimators["mismatch_02"] =
      make_spec(0.17, 0.0, 0.0, 0.0, 0.0, 0.005, 0.1);
  s.estimators["mismatch_03"] =
      make_spec(0.265, 0.0, 0.0, 0.0, 0.0, 0.005, 0.1);
  s.budgets = {1, 4};
  s.replications = 100000;
  s.seed = 13;
  return s;
}

Scenario preset_h4() {
  // One representation profile, three processing profiles: floors move
  // with the processing choice alone.
  Scenario s;
  s.name = "h4_model_choice";
  s.items = {two_community(0.5, 0.3, 0.5, 0.7),
             two_community(0.7, 0.25, 0.3, 0.6)};
  s.estimators["model_a"] =
      make_spec(0.03, 0.05, 0.001, 0.002, 0.0005, 0.004, 0.2);
  s.estimators["model_b"] =
      make_spec(0.03, -0.02, 0.001, 0.001, -0.0005, 0.003, 0.1);
  s.estimators["model_c"] =
      make_spec(0.03, 0.0, 0.001, 0.0005, 0.0, 0.01, 0.05);
  s.budgets = {1, 2, 3, 4, 5, 6};
  s.replications = 100000;
  s.seed = 17;
  return s;
}

std::vector<Scenario> all_presets() {
  return {preset_h1(), preset_h2(), preset_h3(), preset_h4()};
}

bool Ledger::all_pass() const {
  return std::all_of(rows.begin(), rows.end(),
                     [](const LedgerRow& r) { return r.pass; });
}

namespace {

LedgerRow make_row(std::string name, std::uint64_t trials, double violation,
                   double tolerance) {
  LedgerRow row;
  row.name = std::move(name);
  row.trials = trials;
  row.max_violation = violation;
  row.tolerance = tolerance;
  row.pass = violation <= tolerance;
  return row;
}

rng::SubstreamKey row_key(std::string_view row_name) {
  return rng::SubstreamKey{}.with("verify").with(row_name);
}

mixture::MixtureSpec random_mixture(rng::Stream& st, std::size_t min_c,
                                    std::size_t max_c) {
  std::size_t n = min_c + st.below(max_c - min_c + 1);
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& x : w) {
    x = 0.05 + st.uniform();
    sum += x;
  }
  mixture::MixtureSpec m;
  for (std::size_t i = 0; i < n; ++i)
    m.communities.push_back(mixture::Community{w[i] / sum, st.uniform()});
  return m;
}

mixture::InternalMixture random_internal(rng::Stream& st, std::size_t n) {
  std::vector<double> q(n);
  double sum = 0.0;
  for (double& x : q) {
    x = 0.05 + st.uniform();
    sum += x;
  }
  for (double& x : q) x /= sum;
  return mixture::InternalMixture{std::move(q)};
}

annotator::AnnotatorSpec random_annotator(rng::Stream& st) {
  annotator::AnnotatorSpec a;
  a.mu_w = (st.uniform() - 0.5) * 0.4;
  a.mu_c = (st.uniform() - 0.5) * 0.4;
  a.var_w = st.uniform() * 0.05;
  a.var_c = st.uniform() * 0.05;
  double rho = (st.uniform() * 2.0 - 1.0) * 0.95;
  a.cov_wc = rho * std::sqrt(a.var_w * a.var_c);
  a.var_eps = 0.001 + st.uniform() * 0.05;  // keeps V strictly positive
  a.gamma = st.uniform() * 0.9;
  return a;
}

// standard error of a Monte Carlo MSE estimate over N panel aggregates:
// the aggregate is mu + s Z, so Var((mu + s Z)^2) = 4 mu^2 s^2 + 2 s^4
double mse_mc_se(const annotator::AnnotatorSpec& a, std::uint64_t k,
                 std::uint64_t n_panels) {
  double v = annotator::total_variance(a);
  double s2 = a.gamma * v + (1.0 - a.gamma) * v / static_cast<double>(k);
  double mu = annotator::total_bias(a);
  return std::sqrt((4.0 * mu * mu * s2 + 2.0 * s2 * s2) /
                   static_cast<double>(n_panels));
}

double empirical_mse(const annotator::AnnotatorSpec& a, double f_star,
                     std::uint64_t k, std::uint64_t n_panels,
                     rng::Stream& st) {
  double acc = 0.0;
  for (std::uint64_t r = 0; r < n_panels; ++r) {
    auto panel = annotator::sample_panel(a, f_star, k, st);
    double e = annotator::aggregate(panel) - f_star;
    acc += e * e;
  }
  return acc / static_cast<double>(n_panels);
}

}  // namespace

Ledger verify_theory(std::uint64_t seed, std::uint64_t trials, Fault fault) {
  if (trials < 1)
    throw ValidationError("verification needs at least one trial");

  Ledger led;

  {  // target mean stays inside the hull of the community means
    auto st = row_key("target-mean").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto m = random_mixture(st, 2, 5);
      double f = mixture::target_mean(m);
      double lo = 1.0, hi = 0.0;
      for (const auto& c : m.communities) {
        lo = std::min(lo, c.mean);
        hi = std::max(hi, c.mean);
      }
      viol = std::max({viol, lo - f, f - hi});
    }
    led.rows.push_back(make_row("target_mean_in_hull", trials, viol, 1e-12));
  }

  {  // between-community variance bounded by 1/4 for [0,1] means
    auto st = row_key("v-hetero").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto m = random_mixture(st, 2, 5);
      viol = std::max(viol, mixture::v_hetero(m) - 0.25);
    }
    led.rows.push_back(make_row("v_hetero_bounded", trials, viol, 1e-12));
  }

  {  // the raw and centered misrepresentation forms agree
    auto st = row_key("repr-forms").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto m = random_mixture(st, 2, 5);
      auto q = random_internal(st, m.communities.size());
      viol = std::max(viol, std::abs(mixture::repr_bias(m, q) -
                                     mixture::repr_bias_centered(m, q)));
    }
    led.rows.push_back(make_row("repr_bias_two_forms", trials, viol, 1e-12));
  }

  {  // bias^2 <= heterogeneity * divergence on random pairs
    auto st = row_key("repr-bound").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto m = random_mixture(st, 2, 5);
      auto q = random_internal(st, m.communities.size());
      auto bc = mixture::check_repr_bound(m, q);
      viol = std::max(viol, bc.lhs - bc.rhs);
      if (!bc.holds) viol = std::max(viol, 1.0);
    }
    led.rows.push_back(make_row("repr_bound_random", trials, viol, 1e-12));
  }

  {  // the Cauchy-Schwarz equality construction is tight
    auto st = row_key("repr-equality").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto m = random_mixture(st, 2, 5);
      double f = mixture::target_mean(m);
      double maxdev = 0.0;
      for (const auto& c : m.communities)
        maxdev = std::max(maxdev, std::abs(c.mean - f));
      double lambda =
          maxdev < 1e-9 ? 0.0 : (0.1 + 0.8 * st.uniform()) / maxdev;
      mixture::InternalMixture q;
      for (const auto& c : m.communities)
        q.weights.push_back(c.weight + lambda * c.weight * (c.mean - f));
      auto bc = mixture::check_repr_bound(m, q);
      viol = std::max(viol, std::abs(bc.slack));
    }
    led.rows.push_back(
        make_row("repr_bound_equality_case", trials, viol, 1e-12));
  }

  {  // sampled 0/1 label variance = between + within community spread
    auto st = row_key("label-variance").stream(seed);
    const std::uint64_t n_mix = 3, n_draws = 1000000;
    double viol = 0.0;
    for (std::uint64_t t = 0; t < n_mix; ++t) {
      auto m = random_mixture(st, 2, 4);
      auto labels = mixture::sample_direct_labels(m, n_draws, st);
      double p = 0.0;
      for (int y : labels) p += y;
      p /= static_cast<double>(n_draws);
      viol = std::max(viol,
                      std::abs(p * (1.0 - p) - mixture::population_spread(m)));
    }
    led.rows.push_back(make_row("direct_label_variance", n_mix, viol, 0.003));
  }

  {  // sampled aggregate mean and variance match the closed forms
    auto st = row_key("aggregate-moments").stream(seed);
    const std::uint64_t n_specs = 4, n_panels = 100000;
    double viol_bias = 0.0, viol_var = 0.0;
    for (std::uint64_t t = 0; t < n_specs; ++t) {
      auto a = random_annotator(st);
      std::uint64_t k = 2 + st.below(6);
      double f_star = 0.3 + 0.4 * st.uniform();
      std::vector<double> aggs;
      aggs.reserve(n_panels);
      for (std::uint64_t r = 0; r < n_panels; ++r) {
        auto panel = annotator::sample_panel(a, f_star, k, st);
        aggs.push_back(annotator::aggregate(panel));
      }
      double mean_emp = stats::mean(aggs);
      double var_emp = stats::variance(aggs, mean_emp);
      double se_mean = std::sqrt(var_emp / static_cast<double>(n_panels));
      viol_bias = std::max(
          viol_bias, std::abs(mean_emp - (f_star + annotator::total_bias(a))) /
                         se_mean);
      double v = annotator::total_variance(a);
      double var_true =
          a.gamma * v + (1.0 - a.gamma) * v / static_cast<double>(k);
      viol_var = std::max(viol_var, std::abs(var_emp / var_true - 1.0));
    }
    led.rows.push_back(make_row("aggregate_bias", n_specs, viol_bias, 3.0));
    led.rows.push_back(make_row("aggregate_variance", n_specs, viol_var,
                                0.02));
  }

  {  // the equicorrelated residual matrix factors (positive definite)
    auto st = row_key("psd").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      double gamma = st.uniform() * 0.99;
      std::size_t k = 2 + st.below(11);
      std::vector<std::vector<double>> c(k, std::vector<double>(k, gamma));
      for (std::size_t i = 0; i < k; ++i) c[i][i] = 1.0;
      double min_pivot = 1.0;
      for (std::size_t i = 0; i < k; ++i) {  // in-place Cholesky
        double pivot = c[i][i];
        for (std::size_t j = 0; j < i; ++j) pivot -= c[i][j] * c[i][j];
        min_pivot = std::min(min_pivot, pivot);
        if (pivot <= 0.0) break;
        double root = std::sqrt(pivot);
        c[i][i] = root;
        for (std::size_t r = i + 1; r < k; ++r) {
          double value = c[r][i];
          for (std::size_t j = 0; j < i; ++j) value -= c[r][j] * c[i][j];
          c[r][i] = value / root;
        }
      }
      viol = std::max(viol, -min_pivot);
    }
    led.rows.push_back(make_row("exchangeable_psd", trials, viol, 0.0));
  }

  {  // idiosyncratic noise draws are uncorrelated with the bias draws
    auto st = row_key("orthogonality").stream(seed);
    const std::uint64_t n_specs = 3, n_panels = 100000;
    double viol = 0.0;
    for (std::uint64_t t = 0; t < n_specs; ++t) {
      auto a = random_annotator(st);
      a.var_w = 0.01 + st.uniform() * 0.04;
      a.var_c = 0.01 + st.uniform() * 0.04;
      double rho = (st.uniform() * 2.0 - 1.0) * 0.9;
      a.cov_wc = rho * std::sqrt(a.var_w * a.var_c);
      std::vector<double> b, e;
      b.reserve(n_panels);
      e.reserve(n_panels);
      for (std::uint64_t r = 0; r < n_panels; ++r) {
        auto parts = annotator::sample_panel_components(a, 1, st);
        b.push_back(parts.repr[0] + parts.proc[0]);
        e.push_back(parts.noise[0]);
      }
      double mb = stats::mean(b), me = stats::mean(e);
      double cov = 0.0;
      for (std::uint64_t r = 0; r < n_panels; ++r)
        cov += (b[r] - mb) * (e[r] - me);
      cov /= static_cast<double>(n_panels);
      double se = std::sqrt(stats::variance(b, mb) * stats::variance(e, me) /
                            static_cast<double>(n_panels));
      viol = std::max(viol, std::abs(cov) / se);
    }
    led.rows.push_back(make_row("noise_orthogonality", n_specs, viol, 3.0));
  }

  {  // the budget curve never rises, and falls while V > 0
    auto st = row_key("monotone").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto a = random_annotator(st);
      double prev = analytics::analytic_mse(a, 1).total;
      for (std::uint64_t k = 2; k <= 30; ++k) {
        double cur = analytics::analytic_mse(a, k).total;
        if (!(cur < prev))  // generator guarantees V > 0, so strict
          viol = std::max(viol,
                          std::max(cur - prev,
                                   std::numeric_limits<double>::min()));
        prev = cur;
      }
    }
    led.rows.push_back(make_row("mse_monotone_in_k", trials, viol, 0.0));
  }

  {  // total - floor is the reducible share, bit for bit
    auto st = row_key("floor-gap").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto a = random_annotator(st);
      double floor = analytics::error_floor(a);
      for (std::uint64_t k : {std::uint64_t{1}, std::uint64_t{2},
                              std::uint64_t{3}, std::uint64_t{7},
                              std::uint64_t{50}, std::uint64_t{10000}}) {
        auto mse = analytics::analytic_mse(a, k);
        viol = std::max(viol,
                        std::abs(mse.total -
                                 (floor + mse.reducible_variance)));
        double reducible = ((1.0 - a.gamma) * annotator::total_variance(a)) /
                           static_cast<double>(k);
        viol = std::max(viol, std::abs(mse.reducible_variance - reducible));
      }
    }
    led.rows.push_back(make_row("floor_gap_exact", trials, viol, 0.0));
  }

  {  // the expanded floor re-derivation equals the direct floor
    auto st = row_key("expanded-floor").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto a = random_annotator(st);
      double expanded = analytics::expanded_floor(a).total;
      if (fault == Fault::floor_bug) expanded += 1e-3;
      double floor = analytics::error_floor(a);
      viol = std::max(viol, std::abs(expanded - floor) /
                                std::max(floor, 1e-300));
    }
    led.rows.push_back(
        make_row("expanded_floor_identity", trials, viol, 1e-15));
  }

  {  // (mu_w + mu_c)^2 = mu_w^2 + mu_c^2 + i_mean at working precision
    auto st = row_key("coupling").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto a = random_annotator(st);
      auto c = analytics::coupling(a);
      double lhs = analytics::analytic_mse(a, 1).bias_sq;
      auto rhs = detail::dd_add(
          detail::dd_add(detail::two_prod(a.mu_w, a.mu_w),
                         detail::two_prod(a.mu_c, a.mu_c)),
          c.i_mean);
      double scale = a.mu_w * a.mu_w + a.mu_c * a.mu_c + std::abs(c.i_mean);
      viol = std::max(viol, std::abs(detail::dd_value(rhs) - lhs) /
                                std::max(scale, 1e-300));
    }
    led.rows.push_back(
        make_row("bias_coupling_identity", trials, viol, 2e-15));
  }

  {  // negating both bias means changes nothing downstream
    auto st = row_key("sign-flip").stream(seed);
    double viol = 0.0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      auto a = random_annotator(st);
      auto h = random_annotator(st);
      auto flip = [](annotator::AnnotatorSpec s) {
        s.mu_w = -s.mu_w;
        s.mu_c = -s.mu_c;
        return s;
      };
      auto fa = flip(a), fh = flip(h);
      for (std::uint64_t k : {std::uint64_t{1}, std::uint64_t{4}}) {
        auto m1 = analytics::analytic_mse(a, k);
        auto m2 = analytics::analytic_mse(fa, k);
        viol = std::max({viol, std::abs(m1.bias_sq - m2.bias_sq),
                         std::abs(m1.correlation_floor - m2.correlation_floor),
                         std::abs(m1.reducible_variance -
                                  m2.reducible_variance),
                         std::abs(m1.total - m2.total)});
      }
      viol = std::max(viol, std::abs(analytics::error_floor(a) -
                                     analytics::error_floor(fa)));
      auto d1 = analytics::superiority(a, h, analytics::Budget::finite(2),
                                       analytics::Budget::finite(3));
      auto d2 = analytics::superiority(fa, fh, analytics::Budget::finite(2),
                                       analytics::Budget::finite(3));
      if (d1.winner != d2.winner) viol = std::max(viol, 1.0);
    }
    led.rows.push_back(make_row("sign_flip_invariance", trials, viol, 0.0));
  }

  {  // the analytic winner agrees with Monte Carlo when the margin is wide
    const std::uint64_t target_pairs =
        std::max<std::uint64_t>(10, trials / 200);
    const std::uint64_t n_panels = 20000;
    auto st = row_key("decision").stream(seed);
    std::uint64_t checked = 0, mismatches = 0, attempts = 0;
    while (checked < target_pairs && attempts < target_pairs * 50) {
      ++attempts;
      auto a = random_annotator(st);
      auto h = random_annotator(st);
      std::uint64_t m = 1 + st.below(8);
      std::uint64_t n = 1 + st.below(8);
      auto decision = analytics::superiority(a, h, analytics::Budget::finite(m),
                                             analytics::Budget::finite(n));
      double se = std::hypot(mse_mc_se(a, m, n_panels),
                             mse_mc_se(h, n, n_panels));
      if (std::abs(decision.margin) <= 5.0 * se) continue;
      ++checked;
      auto sa = row_key("decision-mc").with(attempts).with("llm").stream(seed);
      auto sh =
          row_key("decision-mc").with(attempts).with("human").stream(seed);
      double emp_a = empirical_mse(a, 0.5, m, n_panels, sa);
      double emp_h = empirical_mse(h, 0.5, n, n_panels, sh);
      auto emp_winner =
          emp_a < emp_h ? analytics::Winner::llm : analytics::Winner::human;
      if (emp_winner != decision.winner) ++mismatches;
    }
    led.rows.push_back(make_row("decision_consistency", checked,
                                static_cast<double>(mismatches), 0.0));
  }

  return led;
}

std::string format_ledger(const Ledger& ledger) {
  std::string out;
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-28s %10s %15s %12s  %s\n", "property",
                "trials", "max_violation", "tolerance", "status");
  out += buf;
  std::size_t passed = 0;
  for (const auto& row : ledger.rows) {
    std::snprintf(buf, sizeof(buf), "%-28s %10llu %15.3e %12.1e  %s\n",
                  row.name.c_str(),
                  static_cast<unsigned long long>(row.trials),
                  row.max_violation, row.tolerance,
                  row.pass ? "PASS" : "FAIL");
    out += buf;
    if (row.pass) ++passed;
  }
  std::snprintf(buf, sizeof(buf), "%zu/%zu properties hold\n", passed,
                ledger.rows.size());
  out += buf;
  return out;
}

}  // namespace panelkit::scenarios
