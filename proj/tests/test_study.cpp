#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "metocean/error.hpp"
#include "metocean/stats.hpp"
#include "metocean/study.hpp"

using namespace metocean;

#ifndef METOCEAN_TEST_DATA_DIR
#error "METOCEAN_TEST_DATA_DIR must point at tests/"
#endif

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json small_config() {
  return nlohmann::json::parse(R"({
    "seed": 17,
    "input": {"synthesis": {"years": 10, "time_step_hours": 1,
              "copula": {"type": "gaussian",
                         "correlation": [[1, 0.7, 0.3], [0.7, 1, 0.4], [0.3, 0.4, 1]]}}},
    "variables": ["hs", "ws", "cs"],
    "decluster": {"storm_threshold_quantile": 0.975, "separation_hours": 48},
    "monte_carlo_n": 20000,
    "direction_level": 1,
    "dependence": {"nataf_tail_quantile": 0.5},
    "empirical_check": {"quantiles": [0.5, 0.9], "resamples": 20},
    "compare_concomitant": false,
    "sensitivity_levels": [0.7],
    "bootstrap_resamples": 20,
    "diagnostic_points": 3
  })");
}

MethodResult row(const std::string& m, double level, double reference, double hs, double ws, double cs) {
  MethodResult r;
  r.method = m;
  r.return_level = level;
  r.relative_error = (level - reference) / reference;
  r.design_point.location = Eigen::Vector3d(hs, ws, cs);
  return r;
}

}  // namespace

TEST_SUITE("study") {
  TEST_CASE("config: seed is mandatory and unknown keys are rejected") {
    auto j = small_config();
    j.erase("seed");
    CHECK_THROWS_WITH_AS(StudyConfig::from_json(j), doctest::Contains("seed"), Error);
    auto zero = small_config();
    zero["seed"] = 0;
    CHECK_THROWS_AS(StudyConfig::from_json(zero), Error);
    auto extra = small_config();
    extra["colour"] = "blue";
    CHECK_THROWS_WITH_AS(StudyConfig::from_json(extra), doctest::Contains("unknown key 'colour'"), Error);
  }

  TEST_CASE("config: invalid values are rejected") {
    auto q = small_config();
    q["gpd_threshold_quantile"] = 1.2;
    CHECK_THROWS_AS(StudyConfig::from_json(q), Error);
    auto m = small_config();
    m["models"] = {"nataf", "vine"};
    CHECK_THROWS_WITH_AS(StudyConfig::from_json(m), doctest::Contains("unknown model 'vine'"), Error);
    auto v = small_config();
    v["variables"] = {"hs", "dm"};
    CHECK_THROWS_AS(StudyConfig::from_json(v), Error);
    auto b = small_config();
    b["descriptive"] = {{"bandwidth_multiplier", 0.0}};
    CHECK_THROWS_WITH_AS(StudyConfig::from_json(b), "bandwidth must be positive", Error);
  }

  TEST_CASE("config: resolved form parses back to the same settings") {
    const auto c = StudyConfig::from_json(small_config());
    const auto again = StudyConfig::from_json(c.to_json());
    CHECK(again.to_json() == c.to_json());
    CHECK(again.monte_carlo_n == 20000);
  }

  TEST_CASE("report table renders in the published layout") {
    ComparisonReport r;
    r.variables = {"hs", "ws", "cs"};
    ComparisonTable t;
    t.return_period = 100.0;
    t.reference = 3825.0;
    t.methods = {row("independence", 3557, 3825, 13.10, 25.55, 1.09),
                 row("perfect_dependence", 4273, 3825, 13.35, 33.69, 1.55),
                 row("nataf", 3858, 3825, 13.16, 31.37, 1.20),
                 row("logistic", 4093, 3825, 13.09, 32.43, 1.50),
                 row("conditional_extremes", 3740, 3825, 11.92, 31.97, 1.40)};
    r.tables = {t};
    const auto golden = slurp(std::filesystem::path(METOCEAN_TEST_DATA_DIR) / "golden" / "report_table3.md");
    CHECK(render_report_markdown(r) == golden);

    const auto j = report_to_json(r);
    CHECK(j["schema_version"] == 1);
    REQUIRE(j["tables"].size() == 1);
    CHECK(j["tables"][0]["methods"][1]["relative_error_percent"] == 12);
    CHECK(j["tables"][0]["methods"][5 - 1]["method"] == "conditional_extremes");
  }

  TEST_CASE("a concomitant qualifier is added to the headings") {
    ComparisonReport r;
    r.variables = {"hs", "ws"};
    ComparisonTable t;
    t.return_period = 50.0;
    t.concomitant = "componentwise_max";
    t.reference = 100.0;
    MethodResult m;
    m.method = "independence";
    m.return_level = 100.2;
    m.design_point.location = Eigen::Vector2d(1.0, 2.0);
    t.methods = {m};
    r.tables = {t};
    const auto md = render_report_markdown(r);
    CHECK(md.find("50-year return level [concomitant: componentwise_max]") != std::string::npos);
    CHECK(md.find("| Independence | 100 | 0% |") != std::string::npos);
  }

  TEST_CASE("descriptive statistics write one file per variable, pair and series") {
    Rng rng(1);
    std::vector<double> hs, ws, cs;
    for (int i = 0; i < 3000; ++i) {
      hs.push_back(1.0 + standard_exponential(rng));
      ws.push_back(5.0 + 10.0 * uniform01(rng));
      cs.push_back(uniform01(rng));
    }
    const auto data = testing::hourly_dataset(hs, ws, cs);
    const auto dir = testing::scratch_dir("descriptive");
    DescriptiveOptions opt;
    const auto files = emit_descriptive_stats(data, MetaModelParams::synthetic_defaults(), opt, dir);
    CHECK(files.size() == 3 + 3 + 1);
    for (const auto& f : files) CHECK(std::filesystem::exists(f));
    const auto hist = nlohmann::json::parse(slurp(dir / "hist_hs.json"));
    std::size_t total = 0;
    for (const auto& c : hist["counts"]) total += c.get<std::size_t>();
    CHECK(total == 3000);

    opt.variables.clear();
    CHECK_THROWS_WITH_AS(emit_descriptive_stats(data, MetaModelParams::synthetic_defaults(), opt, dir),
                         "empty variable selection", Error);
    opt.variables = {"hs"};
    opt.bandwidth_multiplier = -1.0;
    CHECK_THROWS_WITH_AS(emit_descriptive_stats(data, MetaModelParams::synthetic_defaults(), opt, dir),
                         "bandwidth must be positive", Error);
  }

  TEST_CASE("reference fit equals the hand-assembled response pipeline") {
    const auto c = StudyConfig::from_json(small_config());
    const auto data = study_dataset(c);
    const auto fit = reference_fit(data, c);

    const auto rows = evaluate_batch(data, c.metamodel);
    std::vector<SeaStateRecord> recs;
    std::vector<double> response;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      SeaStateRecord r;
      r.timestamp = data.records()[i].timestamp;
      r.hs = rows[i].t_max;
      recs.push_back(r);
      response.push_back(rows[i].t_max);
    }
    const Dataset series(std::move(recs), data.time_step(), {Field::Hs});
    const auto cm = decluster(series, Field::Hs, c.decluster, {});
    const double u = stats::quantile_linear(response, c.gpd_threshold_quantile);
    const auto manual = fit_pot(cm.column(0), u, cm.years);
    CHECK(fit.threshold == doctest::Approx(manual.threshold).epsilon(1e-9));
    CHECK(fit.scale == doctest::Approx(manual.scale).epsilon(1e-9));
    CHECK(fit.shape == doctest::Approx(manual.shape).epsilon(1e-9));
    CHECK(fit.rate == doctest::Approx(manual.rate).epsilon(1e-9));
  }

  TEST_CASE("a small study writes every artifact") {
    auto j = small_config();
    const auto dir = testing::scratch_dir("small_study");
    j["output_dir"] = dir.string();
    const auto report = run_study(StudyConfig::from_json(j));
    REQUIRE(report.tables.size() == 1);
    CHECK(report.tables[0].methods.size() == 5);
    for (const char* f : {"config_resolved.json", "dataset.csv", "gaps.json", "gpd_table.json", "return_levels.json",
                          "threshold_diagnostics.json", "events.csv", "margins.json", "sensitivity.json",
                          "model_nataf.json", "contour_logistic_T100.json", "contour_logistic_T100.obj",
                          "design_points_T100.csv", "empirical_check.json", "report.json", "report.md"}) {
      INFO(f);
      CHECK(std::filesystem::exists(dir / f));
    }
    CHECK(slurp(dir / "report.md") == render_report_markdown(report));
  }

  TEST_CASE("stage failures name the stage") {
    auto j = small_config();
    j["input"] = {{"csv", "/nonexistent/metocean.csv"}};
    j["output_dir"] = testing::scratch_dir("failing_study").string();
    try {
      run_study(StudyConfig::from_json(j));
      FAIL("expected a stage error");
    } catch (const StageError& e) {
      CHECK(e.stage() == "ingest");
    }
  }
}
