#include "metocean/study.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <fstream>
#include <set>
#include <sstream>

#include "metocean/error.hpp"
#include "metocean/margins.hpp"
#include "metocean/random.hpp"
#include "metocean/stats.hpp"

namespace metocean {

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << text;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

template <class F>
auto stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(name, e.what());
  }
}

std::vector<double> finite_values(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v) {
    if (std::isfinite(x)) out.push_back(x);
  }
  return out;
}

std::string period_tag(double t) { return fmt::format("T{:g}", t); }

MultiSeries single_series(const Dataset& data, const std::string& name, std::vector<double> column) {
  MultiSeries s;
  s.times = data.times();
  s.step = data.time_step();
  s.span_start = data.start();
  s.span_end = data.end();
  s.names = {name};
  s.columns = {std::move(column)};
  return s;
}

DeclusterConfig parse_decluster(const nlohmann::json& j, DeclusterConfig c) {
  c.storm_threshold_quantile = j.value("storm_threshold_quantile", c.storm_threshold_quantile);
  if (j.contains("separation_hours")) {
    c.separation = std::chrono::seconds{std::llround(j.at("separation_hours").get<double>() * 3600.0)};
  }
  if (j.contains("concomitant")) {
    const auto s = j.at("concomitant").get<std::string>();
    if (s == "at_peak") {
      c.concomitant = ConcomitantRule::AtPeak;
    } else if (s == "componentwise_max") {
      c.concomitant = ConcomitantRule::ComponentwiseMax;
    } else {
      throw Error(fmt::format("unknown concomitant rule '{}'", s));
    }
  }
  return c;
}

std::vector<double> period_grid(double rate, const std::vector<double>& extra) {
  std::set<double> periods{2, 5, 10, 20, 50, 100, 200, 500, 1000};
  periods.insert(extra.begin(), extra.end());
  std::vector<double> out;
  for (double t : periods) {
    if (rate * t > 1.0) out.push_back(t);
  }
  return out;
}

}  // namespace

void StudyConfig::validate() const {
  if (seed == 0) throw Error("study config: a non-zero seed is mandatory");
  if (!synthesis && input_csv.empty()) throw Error("study config: either input.csv or input.synthesis is required");
  if (variables.size() != 2 && variables.size() != 3) throw Error("study config: select 2 or 3 variables");
  for (const auto& v : variables) {
    if (is_direction(parse_field(v))) throw Error(fmt::format("study config: '{}' is a direction", v));
  }
  auto prob = [](double p, const char* what) {
    if (!(p > 0.0 && p < 1.0)) throw Error(fmt::format("study config: {} must lie in (0, 1)", what));
  };
  prob(decluster.storm_threshold_quantile, "decluster.storm_threshold_quantile");
  prob(gpd_threshold_quantile, "gpd_threshold_quantile");
  if (dependence.nataf_tail_quantile >= 0.0) prob(dependence.nataf_tail_quantile, "dependence.nataf_tail_quantile");
  prob(dependence.logistic_censor_probability, "dependence.logistic_censor_probability");
  prob(dependence.ce_conditioning_probability, "dependence.ce_conditioning_probability");
  for (double q : check_quantiles) prob(q, "empirical_check.quantiles");
  for (double q : sensitivity_levels) prob(q, "sensitivity_levels");
  if (return_periods.empty()) throw Error("study config: at least one return period is required");
  for (double t : return_periods) {
    if (!(t > 0.0)) throw Error("study config: return periods must be positive");
  }
  if (models.empty()) throw Error("study config: no dependence models selected");
  for (const auto& m : models) {
    if (std::find(model_names().begin(), model_names().end(), m) == model_names().end()) {
      throw Error(fmt::format("study config: unknown model '{}'", m));
    }
  }
  if (monte_carlo_n == 0) throw Error("study config: monte_carlo_n must be positive");
  if (!(check_block_hours > 0.0)) throw Error("study config: empirical_check.block_hours must be positive");
  if (!(descriptive.bandwidth_multiplier > 0.0)) throw Error("bandwidth must be positive");
  metamodel.validate();
}

StudyConfig StudyConfig::from_json(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  static const std::set<std::string> known{"seed",           "input",          "variables",     "decluster",
                                           "gpd_threshold_quantile",         "models",        "dependence",
                                           "return_periods", "monte_carlo_n",  "direction_level", "circle_directions",
                                           "direction_assignment",           "metamodel",     "empirical_check",
                                           "bootstrap_resamples",            "diagnostic_points", "descriptive",
                                           "output_dir",     "compare_concomitant", "sensitivity_levels"};
  for (const auto& [key, _] : j.items()) {
    if (!known.count(key)) throw Error(fmt::format("study config: unknown key '{}'", key));
  }
  StudyConfig c;
  if (!j.contains("seed")) throw Error("study config: seed is mandatory");
  c.seed = j.at("seed").get<std::uint64_t>();
  auto resolve = [&](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  if (j.contains("input")) {
    const auto& in = j.at("input");
    if (in.contains("synthesis")) c.synthesis = SynthesisConfig::from_json(in.at("synthesis"));
    if (in.contains("csv")) c.input_csv = resolve(in.at("csv").get<std::string>());
    if (in.contains("mapping")) c.mapping_file = resolve(in.at("mapping").get<std::string>());
  }
  c.variables = j.value("variables", c.variables);
  if (j.contains("decluster")) c.decluster = parse_decluster(j.at("decluster"), c.decluster);
  c.gpd_threshold_quantile = j.value("gpd_threshold_quantile", c.gpd_threshold_quantile);
  c.models = j.value("models", c.models);
  if (j.contains("dependence")) {
    const auto& d = j.at("dependence");
    c.dependence.nataf_tail_quantile = d.value("nataf_tail_quantile", c.dependence.nataf_tail_quantile);
    c.dependence.logistic_censor_probability =
        d.value("logistic_censor_probability", c.dependence.logistic_censor_probability);
    c.dependence.ce_conditioning_probability =
        d.value("ce_conditioning_probability", c.dependence.ce_conditioning_probability);
    const auto cond = d.value("ce_conditioning", std::string{"partition"});
    if (cond != "partition" && cond != "threshold") throw Error("ce_conditioning must be partition or threshold");
    c.dependence.ce.conditioning = cond == "threshold" ? CeConditioning::Threshold : CeConditioning::Partition;
    const auto res = d.value("ce_residuals", std::string{"empirical"});
    if (res != "empirical" && res != "gaussian") throw Error("ce_residuals must be empirical or gaussian");
    c.dependence.ce.residuals = res == "gaussian" ? CeResiduals::Gaussian : CeResiduals::Empirical;
  }
  c.return_periods = j.value("return_periods", c.return_periods);
  c.monte_carlo_n = j.value("monte_carlo_n", c.monte_carlo_n);
  c.direction_level = j.value("direction_level", c.direction_level);
  c.circle_directions = j.value("circle_directions", c.circle_directions);
  if (j.contains("direction_assignment")) {
    const auto& d = j.at("direction_assignment");
    c.directions.dm = d.value("dm", c.directions.dm);
    c.directions.wdir = d.value("wdir", c.directions.wdir);
    c.directions.cdir = d.value("cdir", c.directions.cdir);
  }
  if (j.contains("metamodel")) c.metamodel = j.at("metamodel").get<MetaModelParams>();
  if (j.contains("empirical_check")) {
    const auto& e = j.at("empirical_check");
    c.check_quantiles = e.value("quantiles", c.check_quantiles);
    c.check_resamples = e.value("resamples", c.check_resamples);
    c.check_block_hours = e.value("block_hours", c.check_block_hours);
  }
  c.compare_concomitant = j.value("compare_concomitant", c.compare_concomitant);
  c.sensitivity_levels = j.value("sensitivity_levels", c.sensitivity_levels);
  c.bootstrap_resamples = j.value("bootstrap_resamples", c.bootstrap_resamples);
  c.diagnostic_points = j.value("diagnostic_points", c.diagnostic_points);
  if (j.contains("descriptive")) {
    const auto& d = j.at("descriptive");
    c.descriptive.bins = d.value("bins", c.descriptive.bins);
    c.descriptive.kde_grid = d.value("kde_grid", c.descriptive.kde_grid);
    c.descriptive.bandwidth_multiplier = d.value("bandwidth_multiplier", c.descriptive.bandwidth_multiplier);
    c.descriptive.series_length = d.value("series_length", c.descriptive.series_length);
  }
  c.descriptive.variables = c.variables;
  if (j.contains("output_dir")) c.output_dir = resolve(j.at("output_dir").get<std::string>());
  c.validate();
  return c;
}

nlohmann::json StudyConfig::to_json() const {
  nlohmann::json j;
  j["seed"] = seed;
  nlohmann::json in = nlohmann::json::object();
  if (synthesis) in["synthesis"] = synthesis->to_json();
  if (!input_csv.empty()) in["csv"] = input_csv.string();
  if (!mapping_file.empty()) in["mapping"] = mapping_file.string();
  j["input"] = in;
  j["variables"] = variables;
  j["decluster"] = {{"storm_threshold_quantile", decluster.storm_threshold_quantile},
                    {"separation_hours", static_cast<double>(decluster.separation.count()) / 3600.0},
                    {"concomitant", decluster.concomitant == ConcomitantRule::AtPeak ? "at_peak" : "componentwise_max"}};
  j["gpd_threshold_quantile"] = gpd_threshold_quantile;
  j["models"] = models;
  j["dependence"] = {{"nataf_tail_quantile", dependence.nataf_tail_quantile},
                     {"logistic_censor_probability", dependence.logistic_censor_probability},
                     {"ce_conditioning_probability", dependence.ce_conditioning_probability},
                     {"ce_conditioning", dependence.ce.conditioning == CeConditioning::Partition ? "partition" : "threshold"},
                     {"ce_residuals", dependence.ce.residuals == CeResiduals::Empirical ? "empirical" : "gaussian"}};
  j["return_periods"] = return_periods;
  j["monte_carlo_n"] = monte_carlo_n;
  j["direction_level"] = direction_level;
  j["circle_directions"] = circle_directions;
  j["direction_assignment"] = {{"dm", directions.dm}, {"wdir", directions.wdir}, {"cdir", directions.cdir}};
  j["metamodel"] = metamodel;
  j["empirical_check"] = {{"quantiles", check_quantiles}, {"resamples", check_resamples}, {"block_hours", check_block_hours}};
  j["compare_concomitant"] = compare_concomitant;
  j["sensitivity_levels"] = sensitivity_levels;
  j["bootstrap_resamples"] = bootstrap_resamples;
  j["diagnostic_points"] = diagnostic_points;
  j["descriptive"] = {{"bins", descriptive.bins},
                      {"kde_grid", descriptive.kde_grid},
                      {"bandwidth_multiplier", descriptive.bandwidth_multiplier},
                      {"series_length", descriptive.series_length}};
  j["output_dir"] = output_dir.string();
  return j;
}

StudyConfig StudyConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config {}", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("config {}: {}", path.string(), e.what()));
  }
  return from_json(j, path.parent_path());
}

std::string concomitant_label(ConcomitantRule rule) {
  return rule == ConcomitantRule::AtPeak ? "at_peak" : "componentwise_max";
}

nlohmann::json dependence_sensitivity(const ClusterMaxima& events, const MarginalSet& margins,
                                      const DependenceSettings& settings, const std::vector<double>& levels) {
  auto attempt = [](nlohmann::json row, auto&& fit) {
    try {
      fit(row);
    } catch (const std::exception& e) {
      row["error"] = e.what();
    }
    return row;
  };
  nlohmann::json logistic = nlohmann::json::array(), ce = nlohmann::json::array(), nataf = nlohmann::json::array();
  for (double p : levels) {
    logistic.push_back(attempt({{"censor_probability", p}}, [&](nlohmann::json& row) {
      const auto m = fit_logistic(events, margins, p);
      row["alpha"] = m.alpha;
      row["near_perfect"] = m.near_perfect;
    }));
    ce.push_back(attempt({{"conditioning_probability", p}}, [&](nlohmann::json& row) {
      const auto m = fit_conditional_extremes(events, margins, -1.0 / std::log(p), settings.ce);
      auto parts = nlohmann::json::array();
      for (const auto& part : m.partitions) {
        auto regs = nlohmann::json::array();
        for (const auto& reg : part.regressions) {
          regs.push_back({{"target", events.variables.at(reg.target)}, {"a", reg.a}, {"b", reg.b}});
        }
        parts.push_back({{"conditioning", events.variables.at(part.conditioning)}, {"regressions", regs}});
      }
      row["partitions"] = parts;
    }));
    nataf.push_back(attempt({{"tail_quantile", p}}, [&](nlohmann::json& row) {
      const auto m = fit_nataf(events, margins, p);
      std::vector<std::vector<double>> corr;
      for (Eigen::Index i = 0; i < m.corr.rows(); ++i) {
        corr.emplace_back(m.corr.row(i).data(), m.corr.row(i).data() + m.corr.cols());
      }
      row["corr"] = corr;
      row["boundary"] = m.boundary;
    }));
  }
  return {{"schema_version", 1}, {"logistic", logistic}, {"conditional_extremes", ce}, {"nataf", nataf}};
}

std::string method_label(const std::string& model) {
  if (model == "independence") return "Independence";
  if (model == "perfect_dependence") return "Perfect dependence";
  if (model == "nataf") return "Nataf transform";
  if (model == "logistic") return "Logistic model";
  if (model == "conditional_extremes") return "Conditional extremes";
  if (model == "reference") return "Meta model";
  return model;
}

std::string render_report_markdown(const ComparisonReport& report) {
  std::ostringstream md;
  auto unit = [](const std::string& v) {
    if (v == "hs") return std::string("Hs (m)");
    if (v == "ws") return std::string("Ws (m/s)");
    if (v == "cs") return std::string("Cs (m/s)");
    return v;
  };
  auto percent = [](double rel) {
    const long p = std::lround(100.0 * rel);
    return p == 0 ? std::string("0%") : fmt::format("{:+d}%", p);
  };
  for (const auto& t : report.tables) {
    const auto suffix = t.concomitant.empty() ? std::string() : fmt::format(" [concomitant: {}]", t.concomitant);
    md << fmt::format("## Comparison of the methods for the estimation of the {:g}-year return level{}\n\n",
                      t.return_period, suffix);
    md << fmt::format("| Method | {:g}-year return level (kN) | Relative error |\n", t.return_period);
    md << "|---|---|---|\n";
    md << fmt::format("| {} | {:.0f} | |\n", method_label("reference"), t.reference);
    for (const auto& m : t.methods) {
      md << fmt::format("| {} | {:.0f} | {} |\n", method_label(m.method), m.return_level, percent(m.relative_error));
    }
    md << fmt::format("\n## Comparison of the design points ({:g}-year){}\n\n| Method |", t.return_period, suffix);
    for (const auto& v : report.variables) md << ' ' << unit(v) << " |";
    md << "\n|---|";
    for (std::size_t i = 0; i < report.variables.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& m : t.methods) {
      md << "| " << method_label(m.method) << " |";
      for (Eigen::Index i = 0; i < m.design_point.location.size(); ++i) {
        md << fmt::format(" {:.2f} |", m.design_point.location[i]);
      }
      md << '\n';
    }
    md << '\n';
  }
  return md.str();
}

nlohmann::json report_to_json(const ComparisonReport& report) {
  nlohmann::json j{{"schema_version", 1}, {"variables", report.variables}, {"reference_fit", report.reference_fit}};
  auto tables = nlohmann::json::array();
  for (const auto& t : report.tables) {
    auto methods = nlohmann::json::array();
    for (const auto& m : t.methods) {
      const auto& dp = m.design_point;
      methods.push_back({{"method", m.method},
                         {"return_level", m.return_level},
                         {"relative_error", m.relative_error},
                         {"relative_error_percent", static_cast<long>(std::lround(100.0 * m.relative_error))},
                         {"design_point", std::vector<double>(dp.location.data(), dp.location.data() + dp.location.size())},
                         {"tension",
                          {{"t_qs", dp.tension.t_qs},
                           {"sigma_lf", dp.tension.sigma_lf},
                           {"sigma_hf", dp.tension.sigma_hf},
                           {"t_max", dp.tension.t_max}}}});
    }
    tables.push_back(
        {{"T", t.return_period}, {"concomitant", t.concomitant}, {"reference", t.reference}, {"methods", methods}});
  }
  j["tables"] = tables;
  return j;
}

Dataset study_dataset(const StudyConfig& config) {
  if (config.synthesis) return generate_synthetic_dataset(*config.synthesis, derive_seed(config.seed, "synthesis"));
  if (!config.mapping_file.empty()) return load_csv(config.input_csv, ColumnMapping::from_file(config.mapping_file));
  // Without a mapping file every header that names a field is read as is.
  std::ifstream in(config.input_csv);
  if (!in) throw Error(fmt::format("cannot open {}", config.input_csv.string()));
  std::string header;
  std::getline(in, header);
  std::vector<Field> fields;
  std::stringstream cells(header);
  for (std::string cell; std::getline(cells, cell, ',');) {
    try {
      fields.push_back(parse_field(cell));
    } catch (const Error&) {
    }
  }
  return load_csv(config.input_csv, ColumnMapping::identity(fields));
}

ClusterMaxima study_events(const Dataset& data, const StudyConfig& config) {
  std::vector<Field> fields;
  for (const auto& v : config.variables) fields.push_back(parse_field(v));
  return decluster_joint(to_series(data, fields), config.decluster);
}

MarginalSet study_margins(const Dataset& data, const ClusterMaxima& events, const StudyConfig& config) {
  std::vector<double> thresholds;
  for (const auto& v : config.variables) {
    thresholds.push_back(stats::quantile_linear(finite_values(data.column(parse_field(v))), config.gpd_threshold_quantile));
  }
  return fit_margins(events, thresholds);
}

GpdFit reference_fit(const Dataset& data, const StudyConfig& config) {
  const auto tension = evaluate_batch(data, config.metamodel);
  std::vector<double> response;
  for (const auto& t : tension) response.push_back(t.t_max);
  const auto cm = decluster(single_series(data, "t_max", response), 0, config.decluster);
  const double u = stats::quantile_linear(finite_values(response), config.gpd_threshold_quantile);
  return fit_pot(cm.column(0), u, cm.years);
}

DirectionGrid study_grid(const StudyConfig& config) {
  return config.variables.size() == 3 ? DirectionGrid::icosphere(config.direction_level)
                                      : DirectionGrid::circle(config.circle_directions);
}

ComparisonReport run_study(const StudyConfig& config) {
  config.validate();
  const auto& out = config.output_dir;
  std::filesystem::create_directories(out);
  write_json(out / "config_resolved.json", config.to_json());

  const Dataset data = stage("ingest", [&] {
    auto d = study_dataset(config);
    if (config.synthesis) {
      std::ofstream f(out / "dataset.csv", std::ios::binary);
      write_csv(d, f, ColumnMapping::identity(d.fields()));
    }
    write_json(out / "gaps.json", gap_report_json(d));
    return d;
  });

  stage("descriptive", [&] { return emit_descriptive_stats(data, config.metamodel, config.descriptive, out); });

  // Univariate tails of every variable plus the response series.
  ComparisonReport report;
  report.variables = config.variables;
  stage("univariate", [&] {
    nlohmann::json table = nlohmann::json::array();
    nlohmann::json curves = nlohmann::json::object();
    nlohmann::json diagnostics = nlohmann::json::object();
    const auto tension = evaluate_batch(data, config.metamodel);
    std::vector<std::pair<std::string, std::vector<double>>> columns;
    for (const auto& v : config.variables) columns.emplace_back(v, data.column(parse_field(v)));
    std::vector<double> response;
    for (const auto& t : tension) response.push_back(t.t_max);
    columns.emplace_back("t_max", response);
    for (const auto& [name, col] : columns) {
      const auto cm = decluster(single_series(data, name, col), 0, config.decluster);
      const double u = stats::quantile_linear(finite_values(col), config.gpd_threshold_quantile);
      const auto maxima = cm.column(0);
      const auto fit = fit_pot(maxima, u, cm.years);
      nlohmann::json row{{"variable", name},     {"storm_threshold", cm.thresholds[0]},
                         {"n_clusters", cm.n_clusters()}, {"years", cm.years},
                         {"gpd", fit}};
      nlohmann::json levels = nlohmann::json::object();
      for (double t : config.return_periods) {
        if (fit.rate * t > 1.0) levels[fmt::format("{:g}", t)] = return_level(fit, t);
      }
      row["return_levels"] = levels;
      table.push_back(row);

      BootstrapConfig boot{config.bootstrap_resamples, 0.95, derive_seed(config.seed, "bootstrap/" + name)};
      curves[name] = return_level_curve_json(return_level_curve(maxima, fit, period_grid(fit.rate, config.return_periods), boot));

      std::vector<double> sorted = maxima;
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> grid;
      const double lo = stats::quantile_linear(sorted, 0.1), hi = stats::quantile_linear(sorted, 0.9);
      for (std::size_t k = 0; k < config.diagnostic_points; ++k) {
        const double w = config.diagnostic_points > 1 ? static_cast<double>(k) / static_cast<double>(config.diagnostic_points - 1) : 0.0;
        grid.push_back(lo + w * (hi - lo));
      }
      BootstrapConfig dboot{std::max<std::size_t>(1, config.bootstrap_resamples / 5), 0.95,
                            derive_seed(config.seed, "diagnostics/" + name)};
      diagnostics[name] = threshold_diagnostics_json(threshold_diagnostics(cm, 0, grid, dboot));
    }
    write_json(out / "gpd_table.json", table);
    write_json(out / "return_levels.json", curves);
    write_json(out / "threshold_diagnostics.json", diagnostics);
    return 0;
  });

  report.reference_fit = stage("reference", [&] { return reference_fit(data, config); });

  const auto grid = study_grid(config);
  std::vector<ConcomitantRule> rules{config.decluster.concomitant};
  if (config.compare_concomitant) {
    rules.push_back(config.decluster.concomitant == ConcomitantRule::AtPeak ? ConcomitantRule::ComponentwiseMax
                                                                            : ConcomitantRule::AtPeak);
  }
  for (std::size_t r = 0; r < rules.size(); ++r) {
    // The configured convention writes into the output root, the alternate
    // one into its own subdirectory.
    StudyConfig variant = config;
    variant.decluster.concomitant = rules[r];
    const auto label = concomitant_label(rules[r]);
    const auto dir = r == 0 ? out : out / ("concomitant_" + label);
    std::filesystem::create_directories(dir);
    const auto events = stage("events", [&] {
      auto e = study_events(data, variant);
      std::ofstream f(dir / "events.csv", std::ios::binary);
      write_events_csv(e, f);
      return e;
    });
    const auto margins = stage("margins", [&] {
      auto m = study_margins(data, events, variant);
      nlohmann::json j = m;
      j["years"] = events.years;
      write_json(dir / "margins.json", j);
      return m;
    });
    if (r == 0) {
      stage("sensitivity", [&] {
        write_json(dir / "sensitivity.json",
                   dependence_sensitivity(events, margins, config.dependence, config.sensitivity_levels));
        return 0;
      });
    }

    std::vector<ComparisonTable> tables;
    for (double t : config.return_periods) {
      ComparisonTable table;
      table.return_period = t;
      table.concomitant = label;
      table.reference = stage("reference", [&] { return return_level(report.reference_fit, t); });
      tables.push_back(table);
    }
    for (const auto& name : config.models) {
      const auto model = stage("fit/" + name, [&] {
        auto m = fit_dependence(name, events, margins, config.dependence);
        write_json(dir / fmt::format("model_{}.json", name), model_to_json(m));
        return m;
      });
      const auto sim = stage("simulate/" + name, [&] {
        return simulate(model, margins, config.monte_carlo_n, derive_seed(config.seed, "simulate/" + name));
      });
      for (auto& table : tables) {
        const double t = table.return_period;
        stage("contour/" + name, [&] {
          const auto surface = build_contour(sim, grid, t);
          write_json(dir / fmt::format("contour_{}_{}.json", name, period_tag(t)), contour_to_json(surface));
          std::ofstream obj(dir / fmt::format("contour_{}_{}.obj", name, period_tag(t)), std::ios::binary);
          write_obj(surface, obj);
          MethodResult m;
          m.method = name;
          m.design_point = find_design_point(surface, config.metamodel, config.directions, name);
          m.return_level = m.design_point.response;
          m.relative_error = (m.return_level - table.reference) / table.reference;
          table.methods.push_back(m);
          return 0;
        });
      }
    }
    for (const auto& table : tables) {
      std::vector<DesignPoint> points;
      for (const auto& m : table.methods) points.push_back(m.design_point);
      std::ofstream f(dir / fmt::format("design_points_{}.csv", period_tag(table.return_period)), std::ios::binary);
      write_design_points_csv(points, f);
    }
    report.tables.insert(report.tables.end(), tables.begin(), tables.end());
  }

  stage("check", [&] {
    EmpiricalCheckOptions opt;
    opt.variables = config.variables;
    opt.bootstrap_resamples = config.check_resamples;
    const double step_hours = static_cast<double>(data.time_step().count()) / 3600.0;
    opt.block_length = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(config.check_block_hours / step_hours)));
    opt.seed = derive_seed(config.seed, "check");
    opt.grid_level = config.direction_level;
    opt.circle = config.circle_directions;
    opt.directions = config.directions;
    write_json(out / "empirical_check.json",
               empirical_check_json(empirical_contour_check(data, config.metamodel, config.check_quantiles, opt)));
    return 0;
  });

  stage("report", [&] {
    write_json(out / "report.json", report_to_json(report));
    write_text(out / "report.md", render_report_markdown(report));
    return 0;
  });
  return report;
}

}  // namespace metocean
