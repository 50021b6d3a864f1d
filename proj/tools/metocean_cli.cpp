// Command-line front end. Every verb reads and writes its artifacts in one
// output directory so the verbs can be chained:
//
//   synth -> dataset.csv
//   fit-margins -> events.csv, margins.json
//   fit-dependence --model M -> model_M.json
//   simulate --model M -> simulated_M.csv, simulated_M.json
//   contour --model M -> contour_M_T<T>.json, contour_M_T<T>.obj
//   design-point --model M -> design_point_M_T<T>.csv
//   study -> the full set of study artifacts

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fmt/format.h>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>

#include "metocean/contour.hpp"
#include "metocean/dependence.hpp"
#include "metocean/error.hpp"
#include "metocean/margins.hpp"
#include "metocean/random.hpp"
#include "metocean/study.hpp"

namespace fs = std::filesystem;
using namespace metocean;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  std::string model;
  std::optional<std::size_t> n;
  std::vector<double> periods;
};

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << j.dump(2) << '\n';
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("missing input {} (run the preceding verb first)", path.string()));
  return in;
}

// Loads the study config, applying command-line overrides. Verbs that draw
// random numbers insist on a seed from either source.
StudyConfig load_config(const Options& o, bool needs_seed) {
  nlohmann::json j = nlohmann::json::object();
  fs::path base;
  if (!o.config.empty()) {
    j = read_json(o.config);
    base = fs::path(o.config).parent_path();
  }
  if (o.seed) j["seed"] = *o.seed;
  if (!j.contains("seed")) {
    if (needs_seed) throw Error("a seed is mandatory: pass --seed or set \"seed\" in the config");
    j["seed"] = 1;
  }
  const fs::path out(o.out_dir);
  const auto dataset = out / "dataset.csv";
  if (!j.contains("input")) j["input"] = {{"csv", fs::absolute(dataset).string()}};
  j["output_dir"] = fs::absolute(out).string();
  if (!o.periods.empty()) j["return_periods"] = o.periods;
  if (o.n) j["monte_carlo_n"] = *o.n;
  return StudyConfig::from_json(j, base);
}

std::string require_model(const Options& o) {
  if (o.model.empty()) throw Error("--model is required");
  const auto& names = model_names();
  if (std::find(names.begin(), names.end(), o.model) == names.end()) {
    throw Error(fmt::format("unknown model '{}'", o.model));
  }
  return o.model;
}

MarginalSet load_margins(const fs::path& out) { return read_json(out / "margins.json").get<MarginalSet>(); }

std::string period_tag(double t) { return fmt::format("T{:g}", t); }

void cmd_synth(const Options& o) {
  const auto c = load_config(o, true);
  if (!c.synthesis) throw Error("the config has no input.synthesis section");
  fs::create_directories(c.output_dir);
  const auto data = study_dataset(c);
  auto out = open_out(c.output_dir / "dataset.csv");
  write_csv(data, out, ColumnMapping::identity(data.fields()));
  std::cout << fmt::format("wrote {} records to {}\n", data.size(), (c.output_dir / "dataset.csv").string());
}

void cmd_fit_margins(const Options& o) {
  auto c = load_config(o, false);
  // A dataset written by `synth` takes precedence over re-synthesis.
  if (const auto written = c.output_dir / "dataset.csv"; fs::exists(written)) {
    c.synthesis.reset();
    c.input_csv = written;
    c.mapping_file.clear();
  }
  fs::create_directories(c.output_dir);
  const auto data = study_dataset(c);
  const auto events = study_events(data, c);
  {
    auto out = open_out(c.output_dir / "events.csv");
    write_events_csv(events, out);
  }
  const auto margins = study_margins(data, events, c);
  nlohmann::json j = margins;
  j["years"] = events.years;
  write_json(c.output_dir / "margins.json", j);
  std::cout << fmt::format("{} joint events over {:.2f} years\n", events.n_clusters(), events.years);
}

void cmd_fit_dependence(const Options& o) {
  const auto c = load_config(o, false);
  const auto model = require_model(o);
  const auto mj = read_json(c.output_dir / "margins.json");
  const auto margins = mj.get<MarginalSet>();
  auto in = open_in(c.output_dir / "events.csv");
  const auto events = read_events_csv(in, mj.at("years").get<double>());
  const auto fitted = fit_dependence(model, events, margins, c.dependence);
  write_json(c.output_dir / fmt::format("model_{}.json", model), model_to_json(fitted));
}

void cmd_simulate(const Options& o) {
  const auto c = load_config(o, true);
  const auto model = require_model(o);
  const auto margins = load_margins(c.output_dir);
  const auto fitted = model_from_json(read_json(c.output_dir / fmt::format("model_{}.json", model)));
  const auto seed = derive_seed(c.seed, "simulate/" + model);
  const auto sim = simulate(fitted, margins, c.monte_carlo_n, seed);
  auto out = open_out(c.output_dir / fmt::format("simulated_{}.csv", model));
  write_simulated_csv(sim, out);
  write_json(c.output_dir / fmt::format("simulated_{}.json", model),
             {{"events_per_year", sim.events_per_year}, {"n", sim.size()}, {"seed", seed}});
}

void cmd_contour(const Options& o) {
  const auto c = load_config(o, false);
  const auto model = require_model(o);
  const auto side = read_json(c.output_dir / fmt::format("simulated_{}.json", model));
  auto in = open_in(c.output_dir / fmt::format("simulated_{}.csv", model));
  const auto sim = read_simulated_csv(in, side.at("events_per_year").get<double>());
  const auto grid = sim.dim() == 3 ? DirectionGrid::icosphere(c.direction_level) : DirectionGrid::circle(c.circle_directions);
  for (double t : c.return_periods) {
    const auto surface = build_contour(sim, grid, t);
    const auto stem = fmt::format("contour_{}_{}", model, period_tag(t));
    write_json(c.output_dir / (stem + ".json"), contour_to_json(surface));
    auto obj = open_out(c.output_dir / (stem + ".obj"));
    write_obj(surface, obj);
  }
}

void cmd_design_point(const Options& o) {
  const auto c = load_config(o, false);
  const auto model = require_model(o);
  for (double t : c.return_periods) {
    const auto surface =
        contour_from_json(read_json(c.output_dir / fmt::format("contour_{}_{}.json", model, period_tag(t))));
    const auto dp = find_design_point(surface, c.metamodel, c.directions, model);
    auto out = open_out(c.output_dir / fmt::format("design_point_{}_{}.csv", model, period_tag(t)));
    write_design_points_csv({dp}, out);
    std::cout << fmt::format("{} T={:g}: t_max = {:.1f}\n", model, t, dp.response);
  }
}

void cmd_study(const Options& o) {
  if (o.config.empty()) throw Error("study needs --config");
  auto j = read_json(o.config);
  if (o.seed) j["seed"] = *o.seed;
  if (o.out_dir != ".") j["output_dir"] = fs::absolute(o.out_dir).string();
  const auto c = StudyConfig::from_json(j, fs::path(o.config).parent_path());
  const auto report = run_study(c);
  std::cout << render_report_markdown(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Environmental contours and extreme response estimation"};
  app.require_subcommand(1);
  Options o;
  auto common = [&](CLI::App* sub, bool with_model) {
    sub->add_option("--config", o.config, "study config (JSON)");
    sub->add_option("--seed", o.seed, "root seed, overrides the config");
    sub->add_option("--out-dir", o.out_dir, "artifact directory")->capture_default_str();
    if (with_model) {
      sub->add_option("--model", o.model, "independence|perfect_dependence|nataf|logistic|conditional_extremes");
    }
  };
  auto* synth = app.add_subcommand("synth", "generate a synthetic hourly dataset");
  common(synth, false);
  auto* margins = app.add_subcommand("fit-margins", "decluster joint events and fit the margins");
  common(margins, false);
  auto* dep = app.add_subcommand("fit-dependence", "fit one dependence model");
  common(dep, true);
  auto* sim = app.add_subcommand("simulate", "Monte Carlo sample from a fitted model");
  common(sim, true);
  sim->add_option("-n,--samples", o.n, "number of simulated events");
  auto* contour = app.add_subcommand("contour", "direct-sampling contour of a simulated sample");
  common(contour, true);
  contour->add_option("--period", o.periods, "return period(s) in years");
  auto* design = app.add_subcommand("design-point", "maximum response on a contour");
  common(design, true);
  design->add_option("--period", o.periods, "return period(s) in years");
  auto* study = app.add_subcommand("study", "run the full comparison study");
  common(study, false);

  CLI11_PARSE(app, argc, argv);
  try {
    if (synth->parsed()) cmd_synth(o);
    if (margins->parsed()) cmd_fit_margins(o);
    if (dep->parsed()) cmd_fit_dependence(o);
    if (sim->parsed()) cmd_simulate(o);
    if (contour->parsed()) cmd_contour(o);
    if (design->parsed()) cmd_design_point(o);
    if (study->parsed()) cmd_study(o);
  } catch (const StageError& e) {
    std::cerr << "error in stage " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return EXIT_SUCCESS;
}
