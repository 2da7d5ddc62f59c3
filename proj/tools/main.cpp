// Command line front end: thin argument handling over the library, one
// subcommand per pipeline entry point. Exit codes: 0 ok, 2 config, 3 data,
// 4 anything else.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sohcast/emd.hpp"
#include "sohcast/errors.hpp"
#include "sohcast/ingest.hpp"
#include "sohcast/pipeline.hpp"
#include "sohcast/preprocess.hpp"
#include "sohcast/synth.hpp"
#include "sohcast/timeseries.hpp"

namespace fs = std::filesystem;
using namespace soh;

namespace {

std::vector<std::size_t> parse_size_list(const std::string& text, const std::string& flag) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      const long v = std::stol(item);
      if (v <= 0) throw std::invalid_argument("not positive");
      out.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError(flag + ": expected positive integers, got '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(flag + ": empty list");
  return out;
}

PredictorSet parse_predictors(const std::string& name) {
  if (name == "basic") return PredictorSet::basic;
  if (name == "imfs") return PredictorSet::imfs;
  if (name == "basic+imfs") return PredictorSet::combined;
  throw ConfigError("predictors must be basic, imfs, or basic+imfs, got '" + name + "'");
}

WindowPolicy parse_policy(const std::string& name) {
  if (name == "expanding") return WindowPolicy::expanding;
  if (name == "sliding") return WindowPolicy::sliding;
  throw ConfigError("policy must be expanding or sliding, got '" + name + "'");
}

std::ostream& num(std::ostream& os) { return os << std::fixed << std::setprecision(4); }

void print_battery_outcomes(const PipelineResult& result) {
  for (const BatteryAnalysis& an : result.batteries) {
    const CellResult& best = an.cells[an.best];
    num(std::cout) << an.name << ": best cell w" << best.cell.window << "/s" << best.cell.sample
                   << "/r" << best.cell.roll << " " << best.chosen.label << "  mae "
                   << best.model.metrics.mae << "  rmse " << best.model.metrics.rmse
                   << "  naive mae " << best.naive.metrics.mae << "\n";
  }
  if (result.fleet_test_defined)
    num(std::cout) << "fleet test: W = " << result.fleet_test.statistic
                   << ", p = " << result.fleet_test.p_value
                   << (result.fleet_test.exact ? " (exact)" : " (normal approximation)") << "\n";
  else if (result.batteries.size() > 1)
    std::cout << "fleet test: undefined (needs at least 6 batteries with distinct errors)\n";
}

void print_household_outcome(const PipelineResult& result) {
  const CellResult& cr = result.household.cell;
  num(std::cout) << "household: " << cr.chosen.label << "  rmse " << cr.model.metrics.rmse
                 << "  naive rmse " << cr.naive.metrics.rmse << "  scale "
                 << result.household.scale << "\n";
}

int run_app(int argc, char** argv) {
  CLI::App app{"battery state-of-health prognostics"};
  app.require_subcommand(1);

  // run: the full pipeline, from a config file plus command line overrides.
  auto* run = app.add_subcommand("run", "run the full pipeline and write artifacts");
  std::string run_config, run_mode, run_output, run_grid, run_predictors, run_policy;
  std::string run_windows, run_samples, run_rolls;
  std::vector<std::string> run_inputs;
  std::uint64_t run_seed = 0;
  int run_workers = 0, run_ensemble = -1, run_months = 0;
  double run_noise = -1;
  bool run_waive = false;
  run->add_option("-c,--config", run_config, "config file (key = value lines, schema = 1)");
  run->add_option("--mode", run_mode, "battery | household");
  run->add_option("--output", run_output, "artifact directory");
  run->add_option("--seed", run_seed, "seed for every random draw in the run");
  run->add_option("--workers", run_workers, "parallel battery pipelines");
  run->add_option("--inputs", run_inputs, "telemetry CSVs (default: synthetic fleet)");
  run->add_option("--grid", run_grid, "model grid preset: minimal | boosted | standard");
  run->add_option("--predictors", run_predictors, "basic | imfs | basic+imfs");
  run->add_option("--windows", run_windows, "lag depths, comma separated");
  run->add_option("--samples", run_samples, "evaluation sample sizes, comma separated");
  run->add_option("--rolls", run_rolls, "refit strides, comma separated");
  run->add_option("--policy", run_policy, "expanding | sliding");
  run->add_option("--ensemble", run_ensemble, "decomposition ensemble size");
  run->add_option("--noise", run_noise, "decomposition noise amplitude");
  run->add_option("--months", run_months, "household mode: months of generated sample");
  run->add_flag("--waive-size-rule", run_waive, "silence the sample>window>2*roll warning");
  run->callback([&] {
    PipelineConfig cfg;
    if (!run_config.empty()) cfg = parse_config_file(run_config);
    if (run->count("--mode")) {
      if (run_mode != "battery" && run_mode != "household")
        throw ConfigError("mode must be battery or household, got '" + run_mode + "'");
      cfg.mode = run_mode;
    }
    if (run->count("--output")) cfg.output_dir = run_output;
    if (run->count("--seed")) {
      cfg.seed = run_seed;
      cfg.synth.seed = run_seed;
    }
    if (run->count("--workers")) cfg.workers = run_workers;
    if (run->count("--inputs")) cfg.inputs = run_inputs;
    if (run->count("--grid")) cfg.grid = run_grid;
    if (run->count("--predictors")) cfg.predictors = parse_predictors(run_predictors);
    if (run->count("--windows")) cfg.windows = parse_size_list(run_windows, "--windows");
    if (run->count("--samples")) cfg.samples = parse_size_list(run_samples, "--samples");
    if (run->count("--rolls")) cfg.rolls = parse_size_list(run_rolls, "--rolls");
    if (run->count("--policy")) cfg.policy = parse_policy(run_policy);
    if (run->count("--ensemble")) cfg.ensemble_size = run_ensemble;
    if (run->count("--noise")) cfg.noise_amplitude = run_noise;
    if (run->count("--months")) cfg.household_months = run_months;
    if (run_waive) cfg.waive_size_rule = true;
    if (cfg.workers < 1) throw ConfigError("workers must be at least 1");

    const PipelineResult result = run_pipeline(cfg);
    for (const std::string& w : result.warnings) std::cerr << "warning: " << w << "\n";
    if (cfg.mode == "household")
      print_household_outcome(result);
    else
      print_battery_outcomes(result);
    std::cout << "wrote " << result.artifacts.size() << " artifacts under " << cfg.output_dir
              << "\n";
  });

  // synth: telemetry fixtures to play with.
  auto* synth = app.add_subcommand("synth", "write synthetic fleet telemetry CSVs");
  std::string synth_out = "synth";
  FleetSynthSpec synth_spec;
  int synth_months = 0;
  synth->add_option("--out", synth_out, "directory for the generated CSVs");
  synth->add_option("--batteries", synth_spec.n_batteries, "fleet size");
  synth->add_option("--years", synth_spec.years, "span per battery");
  synth->add_option("--degradation", synth_spec.degradation_pp_per_year, "SoH loss, pp/year");
  synth->add_option("--pulses-per-day", synth_spec.pulses_per_day, "mean charging pulses/day");
  synth->add_option("--mean-delta-soc", synth_spec.mean_delta_soc, "mean SOC gain per pulse");
  synth->add_option("--fault-bursts", synth_spec.faults.bursts, "abrupt capacity dips");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_option("--household-months", synth_months,
                    "also write a household consumption sample of this many months");
  synth->callback([&] {
    synth_spec.validate();
    fs::create_directories(synth_out);
    const std::vector<RawTelemetry> fleet = synth_fleet(synth_spec);
    for (std::size_t i = 0; i < fleet.size(); ++i) {
      const fs::path p = fs::path(synth_out) / ("battery_" + std::to_string(i) + ".csv");
      write_telemetry_csv(p.string(), fleet[i]);
      std::cout << p.string() << ": " << fleet[i].size() << " rows\n";
    }
    if (synth_months > 0) {
      const fs::path p = fs::path(synth_out) / "household_sample.csv";
      write_household_sample(p.string(), synth_months, synth_spec.seed);
      std::cout << p.string() << ": " << synth_months << " full months\n";
    }
  });

  // ingest: parse, clean, and summarize a file without modeling anything.
  auto* ingest = app.add_subcommand("ingest", "validate a CSV and print what it holds");
  std::string ingest_input;
  bool ingest_household_mode = false;
  ingest->add_option("--input", ingest_input, "CSV path")->required();
  ingest->add_flag("--household", ingest_household_mode, "treat as household consumption data");
  ingest->callback([&] {
    if (ingest_household_mode) {
      const DailySeries s = ingest_household(ingest_input);
      std::cout << ingest_input << ": " << s.size() << " full months, "
                << month_label(s.dates.front()) << " .. " << month_label(s.dates.back()) << "\n";
      return;
    }
    const RawTelemetry raw = ingest_telemetry(ingest_input);
    const RawTelemetry cleaned = clean_telemetry(raw);
    const std::vector<ChargingPulse> pulses = detect_pulses(cleaned);
    std::cout << ingest_input << ": " << raw.size() << " rows ("
              << raw.size() - cleaned.size() << " dropped by cleaning), "
              << format_day(day_of(cleaned.timestamps.front())) << " .. "
              << format_day(day_of(cleaned.timestamps.back())) << ", " << pulses.size()
              << " charging pulses\n";
  });

  // decompose: SoH series -> modes CSV.
  auto* dec = app.add_subcommand("decompose", "decompose a battery's SoH series into modes");
  std::string dec_input, dec_out = "modes.csv";
  DecomposeSpec dec_spec;
  dec_spec.ensemble_size = 48;
  dec->add_option("--input", dec_input, "telemetry CSV")->required();
  dec->add_option("--out", dec_out, "output CSV (date, imf_1..k, residue)");
  dec->add_option("--ensemble", dec_spec.ensemble_size, "noise realizations");
  dec->add_option("--noise", dec_spec.noise_amplitude, "noise amplitude");
  dec->add_option("--seed", dec_spec.seed, "ensemble seed");
  dec->callback([&] {
    const RawTelemetry cleaned = clean_telemetry(ingest_telemetry(dec_input));
    const std::vector<ChargingPulse> pulses = detect_pulses(cleaned);
    if (pulses.empty()) throw InsufficientData("no charging pulses in " + dec_input);
    const SohSeries soh = estimate_soh(pulses);
    DailySeries s;
    s.dates = soh.dates;
    s.target = "soh";
    s.channels["soh"] = soh.soh;
    s = impute_gaps(trim_edges(remove_outliers(s, "soh").series, "soh"), "soh");
    const Decomposition d = decompose(s.channel("soh"), dec_spec);

    std::ofstream out(dec_out, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + dec_out);
    out << "date";
    for (std::size_t k = 0; k < d.imfs.size(); ++k) out << ",imf_" << k + 1;
    out << ",residue\n";
    out << std::setprecision(17);
    for (std::size_t i = 0; i < d.length(); ++i) {
      out << format_day(s.dates[i]);
      for (const std::vector<double>& imf : d.imfs) out << ',' << imf[i];
      out << ',' << d.residue[i] << '\n';
    }
    std::cout << dec_out << ": " << d.imfs.size() << " modes + residue over " << d.length()
              << " days\n";
  });

  // backtest: one battery, one sweep cell, metrics to stdout.
  auto* bt = app.add_subcommand("backtest", "tune and walk-forward one battery");
  std::string bt_input, bt_out, bt_grid = "minimal", bt_predictors = "basic+imfs";
  std::string bt_policy = "expanding";
  std::size_t bt_window = 14, bt_sample = 30, bt_roll = 1;
  std::uint64_t bt_seed = 0;
  int bt_ensemble = 48;
  double bt_noise = 0.2;
  bt->add_option("--input", bt_input, "telemetry CSV")->required();
  bt->add_option("--out", bt_out, "also write the full artifact tree here");
  bt->add_option("--window", bt_window, "lag depth");
  bt->add_option("--sample", bt_sample, "evaluation rows");
  bt->add_option("--roll", bt_roll, "refit stride");
  bt->add_option("--policy", bt_policy, "expanding | sliding");
  bt->add_option("--grid", bt_grid, "minimal | boosted | standard");
  bt->add_option("--predictors", bt_predictors, "basic | imfs | basic+imfs");
  bt->add_option("--ensemble", bt_ensemble, "decomposition ensemble size");
  bt->add_option("--noise", bt_noise, "decomposition noise amplitude");
  bt->add_option("--seed", bt_seed, "run seed");
  bt->callback([&] {
    PipelineConfig cfg;
    cfg.inputs = {bt_input};
    cfg.windows = {bt_window};
    cfg.samples = {bt_sample};
    cfg.rolls = {bt_roll};
    cfg.policy = parse_policy(bt_policy);
    cfg.grid = bt_grid;
    cfg.predictors = parse_predictors(bt_predictors);
    cfg.ensemble_size = bt_ensemble;
    cfg.noise_amplitude = bt_noise;
    cfg.seed = bt_seed;
    for (const std::string& w : cfg.constraint_warnings()) std::cerr << "warning: " << w << "\n";

    if (!bt_out.empty()) {
      cfg.output_dir = bt_out;
      cfg.waive_size_rule = true;  // already reported above
      const PipelineResult result = run_pipeline(cfg);
      print_battery_outcomes(result);
      std::cout << "wrote " << result.artifacts.size() << " artifacts under " << bt_out << "\n";
      return;
    }
    const BatteryAnalysis an = analyze_battery(ingest_telemetry(bt_input), cfg, 0);
    const CellResult& cr = an.cells.front();
    num(std::cout) << cr.chosen.label << ": mae " << cr.model.metrics.mae << "  rmse "
                   << cr.model.metrics.rmse << "  r2 " << cr.model.metrics.r2 << "  evar "
                   << cr.model.metrics.evar << "\n";
    num(std::cout) << "persistence: mae " << cr.naive.metrics.mae << "  rmse "
                   << cr.naive.metrics.rmse << "\n";
  });

  // report: CSV -> SVG, for reports produced elsewhere.
  auto* rep = app.add_subcommand("report", "render a report CSV as an SVG chart");
  std::string rep_input, rep_out = "chart.svg", rep_title;
  rep->add_option("--input", rep_input, "report CSV (date,truth,prediction,ci_lo,ci_hi)")
      ->required();
  rep->add_option("--out", rep_out, "SVG path");
  rep->add_option("--title", rep_title, "chart title (default: input file name)");
  rep->callback([&] {
    std::ifstream in(rep_input);
    if (!in) throw ParseError("cannot open " + rep_input);
    std::string line;
    if (!std::getline(in, line) || line.rfind("date,truth,prediction,ci_lo,ci_hi", 0) != 0)
      throw ParseError(rep_input + ": expected a report header", 1);
    BacktestReport r;
    std::vector<std::string> labels;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      std::stringstream row(line);
      std::string field;
      std::vector<std::string> f;
      while (std::getline(row, field, ',')) f.push_back(field);
      if (f.size() != 5) throw ParseError(rep_input + ": expected 5 fields", line_no);
      try {
        labels.push_back(f[0]);
        r.truth.push_back(std::stod(f[1]));
        r.predicted.push_back(std::stod(f[2]));
        r.ci_lo.push_back(std::stod(f[3]));
        r.ci_hi.push_back(std::stod(f[4]));
      } catch (const std::exception&) {
        throw ParseError(rep_input + ": malformed number", line_no);
      }
    }
    const std::string title =
        rep_title.empty() ? fs::path(rep_input).stem().string() : rep_title;
    const std::string svg = line_chart_svg(title, labels, r);
    std::ofstream out(rep_out, std::ios::binary | std::ios::trunc);
    out.write(svg.data(), static_cast<std::streamsize>(svg.size()));
    if (!out) throw Error("cannot write " + rep_out);
    std::cout << rep_out << ": " << r.truth.size() << " points\n";
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_app(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "sohcast: " << e.what() << "\n";
    return exit_code_for(e);
  }
}
