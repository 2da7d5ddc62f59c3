#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sohcast/backtest.hpp"
#include "sohcast/emd.hpp"
#include "sohcast/errors.hpp"
#include "sohcast/preprocess.hpp"
#include "sohcast/synth.hpp"
#include "sohcast/timeseries.hpp"
#include "sohcast/trees.hpp"

namespace soh {

enum class PredictorSet {
  basic,     // lagged SoH, cycle count, ambient temperature
  imfs,      // lagged per-mode predictions plus the frequency indicator
  combined,  // union of the two
};

struct SweepCell {
  std::size_t window = 14;  // lag depth, timesteps
  std::size_t sample = 30;  // held-out evaluation rows
  std::size_t roll = 1;     // refit stride
};

/**
 * One run, parsed from a flat `key = value` config. Every knob has a usable
 * default except the data source: battery mode reads telemetry CSVs from
 * `inputs` or synthesizes a fleet when that list is empty, household mode
 * reads `household_input` or generates a sample file next to the outputs.
 */
struct PipelineConfig {
  std::string mode = "battery";  // battery | household
  std::uint64_t seed = 0;
  std::string output_dir = "out";
  int workers = 1;

  std::vector<std::string> inputs;  // telemetry CSVs; empty -> synthetic fleet
  FleetSynthSpec synth;

  std::string household_input;  // household mode; empty -> generated sample
  int household_months = 48;    // span of the generated sample

  PredictorSet predictors = PredictorSet::combined;
  std::vector<std::size_t> windows{14};
  std::vector<std::size_t> samples{30};
  std::vector<std::size_t> rolls{1};
  WindowPolicy policy = WindowPolicy::expanding;
  bool waive_size_rule = false;  // silence the sample > window > 2*roll check

  std::string grid = "minimal";  // minimal | boosted | standard
  int ensemble_size = 48;        // decomposition ensemble
  double noise_amplitude = 0.2;

  /** Cross product of windows x samples x rolls, in declaration order. */
  std::vector<SweepCell> cells() const;

  /** Candidate final models named by the `grid` preset. */
  std::vector<EnsembleSpec> model_grid() const;

  /** Candidates for the per-mode component models. */
  std::vector<EnsembleSpec> component_grid() const;

  /** One line per sweep cell breaking sample > window > 2*roll; empty when
      the rule holds everywhere or was waived. */
  std::vector<std::string> constraint_warnings() const;
};

/** Reads a config. Unknown keys, malformed values, and a missing or wrong
    `schema = 1` line all throw ConfigError naming the offender. */
PipelineConfig parse_config(std::istream& in, const std::string& origin = "config");
PipelineConfig parse_config_file(const std::string& path);

/** An error rethrown with the pipeline stage that raised it. `code` is the
    suggested process exit status (2 config, 3 data, 4 otherwise). */
struct StageFailure : Error {
  StageFailure(const std::string& stage_name, const std::exception& cause, int exit_code);
  std::string stage;
  int code;
};

int exit_code_for(const std::exception& e);

struct CellResult {
  SweepCell cell;
  EnsembleSpec chosen;  // grid winner; refit per roll inside the backtest
  BacktestReport model;
  BacktestReport naive;
};

struct BatteryAnalysis {
  std::string name;
  DailySeries series;  // regularized daily channels: soh, cycles, temp, freq
  Decomposition decomposition;
  SohSeries soh;
  CycleSeries cycles;
  std::vector<CellResult> cells;
  std::size_t best = 0;  // index of the lowest-MAE cell
};

/**
 * The full per-battery chain: clean, pulse features, outlier sweep,
 * decomposition, component models, tuning, walk-forward evaluation. Touches
 * no files. Failures surface as StageFailure naming the stage.
 */
BatteryAnalysis analyze_battery(const RawTelemetry& raw, const PipelineConfig& cfg,
                                int battery_index);

struct HouseholdAnalysis {
  DailySeries monthly;  // gap-imputed, peak-scaled target
  double scale = 1.0;   // divisor that brought the peak to one
  CellResult cell;
};

/** Monthly-consumption variant: impute, scale to the series peak, tune, and
    walk-forward against persistence. Uses the first sweep cell. */
HouseholdAnalysis analyze_household(const DailySeries& monthly, const PipelineConfig& cfg);

struct PipelineResult {
  std::vector<std::string> warnings;
  std::vector<BatteryAnalysis> batteries;
  HouseholdAnalysis household;  // household mode only
  WilcoxonResult fleet_test;    // per-battery model vs naive MAE, when defined
  bool fleet_test_defined = false;
  std::vector<std::string> artifacts;  // files written, relative to output_dir
};

/**
 * End-to-end run: analysis plus artifacts under cfg.output_dir (per-battery
 * report/naive/metrics/chart per sweep cell, fleet comparison.csv and
 * summary.json, or the household equivalents). Bit-identical files for a
 * given config and seed. Anything this run created is removed again when a
 * stage fails; the failure is rethrown as StageFailure.
 */
PipelineResult run_pipeline(const PipelineConfig& cfg);

/** Deterministic SVG line chart of a backtest report: truth and prediction
    lines over a shaded confidence band. */
std::string line_chart_svg(const std::string& title, const std::vector<std::string>& x_labels,
                           const BacktestReport& report);

}  // namespace soh
