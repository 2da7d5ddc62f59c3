#include "sohcast/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>
#include <utility>

#include "json.hpp"
#include "sohcast/hilbert.hpp"
#include "sohcast/ingest.hpp"
#include "sohcast/reframe.hpp"

namespace soh {
namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/** Shortest decimal form that round-trips; shared by every CSV writer so
    artifact bytes do not depend on locale or stream state. */
std::string fmt(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

int classify(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e)) return 2;
  if (dynamic_cast<const Error*>(&e)) return 3;
  return 4;
}

template <class F>
auto run_stage(const std::string& name, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageFailure&) {
    throw;  // already attributed to the stage that raised it
  } catch (const std::exception& e) {
    throw StageFailure(name, e, classify(e));
  }
}

const char* method_name(EnsembleMethod m) {
  switch (m) {
    case EnsembleMethod::gradient_boosting: return "gradient_boosting";
    case EnsembleMethod::random_forest: return "random_forest";
    case EnsembleMethod::extra_trees: return "extra_trees";
  }
  return "unknown";
}

const char* policy_name(WindowPolicy p) {
  return p == WindowPolicy::sliding ? "sliding" : "expanding";
}

const char* predictor_set_name(PredictorSet p) {
  switch (p) {
    case PredictorSet::basic: return "basic";
    case PredictorSet::imfs: return "imfs";
    case PredictorSet::combined: return "basic+imfs";
  }
  return "unknown";
}

EnsembleSpec boosted(int n, double lr, int depth, const std::string& label) {
  EnsembleSpec s;
  s.method = EnsembleMethod::gradient_boosting;
  s.n_estimators = n;
  s.learning_rate = lr;
  s.tree.max_depth = depth;
  s.label = label;
  return s;
}

/** Values of a consecutive-date series looked up by date against another
    consecutive-date index; dates outside the source stay NaN. */
std::vector<double> aligned_to(const std::vector<std::int64_t>& want, std::int64_t have_first,
                               const std::vector<double>& have) {
  std::vector<double> out(want.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t i = 0; i < want.size(); ++i) {
    const std::int64_t k = want[i] - have_first;
    if (k >= 0 && k < static_cast<std::int64_t>(have.size())) out[i] = have[k];
  }
  return out;
}

EnsembleSpec tune_cell(const SupervisedFrame& frame, const SweepCell& cell,
                       const std::vector<EnsembleSpec>& grid, std::uint64_t seed) {
  if (frame.rows() <= cell.sample)
    throw InsufficientTrainingData("cell sample=" + std::to_string(cell.sample) +
                                   " needs more than " + std::to_string(cell.sample) +
                                   " frame rows, got " + std::to_string(frame.rows()));
  const SupervisedFrame train = slice_frame(frame, 0, frame.rows() - cell.sample);
  EnsembleSpec chosen = grid.front();
  if (grid.size() > 1 && train.rows() >= 2)
    chosen = grid_search(train, grid, std::min<std::size_t>(10, train.rows() - 1)).best;
  chosen.seed = seed;
  return chosen;
}

}  // namespace

StageFailure::StageFailure(const std::string& stage_name, const std::exception& cause,
                           int exit_code)
    : Error(stage_name + ": " + cause.what()), stage(stage_name), code(exit_code) {}

int exit_code_for(const std::exception& e) {
  if (const auto* sf = dynamic_cast<const StageFailure*>(&e)) return sf->code;
  return classify(e);
}

std::vector<SweepCell> PipelineConfig::cells() const {
  if (windows.empty() || samples.empty() || rolls.empty())
    throw ConfigError("windows, samples, and rolls must each list at least one value");
  std::vector<SweepCell> out;
  for (std::size_t w : windows)
    for (std::size_t s : samples)
      for (std::size_t r : rolls) {
        if (w == 0 || s == 0 || r == 0)
          throw ConfigError("sweep values must be positive");
        out.push_back({w, s, r});
      }
  return out;
}

std::vector<EnsembleSpec> PipelineConfig::model_grid() const {
  if (grid == "minimal") return {boosted(50, 0.1, 2, "gb-50x2")};
  if (grid == "boosted" || grid == "standard") {
    EnsembleSpec sub = boosted(100, 0.05, 3, "gb-100x3-sub");
    sub.subsample = 0.8;
    sub.subsample_freq = 1;
    std::vector<EnsembleSpec> out = {boosted(250, 0.1, 6, "gb-250x6"),
                                     boosted(50, 0.1, 2, "gb-50x2"), sub};
    if (grid == "boosted") return out;
    EnsembleSpec rf;
    rf.method = EnsembleMethod::random_forest;
    rf.n_estimators = 100;
    rf.tree.max_depth = 12;
    rf.label = "rf-100";
    EnsembleSpec etr = rf;
    etr.method = EnsembleMethod::extra_trees;
    etr.label = "etr-100";
    out.push_back(rf);
    out.push_back(etr);
    return out;
  }
  throw ConfigError("unknown model grid '" + grid + "' (expected minimal, boosted, or standard)");
}

std::vector<EnsembleSpec> PipelineConfig::component_grid() const {
  if (grid == "minimal") return {boosted(30, 0.1, 3, "gb-30x3")};
  if (grid == "boosted" || grid == "standard")
    return {boosted(30, 0.1, 3, "gb-30x3"), boosted(80, 0.05, 3, "gb-80x3")};
  throw ConfigError("unknown model grid '" + grid + "' (expected minimal, boosted, or standard)");
}

std::vector<std::string> PipelineConfig::constraint_warnings() const {
  std::vector<std::string> out;
  if (waive_size_rule) return out;
  for (const SweepCell& c : cells()) {
    if (c.sample > c.window && c.window > 2 * c.roll) continue;
    out.push_back("sweep cell window=" + std::to_string(c.window) +
                  " sample=" + std::to_string(c.sample) + " roll=" + std::to_string(c.roll) +
                  " breaks sample > window > 2*roll; proceeding anyway");
  }
  return out;
}

PipelineConfig parse_config(std::istream& in, const std::string& origin) {
  PipelineConfig cfg;
  bool schema_seen = false;
  std::string line;
  std::size_t line_no = 0;

  auto fail = [&](const std::string& msg) {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
  };
  auto parse_u64 = [&](const std::string& v) -> std::uint64_t {
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail("expected a non-negative integer, got '" + v + "'");
    return out;
  };
  auto parse_int = [&](const std::string& v) -> int {
    int out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail("expected an integer, got '" + v + "'");
    return out;
  };
  auto parse_dbl = [&](const std::string& v) -> double {
    double out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
      fail("expected a number, got '" + v + "'");
    return out;
  };
  auto parse_bool = [&](const std::string& v) -> bool {
    if (v == "true") return true;
    if (v == "false") return false;
    fail("expected true or false, got '" + v + "'");
    return false;
  };
  auto parse_sizes = [&](const std::string& v) {
    std::vector<std::size_t> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (t.empty()) fail("empty entry in list '" + v + "'");
      const std::uint64_t n = parse_u64(t);
      if (n == 0) fail("list entries must be positive, got '" + t + "'");
      out.push_back(static_cast<std::size_t>(n));
    }
    if (out.empty()) fail("expected a non-empty list");
    return out;
  };
  auto parse_paths = [&](const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) out.push_back(t);
    }
    return out;
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos) fail("expected key = value, got '" + t + "'");
    const std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    if (key.empty()) fail("missing key before '='");

    if (key == "schema") {
      if (parse_int(value) != 1) fail("unsupported schema " + value + " (this build reads 1)");
      schema_seen = true;
    } else if (key == "mode") {
      if (value != "battery" && value != "household")
        fail("mode must be battery or household, got '" + value + "'");
      cfg.mode = value;
    } else if (key == "seed") {
      cfg.seed = parse_u64(value);
    } else if (key == "output_dir") {
      if (value.empty()) fail("output_dir must not be empty");
      cfg.output_dir = value;
    } else if (key == "workers") {
      cfg.workers = parse_int(value);
      if (cfg.workers < 1) fail("workers must be at least 1");
    } else if (key == "inputs") {
      cfg.inputs = parse_paths(value);
    } else if (key == "household_input") {
      cfg.household_input = value;
    } else if (key == "household_months") {
      cfg.household_months = parse_int(value);
      if (cfg.household_months < 1) fail("household_months must be at least 1");
    } else if (key == "predictors") {
      if (value == "basic")
        cfg.predictors = PredictorSet::basic;
      else if (value == "imfs")
        cfg.predictors = PredictorSet::imfs;
      else if (value == "basic+imfs")
        cfg.predictors = PredictorSet::combined;
      else
        fail("predictors must be basic, imfs, or basic+imfs, got '" + value + "'");
    } else if (key == "windows") {
      cfg.windows = parse_sizes(value);
    } else if (key == "samples") {
      cfg.samples = parse_sizes(value);
    } else if (key == "rolls") {
      cfg.rolls = parse_sizes(value);
    } else if (key == "policy") {
      if (value == "expanding")
        cfg.policy = WindowPolicy::expanding;
      else if (value == "sliding")
        cfg.policy = WindowPolicy::sliding;
      else
        fail("policy must be expanding or sliding, got '" + value + "'");
    } else if (key == "waive_size_rule") {
      cfg.waive_size_rule = parse_bool(value);
    } else if (key == "grid") {
      if (value != "minimal" && value != "boosted" && value != "standard")
        fail("grid must be minimal, boosted, or standard, got '" + value + "'");
      cfg.grid = value;
    } else if (key == "ensemble_size") {
      cfg.ensemble_size = parse_int(value);
      if (cfg.ensemble_size < 0) fail("ensemble_size must not be negative");
    } else if (key == "noise_amplitude") {
      cfg.noise_amplitude = parse_dbl(value);
      if (cfg.noise_amplitude < 0) fail("noise_amplitude must not be negative");
    } else if (key == "synth_batteries") {
      cfg.synth.n_batteries = parse_int(value);
    } else if (key == "synth_years") {
      cfg.synth.years = parse_dbl(value);
    } else if (key == "synth_degradation_pp_per_year") {
      cfg.synth.degradation_pp_per_year = parse_dbl(value);
    } else if (key == "synth_pulses_per_day") {
      cfg.synth.pulses_per_day = parse_dbl(value);
    } else if (key == "synth_mean_delta_soc") {
      cfg.synth.mean_delta_soc = parse_dbl(value);
    } else if (key == "synth_sd_delta_soc") {
      cfg.synth.sd_delta_soc = parse_dbl(value);
    } else if (key == "synth_nominal_capacity_wh") {
      cfg.synth.nominal_capacity_wh = parse_dbl(value);
    } else if (key == "synth_capacity_noise_pp") {
      cfg.synth.capacity_noise_pp = parse_dbl(value);
    } else if (key == "synth_seasonal_temp_amplitude") {
      cfg.synth.seasonal_temp_amplitude = parse_dbl(value);
    } else if (key == "synth_fault_bursts") {
      cfg.synth.faults.bursts = parse_int(value);
    } else if (key == "synth_fault_magnitude_pp") {
      cfg.synth.faults.magnitude_pp = parse_dbl(value);
    } else if (key == "synth_fault_duration_days") {
      cfg.synth.faults.duration_days = parse_int(value);
    } else {
      fail("unknown key '" + key + "'");
    }
  }

  if (!schema_seen) throw ConfigError(origin + ": missing required 'schema = 1' line");
  cfg.synth.seed = cfg.seed;
  return cfg;
}

PipelineConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in, path);
}

BatteryAnalysis analyze_battery(const RawTelemetry& raw, const PipelineConfig& cfg,
                                int battery_index) {
  BatteryAnalysis out;
  out.name = "battery_" + std::to_string(battery_index);
  const std::string at = out.name + "/";

  const RawTelemetry cleaned = run_stage(at + "clean", [&] {
    RawTelemetry c = clean_telemetry(raw);
    c.validate();
    return c;
  });

  run_stage(at + "features", [&] {
    const std::vector<ChargingPulse> pulses = detect_pulses(cleaned);
    if (pulses.empty()) throw InsufficientData("no charging pulses in the telemetry");
    out.soh = estimate_soh(pulses);
    out.cycles = equivalent_cycles(pulses);
  });

  DailySeries s;
  run_stage(at + "outliers", [&] {
    s.dates = out.soh.dates;
    s.target = "soh";
    s.channels["soh"] = out.soh.soh;
    s.channels["cycles"] = aligned_to(s.dates, out.cycles.dates.front(), out.cycles.cycles);
    const DailySeries day_agg = aggregate_daily(cleaned);
    s.channels["temp"] = aligned_to(s.dates, day_agg.dates.front(), day_agg.channel("ambient_temp"));
    // Temperature first: its edge days carry pulses and therefore samples,
    // which stops being true once the outlier fence trims the SoH edges.
    s = impute_gaps(s, "temp");
    s = impute_gaps(trim_edges(remove_outliers(s, "soh").series, "soh"), "soh");
    s.validate();
  });

  run_stage(at + "decompose", [&] {
    DecomposeSpec d;
    d.ensemble_size = cfg.ensemble_size;
    d.noise_amplitude = cfg.noise_amplitude;
    d.seed = cfg.seed + 1 + static_cast<std::uint64_t>(battery_index);
    out.decomposition = decompose(s.channel("soh"), d);
    if (!out.decomposition.imfs.empty()) s.channels["freq"] = soh_inst_freq(out.decomposition);
  });
  out.series = s;

  const bool with_components = cfg.predictors != PredictorSet::basic;
  const std::vector<EnsembleSpec> grid = cfg.model_grid();
  const std::vector<EnsembleSpec> comp_grid = cfg.component_grid();

  std::vector<std::string> lagged;
  if (cfg.predictors != PredictorSet::imfs) lagged = {"soh", "cycles", "temp"};
  const std::vector<std::string> unlagged =
      with_components ? std::vector<std::string>{"freq"} : std::vector<std::string>{};

  // Component models depend only on the lag depth, so sweep cells sharing a
  // window reuse one augmented series.
  struct WindowData {
    DailySeries series;
    std::vector<std::string> components;
  };
  std::map<std::size_t, WindowData> per_window;
  auto window_data = [&](std::size_t window) -> const WindowData& {
    auto it = per_window.find(window);
    if (it != per_window.end()) return it->second;
    WindowData wd{s, {}};
    if (with_components) {
      run_stage(at + "components", [&] {
        if (out.decomposition.imfs.empty())
          throw NoOscillatoryComponent("no modes to build component predictors from");
        ComponentModelSpec how;
        how.predictors = {"component"};
        how.past = window;
        AugmentResult aug = fit_imf_predictors(s, out.decomposition, comp_grid, how);
        wd.series = std::move(aug.series);
        wd.components = std::move(aug.added);
      });
    }
    return per_window.emplace(window, std::move(wd)).first->second;
  };

  for (const SweepCell& cell : cfg.cells()) {
    const WindowData& wd = window_data(cell.window);
    // Component channels hold one-step-ahead forecasts of the target row,
    // built from data through the prior day. They enter at the target row
    // like freq does; lagging them would hand the model yesterday's forecast
    // of yesterday instead of today's.
    std::vector<std::string> cell_unlagged = unlagged;
    cell_unlagged.insert(cell_unlagged.end(), wd.components.begin(), wd.components.end());

    CellResult cr;
    cr.cell = cell;
    SupervisedFrame frame;
    run_stage(at + "tune", [&] {
      frame = make_frame(wd.series, lagged, "soh", cell.window, 1, cell_unlagged);
      cr.chosen = tune_cell(frame, cell, grid, cfg.seed);
    });
    run_stage(at + "backtest", [&] {
      WalkForwardSpec wf;
      wf.n_sample = cell.sample;
      wf.n_roll = cell.roll;
      wf.policy = cfg.policy;
      cr.model = walk_forward(frame, cr.chosen, wf);
      cr.naive = persistence_walk_forward(frame, wf);
    });
    out.cells.push_back(std::move(cr));
  }

  out.best = 0;
  for (std::size_t i = 1; i < out.cells.size(); ++i)
    if (out.cells[i].model.metrics.mae < out.cells[out.best].model.metrics.mae) out.best = i;
  return out;
}

HouseholdAnalysis analyze_household(const DailySeries& monthly, const PipelineConfig& cfg) {
  HouseholdAnalysis out;
  run_stage("household/normalize", [&] {
    out.monthly = impute_gaps(monthly, monthly.target);
    out.scale = scale_to_peak(out.monthly.channel(out.monthly.target));
  });

  const SweepCell cell{cfg.windows.front(), cfg.samples.front(), cfg.rolls.front()};
  CellResult cr;
  cr.cell = cell;
  SupervisedFrame frame;
  run_stage("household/tune", [&] {
    frame = make_frame(out.monthly, {out.monthly.target}, out.monthly.target, cell.window, 1);
    cr.chosen = tune_cell(frame, cell, cfg.model_grid(), cfg.seed);
  });
  run_stage("household/backtest", [&] {
    WalkForwardSpec wf;
    wf.n_sample = cell.sample;
    wf.n_roll = cell.roll;
    wf.policy = cfg.policy;
    cr.model = walk_forward(frame, cr.chosen, wf);
    cr.naive = persistence_walk_forward(frame, wf);
  });
  out.cell = std::move(cr);
  return out;
}

namespace {

std::string svg_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

void svg_append(std::string& out, const char* format, ...) {
  char buf[512];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  out += buf;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::vector<std::string>& x_labels,
                           const BacktestReport& report) {
  const double width = 860, height = 420;
  const double left = 64, right = width - 18, top = 40, bottom = height - 46;
  const std::size_t n = report.truth.size();
  if (n == 0) throw EmptyInput("nothing to chart");

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  auto scan = [&](const std::vector<double>& v) {
    for (double x : v)
      if (std::isfinite(x)) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
      }
  };
  scan(report.truth);
  scan(report.predicted);
  scan(report.ci_lo);
  scan(report.ci_hi);
  if (!(hi > lo)) {
    hi = lo + 1;
    lo -= 1;
  }
  const double pad = 0.06 * (hi - lo);
  lo -= pad;
  hi += pad;

  auto X = [&](std::size_t i) {
    return n > 1 ? left + (right - left) * static_cast<double>(i) / static_cast<double>(n - 1)
                 : (left + right) / 2;
  };
  auto Y = [&](double v) { return bottom - (bottom - top) * (v - lo) / (hi - lo); };

  std::string out;
  out.reserve(4096 + 48 * n);
  svg_append(out,
             "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 %.0f %.0f\" "
             "font-family=\"sans-serif\">\n",
             width, height);
  out += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  svg_append(out, "<text x=\"%.0f\" y=\"22\" font-size=\"14\" text-anchor=\"middle\" "
                  "fill=\"#333333\">%s</text>\n",
             width / 2, svg_escape(title).c_str());

  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    const double y = Y(v);
    svg_append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                    "stroke=\"#e5e5e5\"/>\n",
               left, y, right, y);
    svg_append(out, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"10\" text-anchor=\"end\" "
                    "fill=\"#666666\">%.4g</text>\n",
               left - 6, y + 3, v);
  }

  const std::size_t step = std::max<std::size_t>(1, (n > 1 ? n - 1 : 1) / 5);
  for (std::size_t i = 0; i < n; i += step) {
    const double x = X(i);
    svg_append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                    "stroke=\"#999999\"/>\n",
               x, bottom, x, bottom + 4);
    if (i < x_labels.size())
      svg_append(out, "<text x=\"%.2f\" y=\"%.2f\" font-size=\"10\" text-anchor=\"middle\" "
                      "fill=\"#666666\">%s</text>\n",
                 x, bottom + 16, svg_escape(x_labels[i]).c_str());
  }
  svg_append(out, "<line x1=\"%.2f\" y1=\"%.2f\" x2=\"%.2f\" y2=\"%.2f\" "
                  "stroke=\"#999999\"/>\n",
             left, bottom, right, bottom);

  out += "<polygon fill=\"#4c78a8\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
  for (std::size_t i = 0; i < n; ++i) svg_append(out, "%.2f,%.2f ", X(i), Y(report.ci_hi[i]));
  for (std::size_t i = n; i-- > 0;) svg_append(out, "%.2f,%.2f ", X(i), Y(report.ci_lo[i]));
  out += "\"/>\n";

  auto polyline = [&](const std::vector<double>& v, const char* stroke) {
    svg_append(out, "<polyline fill=\"none\" stroke=\"%s\" stroke-width=\"1.6\" points=\"",
               stroke);
    for (std::size_t i = 0; i < n; ++i) svg_append(out, "%.2f,%.2f ", X(i), Y(v[i]));
    out += "\"/>\n";
  };
  polyline(report.truth, "#333333");
  polyline(report.predicted, "#4c78a8");

  svg_append(out, "<line x1=\"%.0f\" y1=\"32\" x2=\"%.0f\" y2=\"32\" stroke=\"#333333\" "
                  "stroke-width=\"1.6\"/>\n",
             left, left + 18);
  svg_append(out, "<text x=\"%.0f\" y=\"35\" font-size=\"10\" fill=\"#333333\">observed</text>\n",
             left + 22);
  svg_append(out, "<line x1=\"%.0f\" y1=\"32\" x2=\"%.0f\" y2=\"32\" stroke=\"#4c78a8\" "
                  "stroke-width=\"1.6\"/>\n",
             left + 90, left + 108);
  svg_append(out,
             "<text x=\"%.0f\" y=\"35\" font-size=\"10\" fill=\"#333333\">predicted</text>\n",
             left + 112);
  out += "</svg>\n";
  return out;
}

namespace {

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!out) throw Error("cannot write " + p.string());
}

std::string cell_id(const SweepCell& c) {
  return "cell_w" + std::to_string(c.window) + "_s" + std::to_string(c.sample) + "_r" +
         std::to_string(c.roll);
}

std::string report_csv(const BacktestReport& r, bool monthly_dates) {
  std::string out = "date,truth,prediction,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < r.truth.size(); ++i) {
    out += monthly_dates ? month_label(r.dates[i]) : format_day(r.dates[i]);
    out += ',' + fmt(r.truth[i]) + ',' + fmt(r.predicted[i]) + ',' + fmt(r.ci_lo[i]) + ',' +
           fmt(r.ci_hi[i]) + '\n';
  }
  return out;
}

std::vector<std::string> date_labels(const std::vector<std::int64_t>& dates, bool monthly) {
  std::vector<std::string> out;
  out.reserve(dates.size());
  for (std::int64_t d : dates) out.push_back(monthly ? month_label(d) : format_day(d));
  return out;
}

ordered_json spec_json(const EnsembleSpec& s) {
  ordered_json j;
  j["method"] = method_name(s.method);
  j["n_estimators"] = s.n_estimators;
  j["learning_rate"] = s.learning_rate;
  j["max_depth"] = s.tree.max_depth;
  j["subsample"] = s.subsample;
  j["bootstrap"] = s.bootstrap;
  return j;
}

ordered_json metric_json(const MetricSet& m) {
  ordered_json j;
  j["mae"] = m.mae;
  j["rmse"] = m.rmse;
  j["r2"] = m.r2;
  j["evar"] = m.evar;
  return j;
}

ordered_json cell_json(const CellResult& cr, const PipelineConfig& cfg) {
  ordered_json j;
  j["window"] = cr.cell.window;
  j["sample"] = cr.cell.sample;
  j["roll"] = cr.cell.roll;
  j["policy"] = policy_name(cfg.policy);
  j["model"] = cr.chosen.label;
  j["spec"] = spec_json(cr.chosen);
  j["metrics"] = metric_json(cr.model.metrics);
  j["naive"] = {{"mae", cr.naive.metrics.mae}, {"rmse", cr.naive.metrics.rmse}};
  j["ci_degenerate"] = cr.model.ci_degenerate;
  return j;
}

ordered_json config_echo(const PipelineConfig& cfg) {
  ordered_json j;
  j["mode"] = cfg.mode;
  j["seed"] = cfg.seed;
  j["grid"] = cfg.grid;
  j["predictors"] = predictor_set_name(cfg.predictors);
  j["policy"] = policy_name(cfg.policy);
  j["ensemble_size"] = cfg.ensemble_size;
  j["noise_amplitude"] = cfg.noise_amplitude;
  j["windows"] = cfg.windows;
  j["samples"] = cfg.samples;
  j["rolls"] = cfg.rolls;
  return j;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  PipelineResult result;
  result.warnings = cfg.constraint_warnings();

  const fs::path root = cfg.output_dir.empty() ? fs::path(".") : fs::path(cfg.output_dir);
  std::error_code ec;
  const bool created_root = fs::create_directories(root, ec);
  if (ec) throw StageFailure("report", Error("cannot create " + root.string() + ": " + ec.message()), 4);

  std::vector<fs::path> created;  // removed again, newest first, when a stage fails
  auto note_file = [&](const fs::path& p, const std::string& body) {
    write_text(p, body);
    result.artifacts.push_back(p.lexically_relative(root).generic_string());
  };
  auto make_dir = [&](const fs::path& p) {
    fs::create_directories(p);
    created.push_back(p);
  };

  try {
    if (cfg.mode == "household") {
      const DailySeries monthly = run_stage("ingest", [&] {
        if (!cfg.household_input.empty()) return ingest_household(cfg.household_input);
        const fs::path sample = root / "household_sample.csv";
        write_household_sample(sample.string(), cfg.household_months, cfg.seed);
        created.push_back(sample);
        result.artifacts.push_back(sample.lexically_relative(root).generic_string());
        return ingest_household(sample.string());
      });

      result.household = analyze_household(monthly, cfg);

      run_stage("report", [&] {
        const fs::path dir = root / "household";
        make_dir(dir);
        const CellResult& cr = result.household.cell;
        note_file(dir / "report.csv", report_csv(cr.model, true));
        note_file(dir / "naive.csv", report_csv(cr.naive, true));
        note_file(dir / "chart.svg",
                  line_chart_svg("household " + cr.chosen.label,
                                 date_labels(cr.model.dates, true), cr.model));
        ordered_json m = cell_json(cr, cfg);
        m["scale"] = result.household.scale;
        note_file(dir / "metrics.json", m.dump(2) + "\n");

        ordered_json summary;
        summary["config"] = config_echo(cfg);
        summary["warnings"] = result.warnings;
        summary["household"] = {{"model", cr.chosen.label},
                                {"rmse", cr.model.metrics.rmse},
                                {"mae", cr.model.metrics.mae},
                                {"naive_rmse", cr.naive.metrics.rmse},
                                {"naive_mae", cr.naive.metrics.mae},
                                {"scale", result.household.scale}};
        const fs::path sj = root / "summary.json";
        note_file(sj, summary.dump(2) + "\n");
        created.push_back(sj);
      });
      return result;
    }

    // Battery fleet.
    std::vector<RawTelemetry> raws;
    std::vector<std::string> names;
    run_stage("ingest", [&] {
      if (!cfg.inputs.empty()) {
        std::map<std::string, int> seen;
        for (const std::string& path : cfg.inputs) {
          raws.push_back(ingest_telemetry(path));
          std::string stem = fs::path(path).stem().string();
          if (stem.empty()) stem = "battery";
          const int k = ++seen[stem];
          names.push_back(k == 1 ? stem : stem + "_" + std::to_string(k));
        }
      } else {
        FleetSynthSpec sp = cfg.synth;
        sp.seed = cfg.seed;
        sp.validate();
        raws = synth_fleet(sp);
        for (std::size_t i = 0; i < raws.size(); ++i)
          names.push_back("battery_" + std::to_string(i));
      }
    });

    const std::size_t n = raws.size();
    std::vector<BatteryAnalysis> analyses(n);
    std::vector<std::exception_ptr> errors(n);
    auto work = [&](std::size_t i) {
      try {
        analyses[i] = analyze_battery(raws[i], cfg, static_cast<int>(i));
        analyses[i].name = names[i];
      } catch (...) {
        errors[i] = std::current_exception();
      }
    };
    const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(n)));
    if (workers <= 1) {
      for (std::size_t i = 0; i < n; ++i) work(i);
    } else {
      std::atomic<std::size_t> next{0};
      std::vector<std::thread> pool;
      pool.reserve(static_cast<std::size_t>(workers));
      for (int w = 0; w < workers; ++w)
        pool.emplace_back([&] {
          for (std::size_t i; (i = next.fetch_add(1)) < n;) work(i);
        });
      for (std::thread& t : pool) t.join();
    }
    for (std::size_t i = 0; i < n; ++i)
      if (errors[i]) std::rethrow_exception(errors[i]);
    result.batteries = std::move(analyses);

    run_stage("report", [&] {
      for (const BatteryAnalysis& an : result.batteries) {
        const fs::path bdir = root / an.name;
        make_dir(bdir);

        std::string soh_csv = "date,soh,capacity_wh,cycles,temp\n";
        const std::vector<double>& soh_ch = an.series.channel("soh");
        const std::vector<double>& cyc_ch = an.series.channel("cycles");
        const std::vector<double>& tmp_ch = an.series.channel("temp");
        const std::vector<double> cap =
            aligned_to(an.series.dates, an.soh.dates.front(), an.soh.capacity_wh);
        for (std::size_t i = 0; i < an.series.size(); ++i)
          soh_csv += format_day(an.series.dates[i]) + ',' + fmt(soh_ch[i]) + ',' + fmt(cap[i]) +
                     ',' + fmt(cyc_ch[i]) + ',' + fmt(tmp_ch[i]) + '\n';
        note_file(bdir / "soh.csv", soh_csv);

        std::string modes_csv = "date";
        for (std::size_t k = 0; k < an.decomposition.imfs.size(); ++k)
          modes_csv += ",imf_" + std::to_string(k + 1);
        modes_csv += ",residue\n";
        for (std::size_t i = 0; i < an.decomposition.length(); ++i) {
          modes_csv += format_day(an.series.dates[i]);
          for (const std::vector<double>& imf : an.decomposition.imfs)
            modes_csv += ',' + fmt(imf[i]);
          modes_csv += ',' + fmt(an.decomposition.residue[i]) + '\n';
        }
        note_file(bdir / "modes.csv", modes_csv);

        for (const CellResult& cr : an.cells) {
          const fs::path cdir = bdir / cell_id(cr.cell);
          fs::create_directories(cdir);
          note_file(cdir / "report.csv", report_csv(cr.model, false));
          note_file(cdir / "naive.csv", report_csv(cr.naive, false));
          note_file(cdir / "chart.svg",
                    line_chart_svg(an.name + " " + cr.chosen.label + " " + cell_id(cr.cell),
                                   date_labels(cr.model.dates, false), cr.model));
          note_file(cdir / "metrics.json", cell_json(cr, cfg).dump(2) + "\n");
        }
      }

      if (result.batteries.size() >= 2) {
        std::vector<double> model_mae, naive_mae;
        for (const BatteryAnalysis& an : result.batteries) {
          model_mae.push_back(an.cells[an.best].model.metrics.mae);
          naive_mae.push_back(an.cells[an.best].naive.metrics.mae);
        }
        try {
          result.fleet_test = wilcoxon_signed_rank(model_mae, naive_mae);
          result.fleet_test_defined = true;
        } catch (const Error&) {
          // too few batteries or identical errors; the summary says so
        }
      }

      std::string cmp =
          "battery,window,sample,roll,model,mae,rmse,r2,evar,naive_mae,naive_rmse,best\n";
      for (const BatteryAnalysis& an : result.batteries)
        for (std::size_t i = 0; i < an.cells.size(); ++i) {
          const CellResult& cr = an.cells[i];
          cmp += an.name + ',' + std::to_string(cr.cell.window) + ',' +
                 std::to_string(cr.cell.sample) + ',' + std::to_string(cr.cell.roll) + ',' +
                 cr.chosen.label + ',' + fmt(cr.model.metrics.mae) + ',' +
                 fmt(cr.model.metrics.rmse) + ',' + fmt(cr.model.metrics.r2) + ',' +
                 fmt(cr.model.metrics.evar) + ',' + fmt(cr.naive.metrics.mae) + ',' +
                 fmt(cr.naive.metrics.rmse) + ',' + (i == an.best ? "1" : "0") + '\n';
        }
      const fs::path cmp_path = root / "comparison.csv";
      note_file(cmp_path, cmp);
      created.push_back(cmp_path);

      ordered_json summary;
      summary["config"] = config_echo(cfg);
      summary["warnings"] = result.warnings;
      summary["batteries"] = ordered_json::array();
      for (const BatteryAnalysis& an : result.batteries) {
        const CellResult& best = an.cells[an.best];
        ordered_json b;
        b["name"] = an.name;
        b["modes"] = an.decomposition.imfs.size();
        b["best"] = {{"window", best.cell.window}, {"sample", best.cell.sample},
                     {"roll", best.cell.roll},     {"model", best.chosen.label},
                     {"mae", best.model.metrics.mae}, {"naive_mae", best.naive.metrics.mae}};
        summary["batteries"].push_back(std::move(b));
      }
      if (result.fleet_test_defined)
        summary["fleet_test"] = {{"statistic", result.fleet_test.statistic},
                                 {"p_value", result.fleet_test.p_value},
                                 {"exact", result.fleet_test.exact},
                                 {"n", result.fleet_test.n}};
      else
        summary["fleet_test"] = nullptr;
      const fs::path sj = root / "summary.json";
      note_file(sj, summary.dump(2) + "\n");
      created.push_back(sj);
    });
    return result;
  } catch (...) {
    std::error_code ignore;
    for (auto it = created.rbegin(); it != created.rend(); ++it) fs::remove_all(*it, ignore);
    if (created_root) fs::remove(root, ignore);
    throw;
  }
}

}  // namespace soh
