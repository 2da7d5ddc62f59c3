#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sohcast/timeseries.hpp"

namespace soh {

/** One detected charging event, bounded by telemetry samples. */
struct ChargingPulse {
  std::int64_t start = 0;        // UTC seconds of first sample in the pulse
  std::int64_t end = 0;          // UTC seconds of last sample
  double duration_minutes = 0;   // end - start, in minutes
  double delta_soc = 0;          // SOC percent gained, > 0
  double delta_v = 0;            // terminal voltage change over the pulse
  double mean_voltage = 0;
  double mean_current = 0;
  double energy_wh = 0;          // integral of v * i over the pulse

  std::int64_t day() const { return day_of(start); }
};

/** Daily state-of-health, percent of initial capacity. */
struct SohSeries {
  std::vector<std::int64_t> dates;  // consecutive days
  std::vector<double> soh;          // percent, 100 * capacity / initial_capacity
  std::vector<double> capacity_wh;  // per-day pooled capacity estimate
  double initial_capacity_wh = 0;   // reference from the first days with pulses

  std::size_t size() const { return dates.size(); }
};

/** Cumulative equivalent full cycles, sampled daily. */
struct CycleSeries {
  std::vector<std::int64_t> dates;
  std::vector<double> cycles;  // nondecreasing

  std::size_t size() const { return dates.size(); }
};

struct OutlierResult {
  DailySeries series;       // input with out-of-fence values set to NaN
  double fraction_removed;  // removed / previously-present
  std::size_t removed;
};

/**
 * Flags values of `channel` outside the Tukey fences of its finite values.
 * Flagged entries become NaN so a later impute pass can fill them.
 */
OutlierResult remove_outliers(const DailySeries& series, const std::string& channel);

/**
 * Fills interior NaN runs of `channel` with the mean of the two bracketing
 * present values. A run touching the first or last index has nothing to
 * bracket it and throws UnboundedGap.
 */
DailySeries impute_gaps(const DailySeries& series, const std::string& channel);

/**
 * Drops leading and trailing rows where `channel` is NaN, so a boundary
 * value knocked out by the outlier fence is removed rather than imputed.
 * Interior gaps are left for impute_gaps. Throws EmptyInput when nothing
 * in the channel is present.
 */
DailySeries trim_edges(const DailySeries& series, const std::string& channel);

/**
 * Scales values in place so the largest finite magnitude becomes 1 and
 * returns the divisor. Reporting errors in peak-relative units makes series
 * of different absolute scale comparable. Throws DegenerateSample when there
 * is nothing to scale by (no finite values, or all zero).
 */
double scale_to_peak(std::vector<double>& values);

struct PulseDetectionSpec {
  double min_minutes = 5.0;       // pulses shorter than this are discarded
  double max_minutes = 30.0;      // and longer than this
  int plateau_tolerance = 2;      // consecutive non-increasing samples allowed
};

/**
 * Finds charging pulses: maximal sample runs of increasing SOC, tolerating
 * short plateaus (quantized SOC sensors hold a value for a minute or two
 * mid-charge). Runs outside the duration band are dropped.
 */
std::vector<ChargingPulse> detect_pulses(const RawTelemetry& raw,
                                         const PulseDetectionSpec& spec = {});

struct SohSpec {
  int reference_days = 14;  // days with pulses pooled into the initial capacity
};

/**
 * Pools each day's pulses into a capacity estimate (summed energy over summed
 * SOC fraction) and normalizes by the mean capacity of the first
 * `reference_days` days that have pulses. The series runs from the first
 * pulse day to the last; days without pulses in between are imputed with the
 * mean of the bracketing estimates.
 */
SohSeries estimate_soh(const std::vector<ChargingPulse>& pulses, const SohSpec& spec = {});

/**
 * Cumulative equivalent full cycles: sum of delta_soc / nominal over all
 * pulses so far, sampled at each day from the first pulse to the last.
 */
CycleSeries equivalent_cycles(const std::vector<ChargingPulse>& pulses,
                              double nominal_soc_per_cycle = 100.0);

}  // namespace soh
