#include "sohcast/preprocess.hpp"

#include <cmath>
#include <map>

#include "sohcast/errors.hpp"

namespace soh {

OutlierResult remove_outliers(const DailySeries& series, const std::string& channel) {
  const std::vector<double>& values = series.channel(channel);
  const SeriesStats stats = quartile_stats(values);

  OutlierResult result{series, 0.0, 0};
  std::vector<double>& out = result.series.channel(channel);
  for (double& v : out) {
    if (!std::isfinite(v)) continue;
    if (v < stats.lower_fence || v > stats.upper_fence) {
      v = std::nan("");
      ++result.removed;
    }
  }
  result.fraction_removed = static_cast<double>(result.removed) / static_cast<double>(stats.n);
  return result;
}

namespace {

// Fills interior NaN runs in place with the mean of the bracketing values.
// `what` names the data in error messages.
void fill_interior_gaps(std::vector<double>& v, const std::string& what) {
  if (v.empty()) return;
  if (!std::isfinite(v.front()))
    throw UnboundedGap(what + " starts with a gap, nothing to bracket it");
  if (!std::isfinite(v.back()))
    throw UnboundedGap(what + " ends with a gap, nothing to bracket it");
  std::size_t i = 1;
  while (i < v.size()) {
    if (std::isfinite(v[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (!std::isfinite(v[j])) ++j;  // terminates, v.back() is finite
    const double fill = 0.5 * (v[i - 1] + v[j]);
    for (std::size_t k = i; k < j; ++k) v[k] = fill;
    i = j + 1;
  }
}

}  // namespace

DailySeries impute_gaps(const DailySeries& series, const std::string& channel) {
  DailySeries out = series;
  fill_interior_gaps(out.channel(channel), "channel '" + channel + "'");
  return out;
}

DailySeries trim_edges(const DailySeries& series, const std::string& channel) {
  const std::vector<double>& v = series.channel(channel);
  std::size_t first = 0, last = v.size();
  while (first < last && std::isnan(v[first])) ++first;
  while (last > first && std::isnan(v[last - 1])) --last;
  if (first == last) throw EmptyInput("channel '" + channel + "' has no present values");
  if (first == 0 && last == v.size()) return series;

  DailySeries out;
  out.target = series.target;
  out.dates.assign(series.dates.begin() + static_cast<std::ptrdiff_t>(first),
                   series.dates.begin() + static_cast<std::ptrdiff_t>(last));
  for (const auto& [name, values] : series.channels)
    out.channels[name].assign(values.begin() + static_cast<std::ptrdiff_t>(first),
                              values.begin() + static_cast<std::ptrdiff_t>(last));
  return out;
}

std::vector<ChargingPulse> detect_pulses(const RawTelemetry& raw,
                                         const PulseDetectionSpec& spec) {
  raw.validate();
  std::vector<ChargingPulse> pulses;

  const std::size_t n = raw.size();
  // Run state: start sample, last sample that registered an SOC increase, and
  // minutes of non-increasing time accumulated since then.
  std::size_t start = 0, last_rise = 0;
  bool in_run = false;
  double flat_minutes = 0.0;

  auto close_run = [&]() {
    if (!in_run) return;
    in_run = false;
    const double dsoc = raw.soc[last_rise] - raw.soc[start];
    if (dsoc <= 0.0) return;
    const double minutes =
        static_cast<double>(raw.timestamps[last_rise] - raw.timestamps[start]) / 60.0;
    if (minutes < spec.min_minutes || minutes > spec.max_minutes) return;

    ChargingPulse p;
    p.start = raw.timestamps[start];
    p.end = raw.timestamps[last_rise];
    p.duration_minutes = minutes;
    p.delta_soc = dsoc;
    p.delta_v = raw.voltage[last_rise] - raw.voltage[start];
    double v_sum = 0.0, i_sum = 0.0;
    for (std::size_t k = start; k <= last_rise; ++k) {
      v_sum += raw.voltage[k];
      i_sum += raw.current[k];
    }
    const double count = static_cast<double>(last_rise - start + 1);
    p.mean_voltage = v_sum / count;
    p.mean_current = i_sum / count;
    double energy = 0.0;
    for (std::size_t k = start; k < last_rise; ++k)
      energy += raw.voltage[k] * raw.current[k] *
                static_cast<double>(raw.timestamps[k + 1] - raw.timestamps[k]) / 3600.0;
    p.energy_wh = energy;
    pulses.push_back(p);
  };

  const double tolerance = static_cast<double>(spec.plateau_tolerance);
  for (std::size_t i = 1; i < n; ++i) {
    const double gap_minutes =
        static_cast<double>(raw.timestamps[i] - raw.timestamps[i - 1]) / 60.0;
    if (raw.soc[i] > raw.soc[i - 1]) {
      if (!in_run) {
        in_run = true;
        // A rise after a long sensor gap starts at the risen sample; the
        // charge could have begun anywhere inside the gap.
        start = (gap_minutes <= tolerance) ? i - 1 : i;
      }
      last_rise = i;
      flat_minutes = 0.0;
    } else if (in_run) {
      flat_minutes += gap_minutes;
      if (flat_minutes > tolerance) close_run();
    }
  }
  close_run();
  return pulses;
}

namespace {

struct DayTotals {
  double energy_wh = 0.0;
  double soc_fraction = 0.0;  // sum of delta_soc / 100
};

std::map<std::int64_t, DayTotals> totals_by_day(const std::vector<ChargingPulse>& pulses) {
  std::map<std::int64_t, DayTotals> days;
  for (const ChargingPulse& p : pulses) {
    DayTotals& t = days[p.day()];
    t.energy_wh += p.energy_wh;
    t.soc_fraction += p.delta_soc / 100.0;
  }
  return days;
}

}  // namespace

SohSeries estimate_soh(const std::vector<ChargingPulse>& pulses, const SohSpec& spec) {
  if (pulses.empty()) throw EmptyInput("no charging pulses to estimate capacity from");
  if (spec.reference_days < 1) throw InsufficientData("reference window must cover >= 1 day");

  const auto days = totals_by_day(pulses);
  const std::int64_t first = days.begin()->first;
  const std::int64_t last = days.rbegin()->first;

  SohSeries out;
  out.dates.reserve(static_cast<std::size_t>(last - first + 1));
  for (std::int64_t d = first; d <= last; ++d) {
    out.dates.push_back(d);
    auto it = days.find(d);
    if (it == days.end() || it->second.soc_fraction <= 0.0) {
      out.capacity_wh.push_back(std::nan(""));
    } else {
      out.capacity_wh.push_back(it->second.energy_wh / it->second.soc_fraction);
    }
  }
  fill_interior_gaps(out.capacity_wh, "daily capacity");

  double ref_sum = 0.0;
  int ref_count = 0;
  for (const auto& [day, totals] : days) {
    if (ref_count >= spec.reference_days) break;
    if (totals.soc_fraction <= 0.0) continue;
    ref_sum += totals.energy_wh / totals.soc_fraction;
    ++ref_count;
  }
  if (ref_count == 0) throw InsufficientData("no day in the reference window has usable pulses");
  out.initial_capacity_wh = ref_sum / static_cast<double>(ref_count);

  out.soh.reserve(out.capacity_wh.size());
  for (double c : out.capacity_wh) out.soh.push_back(100.0 * c / out.initial_capacity_wh);
  return out;
}

double scale_to_peak(std::vector<double>& values) {
  double peak = 0.0;
  for (double v : values)
    if (std::isfinite(v)) peak = std::max(peak, std::fabs(v));
  if (peak == 0.0) throw DegenerateSample("no finite, nonzero value to scale by");
  for (double& v : values) v /= peak;
  return peak;
}

CycleSeries equivalent_cycles(const std::vector<ChargingPulse>& pulses,
                              double nominal_soc_per_cycle) {
  CycleSeries out;
  if (pulses.empty()) return out;

  std::map<std::int64_t, double> per_day;
  for (const ChargingPulse& p : pulses) per_day[p.day()] += p.delta_soc / nominal_soc_per_cycle;

  const std::int64_t first = per_day.begin()->first;
  const std::int64_t last = per_day.rbegin()->first;
  double running = 0.0;
  for (std::int64_t d = first; d <= last; ++d) {
    if (auto it = per_day.find(d); it != per_day.end()) running += it->second;
    out.dates.push_back(d);
    out.cycles.push_back(running);
  }
  return out;
}

}  // namespace soh
