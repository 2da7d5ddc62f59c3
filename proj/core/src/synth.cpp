#include "sohcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <vector>

#include "sohcast/errors.hpp"
#include "sohcast/rng.hpp"

namespace soh {

namespace {

int poisson(Rng& rng, double rate) {
  const double limit = std::exp(-rate);
  int k = 0;
  double p = 1.0;
  do {
    ++k;
    p *= rng.uniform();
  } while (p > limit);
  return k - 1;
}

double clip(double v, double lo, double hi) { return std::min(hi, std::max(lo, v)); }

}  // namespace

void FleetSynthSpec::validate() const {
  const auto bad = [](const std::string& what) { throw ConfigError(what); };
  if (n_batteries < 1) bad("n_batteries must be at least 1");
  if (!(years > 0.0)) bad("years must be positive");
  if (!(degradation_pp_per_year > 0.0)) bad("degradation_pp_per_year must be positive");
  if (!(pulses_per_day > 0.0)) bad("pulses_per_day must be positive");
  if (!(mean_delta_soc > 0.0) || mean_delta_soc > 85.0)
    bad("mean_delta_soc must be in (0, 85]");
  if (sd_delta_soc < 0.0) bad("sd_delta_soc must not be negative");
  if (!(nominal_capacity_wh > 0.0)) bad("nominal_capacity_wh must be positive");
  if (capacity_noise_pp < 0.0) bad("capacity_noise_pp must not be negative");
  if (seasonal_temp_amplitude < 0.0) bad("seasonal_temp_amplitude must not be negative");
  if (faults.bursts < 0 || faults.duration_days < 1)
    bad("fault bursts need a nonnegative count and a positive duration");
}

RawTelemetry synth_battery(const FleetSynthSpec& spec, int battery_index) {
  spec.validate();
  Rng rng(spec.seed * 1000003ULL + static_cast<std::uint64_t>(battery_index));
  const auto days = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(spec.years * 365.0)));

  // Health trajectory first, in one pass, so the draw order is stable no
  // matter how the day loop below unfolds.
  const double initial_capacity =
      spec.nominal_capacity_wh * (1.0 + 0.02 * clip(rng.normal(), -2.0, 2.0));

  std::vector<double> soh_pp(days);
  for (std::size_t d = 0; d < days; ++d)
    soh_pp[d] = 100.0 - spec.degradation_pp_per_year * static_cast<double>(d) / 365.0 +
                spec.capacity_noise_pp * rng.normal();

  // Occasional small recoveries: a bump that decays over a week or so.
  for (std::size_t d = 0; d < days; ++d) {
    if (rng.uniform() >= 0.008) continue;
    const double amplitude = rng.uniform(0.2, 0.6);
    for (std::size_t k = 0; k < 32 && d + k < days; ++k)
      soh_pp[d + k] += amplitude * std::exp(-static_cast<double>(k) / 8.0);
  }

  if (spec.faults.bursts > 0) {
    const std::size_t duration = static_cast<std::size_t>(spec.faults.duration_days);
    const std::size_t room = days > duration ? days - duration : 1;
    for (const std::size_t start :
         rng.sample(room, static_cast<std::size_t>(spec.faults.bursts)))
      for (std::size_t k = 0; k < duration && start + k < days; ++k)
        soh_pp[start + k] -= spec.faults.magnitude_pp;
  }
  for (double& s : soh_pp) s = std::max(s, 40.0);

  RawTelemetry t;
  const auto push_row = [&t](std::int64_t ts, double v, double i, double soc, double temp) {
    t.timestamps.push_back(ts);
    t.voltage.push_back(v);
    t.current.push_back(i);
    t.soc.push_back(soc);
    t.ambient_temp.push_back(temp);
  };

  for (std::size_t d = 0; d < days; ++d) {
    const std::int64_t day = spec.start_day + static_cast<std::int64_t>(d);
    const double season =
        15.0 + spec.seasonal_temp_amplitude *
                   std::sin(2.0 * std::numbers::pi *
                            (static_cast<double>(day % 365) - 105.0) / 365.0);
    const double capacity_wh = initial_capacity * soh_pp[d] / 100.0;

    const int pulses = poisson(rng, spec.pulses_per_day);
    // Half-hour slots keep pulses apart; each slot fits a pulse plus its
    // quiet bracket rows, so timestamps stay strictly increasing.
    for (const std::size_t slot : rng.sample(47, static_cast<std::size_t>(pulses))) {
      const std::int64_t start_min =
          static_cast<std::int64_t>(slot) * 30 + 3 + static_cast<std::int64_t>(rng.index(2));
      const int duration = 8 + static_cast<int>(rng.index(16));  // 8..23 minutes
      const double dsoc = clip(rng.normal(spec.mean_delta_soc, spec.sd_delta_soc), 10.0, 85.0);
      const double soc0 = rng.uniform(8.0, 97.0 - dsoc);
      const double energy_wh = capacity_wh * dsoc / 100.0 * (1.0 + 0.004 * rng.normal());
      const double power_w = energy_wh / (static_cast<double>(duration) / 60.0);
      const double idle_amps = -rng.uniform(1.0, 3.0);

      const std::int64_t base = day * seconds_per_day + start_min * 60;
      const double v_idle = 48.0 + 4.0 * soc0 / 100.0;
      push_row(base - 120, v_idle, idle_amps, soc0, season + 1.2 * rng.normal());
      for (int j = 0; j <= duration; ++j) {
        // Ratio first: at j == duration the fraction is exactly 1, so the
        // final ramp row equals the settled row below bit for bit. Computing
        // dsoc * j / duration instead can land one ulp under dsoc, and that
        // phantom rise reads as 120 s of extra charging downstream.
        const double soc =
            soc0 + dsoc * (static_cast<double>(j) / static_cast<double>(duration));
        const double v = 48.0 + 4.0 * soc / 100.0 + 0.03 * rng.normal();
        push_row(base + j * 60, v, power_w / v, soc, season + 1.2 * rng.normal());
      }
      const double v_done = 48.0 + 4.0 * (soc0 + dsoc) / 100.0;
      push_row(base + (duration + 2) * 60, v_done, idle_amps, soc0 + dsoc,
               season + 1.2 * rng.normal());
    }
  }
  t.validate();
  return t;
}

std::vector<RawTelemetry> synth_fleet(const FleetSynthSpec& spec) {
  spec.validate();
  std::vector<RawTelemetry> fleet;
  fleet.reserve(static_cast<std::size_t>(spec.n_batteries));
  for (int b = 0; b < spec.n_batteries; ++b) fleet.push_back(synth_battery(spec, b));
  return fleet;
}

void write_household_sample(const std::string& path, int months, std::uint64_t seed) {
  if (months < 1) throw ConfigError("need at least one full month");
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "Date;Time;Global_active_power;Global_reactive_power;Voltage;Global_intensity;"
         "Sub_metering_1;Sub_metering_2;Sub_metering_3\n";

  Rng rng(seed);

  // 15-minute day shape: morning shoulder, evening peak; normalized to mean 1
  // so the monthly mean lands on the drawn level.
  std::vector<double> shape;
  for (int q = 0; q < 96; ++q) {
    const double h = static_cast<double>(q) / 4.0;
    shape.push_back(0.55 + 0.85 * std::exp(-std::pow((h - 19.5) / 3.0, 2)) +
                    0.35 * std::exp(-std::pow((h - 7.5) / 2.5, 2)));
  }
  double shape_mean = 0.0;
  for (double s : shape) shape_mean += s;
  shape_mean /= static_cast<double>(shape.size());
  for (double& s : shape) s /= shape_mean;

  const std::int64_t first_full = days_from_civil(2007, 1, 1);
  const std::int64_t begin_day = days_from_civil(2006, 12, 16);  // partial lead-in
  std::int64_t end_month_year = 2007 + (months - 1) / 12;
  unsigned end_month = static_cast<unsigned>((months - 1) % 12) + 1;
  const std::int64_t end_full = end_month == 12
                                    ? days_from_civil(static_cast<int>(end_month_year) + 1, 1, 1)
                                    : days_from_civil(static_cast<int>(end_month_year),
                                                      end_month + 1, 1);
  const std::int64_t end_day = end_full + 10;  // partial tail month

  double month_level = 0.0;
  int current_month = -1;
  char buf[160];
  for (std::int64_t day = begin_day; day < end_day; ++day) {
    const CivilDate cd = civil_from_days(day);
    const int month_key = cd.year * 12 + static_cast<int>(cd.month);
    if (month_key != current_month) {
      current_month = month_key;
      const int idx = static_cast<int>((day - first_full) / 30);
      const double season = 0.34 * std::cos(2.0 * std::numbers::pi *
                                            (static_cast<double>(cd.month) - 0.5) / 12.0);
      double notch = 0.0;
      if (cd.month == 8) notch = 0.30;  // the holiday-month dip
      if (cd.month == 7 || cd.month == 9) notch = 0.10;
      month_level = 1.35 + season - notch - 0.0035 * static_cast<double>(idx) +
                    0.09 * rng.normal();
    }

    // Rare outage: a two-hour stretch of '?' readings.
    int outage_start = -1;
    if (rng.uniform() < 0.01) outage_start = static_cast<int>(rng.index(88));

    for (int q = 0; q < 96; ++q) {
      const int minute = q * 15;
      const bool missing = outage_start >= 0 && q >= outage_start && q < outage_start + 8;
      if (missing) {
        std::snprintf(buf, sizeof buf, "%u/%u/%d;%02d:%02d:00;?;?;?;?;?;?;?\n", cd.day,
                      cd.month, cd.year, minute / 60, minute % 60);
        out << buf;
        continue;
      }
      const double kw =
          std::max(0.05, month_level * shape[static_cast<std::size_t>(q)] +
                             0.25 * rng.normal());
      const double volts = 240.0 + 2.0 * rng.normal();
      std::snprintf(buf, sizeof buf,
                    "%u/%u/%d;%02d:%02d:00;%.3f;%.3f;%.3f;%.3f;%.3f;%.3f;%.3f\n", cd.day,
                    cd.month, cd.year, minute / 60, minute % 60, kw, 0.1 + 0.02 * kw, volts,
                    kw * 1000.0 / volts, 0.0, 1.0, 17.0);
      out << buf;
    }
  }
  if (!out) throw ParseError("write to " + path + " failed");
}

}  // namespace soh
