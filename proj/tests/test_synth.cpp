#include "sohcast/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "doctest.h"
#include "sohcast/errors.hpp"
#include "sohcast/preprocess.hpp"

using namespace soh;

namespace {

double fitted_slope_per_year(const std::vector<std::int64_t>& dates,
                             const std::vector<double>& values) {
  const auto n = static_cast<double>(dates.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    const double x = static_cast<double>(dates[i]);
    sx += x;
    sy += values[i];
    sxx += x * x;
    sxy += x * values[i];
  }
  return 365.0 * (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("nonsense fleet specs are rejected") {
  FleetSynthSpec spec;
  spec.years = 0.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.degradation_pp_per_year = -1.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.mean_delta_soc = 90.0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  spec.n_batteries = 0;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
  spec = {};
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("a seed pins each battery; batteries differ from each other") {
  FleetSynthSpec spec;
  spec.years = 0.3;
  spec.seed = 11;

  const RawTelemetry a = synth_battery(spec, 0);
  const RawTelemetry b = synth_battery(spec, 0);
  CHECK(a.timestamps == b.timestamps);
  CHECK(a.voltage == b.voltage);
  CHECK(a.current == b.current);
  CHECK(a.soc == b.soc);
  CHECK(a.ambient_temp == b.ambient_temp);

  const RawTelemetry other = synth_battery(spec, 1);
  CHECK(a.timestamps != other.timestamps);

  FleetSynthSpec reseeded = spec;
  reseeded.seed = 12;
  CHECK(synth_battery(reseeded, 0).timestamps != a.timestamps);

  const auto fleet = synth_fleet(spec);
  REQUIRE(fleet.size() == 3);
  CHECK(fleet[0].timestamps == a.timestamps);
}

TEST_CASE("synthetic telemetry stays physically plausible") {
  FleetSynthSpec spec;
  spec.years = 0.5;
  spec.seed = 7;
  const RawTelemetry t = synth_battery(spec, 2);
  t.validate();
  REQUIRE(t.size() > 1000);
  for (std::size_t i = 0; i < t.size(); ++i) {
    CHECK(t.soc[i] >= 5.0);
    CHECK(t.soc[i] <= 100.0);
    CHECK(t.voltage[i] > 46.0);
    CHECK(t.voltage[i] < 54.0);
  }
  // Ambient temperature swings with the season but stays earthly.
  const auto [lo, hi] = std::minmax_element(t.ambient_temp.begin(), t.ambient_temp.end());
  CHECK(*lo > -25.0);
  CHECK(*hi < 45.0);
  CHECK(*hi - *lo > 5.0);
}

TEST_CASE("generated pulses land in the detection band at the configured rate") {
  FleetSynthSpec spec;
  spec.years = 60.0 / 365.0;  // two months
  spec.seed = 5;
  const auto pulses = detect_pulses(synth_battery(spec, 0));

  // Poisson(2) over 60 days: mean 120, sd ~11.
  CHECK(pulses.size() > 85);
  CHECK(pulses.size() < 160);

  double dsoc_sum = 0.0;
  for (const ChargingPulse& p : pulses) {
    CHECK(p.duration_minutes > 5.0);
    CHECK(p.duration_minutes < 30.0);
    CHECK(p.delta_soc > 0.0);
    CHECK(p.energy_wh > 0.0);
    dsoc_sum += p.delta_soc;
  }
  const double dsoc_mean = dsoc_sum / static_cast<double>(pulses.size());
  CHECK(dsoc_mean > 35.0);
  CHECK(dsoc_mean < 47.0);
}

TEST_CASE("the full health loop recovers the configured fade") {
  FleetSynthSpec spec;
  spec.years = 2.0;
  spec.seed = 40;
  const SohSeries soh = estimate_soh(detect_pulses(synth_battery(spec, 1)));
  REQUIRE(soh.size() > 700);

  const double slope = fitted_slope_per_year(soh.dates, soh.soh);
  CHECK(slope < -2.2 + 0.45);
  CHECK(slope > -2.2 - 0.45);

  // SoH starts near 100 by construction of the reference window.
  CHECK(soh.soh.front() > 97.0);
  CHECK(soh.soh.front() < 103.0);
}

TEST_CASE("cycle accumulation tracks rate times depth") {
  FleetSynthSpec spec;
  spec.years = 1.0;
  spec.seed = 9;
  const CycleSeries cycles = equivalent_cycles(detect_pulses(synth_battery(spec, 0)));
  REQUIRE(!cycles.cycles.empty());
  const double total = cycles.cycles.back();
  // 365 days * 2 pulses * 0.41 cycles each ~ 300.
  CHECK(total > 260.0);
  CHECK(total < 340.0);
  CHECK(std::is_sorted(cycles.cycles.begin(), cycles.cycles.end()));
}

TEST_CASE("fault bursts dent the health trace") {
  FleetSynthSpec spec;
  spec.years = 1.0;
  spec.seed = 21;
  const SohSeries clean = estimate_soh(detect_pulses(synth_battery(spec, 0)));

  FleetSynthSpec faulty = spec;
  faulty.faults.bursts = 2;
  faulty.faults.magnitude_pp = 6.0;
  faulty.faults.duration_days = 6;
  const SohSeries dented = estimate_soh(detect_pulses(synth_battery(faulty, 0)));

  const double clean_min = *std::min_element(clean.soh.begin(), clean.soh.end());
  const double dented_min = *std::min_element(dented.soh.begin(), dented.soh.end());
  CHECK(dented_min < clean_min - 3.0);
}
