#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sohcast/timeseries.hpp"

namespace soh {

/** Short capacity dips injected into a synthetic battery's life. */
struct FaultSpec {
  int bursts = 0;
  double magnitude_pp = 3.0;  // depth in SoH points
  int duration_days = 5;
};

/**
 * Synthetic fleet recipe. Each battery charges in a few short pulses per day;
 * pulse energy tracks a linearly fading capacity with day-to-day wobble and
 * occasional small recoveries, ambient temperature follows an annual
 * sinusoid. Everything derives from `seed`, so a spec pins its fleet exactly.
 */
struct FleetSynthSpec {
  int n_batteries = 3;
  double years = 3.0;
  double degradation_pp_per_year = 2.2;
  double seasonal_temp_amplitude = 8.0;  // degrees C around the annual mean
  double pulses_per_day = 2.0;           // Poisson rate
  double mean_delta_soc = 41.0;          // SOC points recharged per pulse
  double sd_delta_soc = 12.0;
  double nominal_capacity_wh = 4000.0;  // healthy full-charge energy
  double capacity_noise_pp = 0.3;       // daily capacity wobble, SoH points
  std::int64_t start_day = 18628;       // 2021-01-01
  FaultSpec faults;
  std::uint64_t seed = 0;

  void validate() const;  // throws ConfigError on nonsensical values
};

/** One battery of the fleet; `battery_index` selects its private stream. */
RawTelemetry synth_battery(const FleetSynthSpec& spec, int battery_index);

std::vector<RawTelemetry> synth_fleet(const FleetSynthSpec& spec);

/**
 * Writes a plausible file in the public household-consumption format:
 * 15-minute cadence, seasonal level with a deep summer dip, a mild trend,
 * scattered `?` outages, partial months at both ends. `months` counts the
 * full months in between. Meant for exercising the household pipeline where
 * the real download is unavailable.
 */
void write_household_sample(const std::string& path, int months, std::uint64_t seed);

}  // namespace soh
