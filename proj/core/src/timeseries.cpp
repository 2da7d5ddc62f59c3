#include "sohcast/timeseries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "sohcast/errors.hpp"

namespace soh {

// Days-from-civil and back, Gregorian calendar, valid over the int64 range we
// care about. Era-based formulation.
std::int64_t days_from_civil(int year, unsigned month, unsigned day) {
  std::int64_t y = year;
  y -= month <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);                   // [0, 399]
  const unsigned doy = (153 * (month + (month > 2 ? -3 : 9)) + 2) / 5 + day - 1;  // [0, 365]
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;                  // [0, 146096]
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t days) {
  days += 719468;
  const std::int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);             // [0, 146096]
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;  // [0, 399]
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);                // [0, 365]
  const unsigned mp = (5 * doy + 2) / 153;                                     // [0, 11]
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;                             // [1, 31]
  const unsigned m = mp + (mp < 10 ? 3 : -9);                                  // [1, 12]
  return CivilDate{static_cast<int>(y + (m <= 2)), m, d};
}

std::string format_day(std::int64_t day) {
  const CivilDate c = civil_from_days(day);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", c.year, c.month, c.day);
  return buf;
}

std::string format_timestamp(std::int64_t timestamp) {
  const std::int64_t day = day_of(timestamp);
  std::int64_t rem = timestamp - day * seconds_per_day;
  const CivilDate c = civil_from_days(day);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", c.year, c.month, c.day,
                static_cast<int>(rem / 3600), static_cast<int>(rem / 60 % 60),
                static_cast<int>(rem % 60));
  return buf;
}

void RawTelemetry::validate() const {
  if (timestamps.empty()) throw EmptyInput("telemetry has no samples");
  const std::size_t n = timestamps.size();
  if (voltage.size() != n || current.size() != n || soc.size() != n || ambient_temp.size() != n)
    throw ShapeError("telemetry columns have unequal lengths");
  for (std::size_t i = 1; i < n; ++i)
    if (timestamps[i] <= timestamps[i - 1])
      throw UnsortedInput("telemetry timestamps must be strictly increasing (index " +
                          std::to_string(i) + ")");
}

const std::vector<double>& DailySeries::channel(const std::string& name) const {
  auto it = channels.find(name);
  if (it == channels.end()) throw NoSuchChannel("no channel named '" + name + "'");
  return it->second;
}

std::vector<double>& DailySeries::channel(const std::string& name) {
  auto it = channels.find(name);
  if (it == channels.end()) throw NoSuchChannel("no channel named '" + name + "'");
  return it->second;
}

void DailySeries::validate() const {
  for (std::size_t i = 1; i < dates.size(); ++i)
    if (dates[i] != dates[i - 1] + 1)
      throw ShapeError("series dates must be consecutive (index " + std::to_string(i) + ")");
  for (const auto& [name, values] : channels)
    if (values.size() != dates.size())
      throw ShapeError("channel '" + name + "' length " + std::to_string(values.size()) +
                       " does not match " + std::to_string(dates.size()) + " dates");
  if (!target.empty() && !has_channel(target))
    throw NoSuchChannel("target channel '" + target + "' is missing");
}

namespace {

// Order-statistic quantile with linear interpolation on sorted data.
double interpolated_quantile(const std::vector<double>& sorted, double p) {
  const double h = p * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(h);
  if (lo + 1 >= sorted.size()) return sorted.back();
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

SeriesStats quartile_stats(const std::vector<double>& values) {
  std::vector<double> finite;
  finite.reserve(values.size());
  for (double v : values)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.size() < 4)
    throw InsufficientData("quartile_stats needs at least 4 finite values, got " +
                           std::to_string(finite.size()));
  std::sort(finite.begin(), finite.end());
  SeriesStats s;
  s.n = finite.size();
  s.min = finite.front();
  s.max = finite.back();
  s.q1 = interpolated_quantile(finite, 0.25);
  s.q3 = interpolated_quantile(finite, 0.75);
  s.iqr = s.q3 - s.q1;
  s.lower_fence = s.q1 - 1.5 * s.iqr;
  s.upper_fence = s.q3 + 1.5 * s.iqr;
  return s;
}

DailySeries aggregate_daily(const RawTelemetry& raw,
                            const std::map<std::string, Reducer>& reducers) {
  raw.validate();

  const std::int64_t first_day = day_of(raw.timestamps.front());
  const std::int64_t last_day = day_of(raw.timestamps.back());
  const std::size_t days = static_cast<std::size_t>(last_day - first_day + 1);

  DailySeries out;
  out.dates.resize(days);
  for (std::size_t d = 0; d < days; ++d) out.dates[d] = first_day + static_cast<std::int64_t>(d);

  const std::pair<const char*, const std::vector<double>*> columns[] = {
      {"voltage", &raw.voltage},
      {"current", &raw.current},
      {"soc", &raw.soc},
      {"ambient_temp", &raw.ambient_temp},
  };

  std::vector<std::size_t> counts(days);
  for (const auto& [name, column] : columns) {
    Reducer how = Reducer::mean;
    if (auto it = reducers.find(name); it != reducers.end()) how = it->second;

    std::vector<double> sums(days, 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const double v = (*column)[i];
      if (!std::isfinite(v)) continue;
      const std::size_t d = static_cast<std::size_t>(day_of(raw.timestamps[i]) - first_day);
      sums[d] += v;
      ++counts[d];
    }
    std::vector<double> values(days);
    for (std::size_t d = 0; d < days; ++d) {
      if (counts[d] == 0)
        values[d] = std::nan("");
      else
        values[d] = (how == Reducer::sum) ? sums[d] : sums[d] / static_cast<double>(counts[d]);
    }
    out.channels.emplace(name, std::move(values));
  }
  return out;
}

}  // namespace soh
