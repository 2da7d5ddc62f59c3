#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace soh {

// All timestamps are UTC seconds since the epoch; a "day" is days since the
// epoch, so day boundaries fall at midnight UTC.
constexpr std::int64_t seconds_per_day = 86400;

inline std::int64_t day_of(std::int64_t timestamp) {
  // Floor division so pre-epoch timestamps land on the right day too.
  std::int64_t d = timestamp / seconds_per_day;
  return (timestamp % seconds_per_day < 0) ? d - 1 : d;
}

struct CivilDate {
  int year;
  unsigned month;  // 1..12
  unsigned day;    // 1..31
};

std::int64_t days_from_civil(int year, unsigned month, unsigned day);
CivilDate civil_from_days(std::int64_t days);

std::string format_day(std::int64_t day);              // YYYY-MM-DD
std::string format_timestamp(std::int64_t timestamp);  // YYYY-MM-DDTHH:MM:SSZ

/** Minute-cadence pack telemetry, one sample per index. */
struct RawTelemetry {
  std::vector<std::int64_t> timestamps;  // UTC seconds, strictly increasing
  std::vector<double> voltage;           // pack terminal volts
  std::vector<double> current;           // amps, positive while charging
  std::vector<double> soc;               // state of charge, percent
  std::vector<double> ambient_temp;      // degrees Celsius

  std::size_t size() const { return timestamps.size(); }

  // Throws EmptyInput / ShapeError / UnsortedInput when the column vectors
  // disagree in length or timestamps are not strictly increasing.
  void validate() const;
};

/**
 * Regular series on consecutive timestep indices. For pack data the indices
 * are days since the epoch; ingested monthly series reuse the same shape with
 * month counters as indices. Channels hold NaN where a value is missing;
 * imputation removes those before modelling.
 */
struct DailySeries {
  std::vector<std::int64_t> dates;                    // consecutive indices
  std::map<std::string, std::vector<double>> channels;
  std::string target;  // channel models predict, empty until chosen

  std::size_t size() const { return dates.size(); }
  bool has_channel(const std::string& name) const { return channels.count(name) > 0; }

  // Throws NoSuchChannel.
  const std::vector<double>& channel(const std::string& name) const;
  std::vector<double>& channel(const std::string& name);

  // Consecutive dates, equal channel lengths. Throws on violation.
  void validate() const;
};

/** Quartile summary with Tukey fences. */
struct SeriesStats {
  double q1 = 0.0;
  double q3 = 0.0;
  double iqr = 0.0;
  double lower_fence = 0.0;  // q1 - 1.5 * iqr
  double upper_fence = 0.0;  // q3 + 1.5 * iqr
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;  // finite values used
};

/**
 * Quartiles by linear interpolation between order statistics (the convention
 * spreadsheet PERCENTILE and numpy's default share). NaNs are ignored; fewer
 * than 4 finite values throws InsufficientData.
 */
SeriesStats quartile_stats(const std::vector<double>& values);

enum class Reducer { mean, sum };

/**
 * Buckets telemetry into UTC calendar days. Produces one row per day between
 * the first and last sample; days with no samples are NaN. Channels are
 * reduced with `reducers` (mean when a channel is not listed).
 */
DailySeries aggregate_daily(const RawTelemetry& raw,
                            const std::map<std::string, Reducer>& reducers = {});

}  // namespace soh
