#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "sohcast/timeseries.hpp"

namespace soh {

/** Strict "YYYY-MM-DDTHH:MM:SS" with an optional trailing Z, to epoch seconds. */
std::int64_t parse_timestamp(const std::string& text);

/**
 * Reads minute-level telemetry: header `timestamp,voltage,current,soc,ambient_temp`,
 * ISO-8601 timestamps. Rows are sorted by time; duplicate timestamps keep the
 * row that appears last in the file, treating reuploads as overwrites. Values
 * are taken as written; range cleaning happens in clean_telemetry.
 */
RawTelemetry ingest_telemetry(const std::string& path);
RawTelemetry read_telemetry(std::istream& in, const std::string& origin);

/** Writes telemetry in the ingest format; doubles keep full round-trip precision. */
void write_telemetry_csv(const std::string& path, const RawTelemetry& t);

/**
 * Drops rows with any non-finite reading and rows whose SOC falls outside
 * [lo, hi]. Sensor glitches beyond that range say nothing about charge.
 */
RawTelemetry clean_telemetry(const RawTelemetry& t, double lo = 0.0, double hi = 100.0);

/**
 * Reads the public household consumption format: semicolon-separated,
 * `Date;Time;Global_active_power;...`, dates d/m/yyyy, `?` marking missing
 * values. The active-power channel is averaged per calendar month, skipping
 * missing minutes. Only full months carry a value; rows must exist on both
 * the first and last day of the month; the partial months at the edges are
 * dropped and any partial month in the interior becomes NaN for downstream
 * imputation. The returned series ticks in months, not days; `dates` holds
 * months since 1970-01 so that consecutive months validate as a regular
 * series; month_label() renders them back.
 */
DailySeries ingest_household(const std::string& path);
DailySeries read_household(std::istream& in, const std::string& origin);

/** Month serial (months since 1970-01) to "YYYY-MM". */
std::string month_label(std::int64_t month_serial);

}  // namespace soh
