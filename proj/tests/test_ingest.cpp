#include "sohcast/ingest.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "sohcast/errors.hpp"
#include "sohcast/rng.hpp"
#include "sohcast/synth.hpp"

using namespace soh;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

RawTelemetry from_string(const std::string& text) {
  std::istringstream in(text);
  return read_telemetry(in, "test");
}

DailySeries household_from_string(const std::string& text) {
  std::istringstream in(text);
  return read_household(in, "test");
}

constexpr const char* telemetry_header = "timestamp,voltage,current,soc,ambient_temp\n";

}  // namespace

TEST_CASE("timestamps parse strictly and round-trip") {
  CHECK(parse_timestamp("1970-01-01T00:00:00Z") == 0);
  CHECK(parse_timestamp("1970-01-02T00:00:01") == 86401);
  CHECK(parse_timestamp("2021-01-01T00:00:00Z") == 18628 * seconds_per_day);
  CHECK(parse_timestamp("1969-12-31T23:59:59Z") == -1);

  for (const std::int64_t ts : {std::int64_t{0}, std::int64_t{1660600000},
                                std::int64_t{-12345}, std::int64_t{253402300799}})
    CHECK(parse_timestamp(format_timestamp(ts)) == ts);

  CHECK_THROWS_AS(parse_timestamp("2021-01-01"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2021-01-01 00:00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2021-13-01T00:00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2021-02-30T00:00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2021-01-01T24:00:00"), ParseError);
  CHECK_THROWS_AS(parse_timestamp("2021-01-01T00:00:0x"), ParseError);
}

TEST_CASE("telemetry ingestion sorts, deduplicates, and reports bad lines") {
  const RawTelemetry two = from_string(std::string(telemetry_header) +
                                       "2021-01-01T00:01:00Z,51.2,10,50,15\n"
                                       "2021-01-01T00:02:00Z,51.3,10,51,15\n");
  CHECK(two.size() == 2);
  CHECK(two.voltage[0] == doctest::Approx(51.2));

  const RawTelemetry sorted = from_string(std::string(telemetry_header) +
                                          "2021-01-01T00:02:00Z,2,0,51,15\n"
                                          "2021-01-01T00:01:00Z,1,0,50,15\n");
  CHECK(sorted.timestamps[0] < sorted.timestamps[1]);
  CHECK(sorted.voltage[0] == doctest::Approx(1.0));

  // A repeated timestamp keeps the later row: reuploads overwrite.
  const RawTelemetry dedup = from_string(std::string(telemetry_header) +
                                         "2021-01-01T00:01:00Z,1,0,50,15\n"
                                         "2021-01-01T00:01:00Z,2,0,50,15\n");
  CHECK(dedup.size() == 1);
  CHECK(dedup.voltage[0] == doctest::Approx(2.0));

  // Out-of-range SOC passes ingest; cleaning is a separate stage.
  CHECK(from_string(std::string(telemetry_header) + "2021-01-01T00:01:00Z,1,0,150,15\n")
            .soc[0] == doctest::Approx(150.0));

  try {
    from_string(std::string(telemetry_header) +
                "2021-01-01T00:01:00Z,1,0,50,15\n"
                "2021-01-01T00:02:00Z,1,oops,50,15\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line_number == 3);
  }

  CHECK_THROWS_AS(from_string(""), EmptyInput);
  CHECK_THROWS_AS(from_string(telemetry_header), EmptyInput);
  CHECK_THROWS_AS(from_string("time,volts\n1,2\n"), ParseError);
  CHECK_THROWS_AS(from_string(std::string(telemetry_header) + "2021-01-01T00:01:00Z,1,0,50\n"),
                  ParseError);
}

TEST_CASE("telemetry survives a write/read round trip bit for bit") {
  RawTelemetry t;
  Rng rng(4);
  std::int64_t ts = 1609459200;
  for (int i = 0; i < 200; ++i) {
    ts += 60 + static_cast<std::int64_t>(rng.index(3600));
    t.timestamps.push_back(ts);
    t.voltage.push_back(rng.uniform(47.0, 53.0));
    t.current.push_back(rng.normal(0.0, 40.0));
    t.soc.push_back(rng.uniform(0.0, 100.0));
    t.ambient_temp.push_back(rng.normal(15.0, 10.0));
  }
  t.voltage[0] = 1.0 / 3.0;  // needs all 17 digits
  t.current[1] = 1e-17;
  t.soc[2] = 0.1;

  const std::string path = "tmp_roundtrip.csv";
  write_telemetry_csv(path, t);
  const RawTelemetry back = ingest_telemetry(path);
  REQUIRE(back.size() == t.size());
  CHECK(back.timestamps == t.timestamps);
  CHECK(back.voltage == t.voltage);
  CHECK(back.current == t.current);
  CHECK(back.soc == t.soc);
  CHECK(back.ambient_temp == t.ambient_temp);
}

TEST_CASE("cleaning drops non-finite rows and impossible SOC") {
  RawTelemetry t;
  t.timestamps = {60, 120, 180, 240, 300};
  t.voltage = {51, 51, std::nan(""), 51, 51};
  t.current = {1, 1, 1, 1, 1};
  t.soc = {50, 150, 52, -3, 54};
  t.ambient_temp = {15, 15, 15, 15, 15};

  const RawTelemetry cleaned = clean_telemetry(t);
  REQUIRE(cleaned.size() == 2);
  CHECK(cleaned.timestamps == std::vector<std::int64_t>{60, 300});
  CHECK(cleaned.soc == std::vector<double>{50, 54});
}

namespace {

// Rows for every day of a month, two samples per day at the given power.
std::string month_rows(int year, unsigned month, unsigned days, const std::string& power) {
  std::ostringstream out;
  for (unsigned d = 1; d <= days; ++d)
    out << d << '/' << month << '/' << year << ";08:00:00;" << power << ";0.1;240;2;0;1;17\n"
        << d << '/' << month << '/' << year << ";20:00:00;" << power << ";0.1;240;2;0;1;17\n";
  return out.str();
}

constexpr const char* household_header =
    "Date;Time;Global_active_power;Global_reactive_power;Voltage;Global_intensity;"
    "Sub_metering_1;Sub_metering_2;Sub_metering_3\n";

}  // namespace

TEST_CASE("household ingestion keeps full months and averages present minutes") {
  const DailySeries one =
      household_from_string(std::string(household_header) + month_rows(2007, 1, 31, "2.000"));
  REQUIRE(one.size() == 1);
  CHECK(one.dates[0] == (2007 - 1970) * 12);  // months since 1970-01
  CHECK(one.channel("kw")[0] == doctest::Approx(2.0));
  CHECK(one.target == "kw");
  CHECK(month_label(one.dates[0]) == "2007-01");
  CHECK(month_label(-1) == "1969-12");

  // '?' rows prove presence but stay out of the mean.
  std::string mixed = std::string(household_header) + month_rows(2007, 1, 30, "1.000");
  mixed += "31/1/2007;08:00:00;?;?;?;?;?;?;?\n";
  mixed += "31/1/2007;20:00:00;3.000;0.1;240;2;0;1;17\n";
  const DailySeries m = household_from_string(mixed);
  REQUIRE(m.size() == 1);
  CHECK(m.channel("kw")[0] == doctest::Approx((60.0 * 1.0 + 3.0) / 61.0));

  // Partial edge months vanish; a partial interior month becomes NaN.
  std::string spread = std::string(household_header);
  spread += month_rows(2006, 12, 5, "9.000");  // Dec 1-5 only: partial lead-in
  spread += month_rows(2007, 1, 31, "1.000");
  spread += month_rows(2007, 2, 20, "5.000");  // Feb stops at the 20th
  spread += month_rows(2007, 3, 31, "2.000");
  spread += month_rows(2007, 4, 10, "9.000");  // partial tail
  const DailySeries s = household_from_string(spread);
  REQUIRE(s.size() == 3);
  CHECK(s.dates == std::vector<std::int64_t>{444, 445, 446});
  CHECK(s.channel("kw")[0] == doctest::Approx(1.0));
  CHECK(std::isnan(s.channel("kw")[1]));
  CHECK(s.channel("kw")[2] == doctest::Approx(2.0));

  CHECK_THROWS_AS(household_from_string(std::string(household_header) +
                                        month_rows(2007, 1, 30, "1.0")),
                  InsufficientData);  // no month reaches its last day
  CHECK_THROWS_AS(household_from_string(std::string(household_header) +
                                        "31/13/2007;08:00:00;1;1;1;1;1;1;1\n"),
                  ParseError);
  CHECK_THROWS_AS(household_from_string(""), EmptyInput);
  CHECK_THROWS_AS(household_from_string("wrong;header\n"), ParseError);
}

TEST_CASE("the generated household sample ingests cleanly and repeats exactly") {
  const std::string path_a = "tmp_household_a.csv";
  const std::string path_b = "tmp_household_b.csv";
  write_household_sample(path_a, 14, 3);
  write_household_sample(path_b, 14, 3);
  CHECK(slurp(path_a) == slurp(path_b));

  const DailySeries series = ingest_household(path_a);
  REQUIRE(series.size() == 14);
  CHECK(series.dates.front() == 444);  // first full month is 2007-01
  for (double v : series.channel("kw")) {
    CHECK(v > 0.2);
    CHECK(v < 3.0);
  }
  // Winter months must sit above the August dip.
  const auto& kw = series.channel("kw");
  CHECK(kw[0] > kw[7]);
}
