#include "sohcast/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "sohcast/errors.hpp"

namespace soh {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_double(const std::string& field, const std::string& what, std::size_t line) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || field.empty())
    throw ParseError("bad " + what + " value '" + field + "'", line);
  return value;
}

long parse_int_field(const char* begin, const char* end, const std::string& what,
                     std::size_t line) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end || begin == end)
    throw ParseError("bad " + what + " in timestamp", line);
  return value;
}

// Strips trailing \r so files with Windows line endings parse the same.
void chomp(std::string& line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
}

std::string fmt_double(double v) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

std::int64_t parse_timestamp(const std::string& text) {
  // YYYY-MM-DDTHH:MM:SS with optional Z; anything else is malformed.
  std::string s = text;
  if (!s.empty() && s.back() == 'Z') s.pop_back();
  if (s.size() != 19 || s[4] != '-' || s[7] != '-' || s[10] != 'T' || s[13] != ':' ||
      s[16] != ':')
    throw ParseError("bad timestamp '" + text + "'");
  const char* p = s.data();
  const long year = parse_int_field(p, p + 4, "year", 0);
  const long month = parse_int_field(p + 5, p + 7, "month", 0);
  const long day = parse_int_field(p + 8, p + 10, "day", 0);
  const long hour = parse_int_field(p + 11, p + 13, "hour", 0);
  const long minute = parse_int_field(p + 14, p + 16, "minute", 0);
  const long second = parse_int_field(p + 17, p + 19, "second", 0);
  if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 || second > 59)
    throw ParseError("bad timestamp '" + text + "'");
  const std::int64_t days =
      days_from_civil(static_cast<int>(year), static_cast<unsigned>(month),
                      static_cast<unsigned>(day));
  const CivilDate back = civil_from_days(days);
  if (back.year != year || back.month != static_cast<unsigned>(month) ||
      back.day != static_cast<unsigned>(day))
    throw ParseError("impossible calendar date '" + text + "'");
  return days * seconds_per_day + hour * 3600 + minute * 60 + second;
}

RawTelemetry read_telemetry(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInput(origin + " is empty");
  chomp(line);
  if (line != "timestamp,voltage,current,soc,ambient_temp")
    throw ParseError(origin + ": unexpected header '" + line + "'", 1);

  RawTelemetry raw;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 5) throw ParseError(origin + ": expected 5 fields", line_no);
    std::int64_t ts = 0;
    try {
      ts = parse_timestamp(f[0]);
    } catch (const ParseError& e) {
      throw ParseError(origin + ": " + e.what(), line_no);
    }
    raw.timestamps.push_back(ts);
    raw.voltage.push_back(parse_double(f[1], "voltage", line_no));
    raw.current.push_back(parse_double(f[2], "current", line_no));
    raw.soc.push_back(parse_double(f[3], "soc", line_no));
    raw.ambient_temp.push_back(parse_double(f[4], "ambient_temp", line_no));
  }
  if (raw.timestamps.empty()) throw EmptyInput(origin + " has a header but no rows");

  // Sort by time; a repeated timestamp keeps the row written last.
  std::vector<std::size_t> order(raw.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&raw](std::size_t a, std::size_t b) {
    return raw.timestamps[a] < raw.timestamps[b];
  });
  RawTelemetry out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (k + 1 < order.size() && raw.timestamps[order[k + 1]] == raw.timestamps[order[k]])
      continue;
    const std::size_t i = order[k];
    out.timestamps.push_back(raw.timestamps[i]);
    out.voltage.push_back(raw.voltage[i]);
    out.current.push_back(raw.current[i]);
    out.soc.push_back(raw.soc[i]);
    out.ambient_temp.push_back(raw.ambient_temp[i]);
  }
  out.validate();
  return out;
}

RawTelemetry ingest_telemetry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_telemetry(in, path);
}

void write_telemetry_csv(const std::string& path, const RawTelemetry& t) {
  t.validate();
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path);
  out << "timestamp,voltage,current,soc,ambient_temp\n";
  for (std::size_t i = 0; i < t.size(); ++i)
    out << format_timestamp(t.timestamps[i]) << ',' << fmt_double(t.voltage[i]) << ','
        << fmt_double(t.current[i]) << ',' << fmt_double(t.soc[i]) << ','
        << fmt_double(t.ambient_temp[i]) << '\n';
  if (!out) throw ParseError("write to " + path + " failed");
}

RawTelemetry clean_telemetry(const RawTelemetry& t, double lo, double hi) {
  t.validate();
  RawTelemetry out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const bool finite = std::isfinite(t.voltage[i]) && std::isfinite(t.current[i]) &&
                        std::isfinite(t.soc[i]) && std::isfinite(t.ambient_temp[i]);
    if (!finite || t.soc[i] < lo || t.soc[i] > hi) continue;
    out.timestamps.push_back(t.timestamps[i]);
    out.voltage.push_back(t.voltage[i]);
    out.current.push_back(t.current[i]);
    out.soc.push_back(t.soc[i]);
    out.ambient_temp.push_back(t.ambient_temp[i]);
  }
  return out;
}

namespace {

struct MonthBucket {
  double sum = 0.0;
  std::size_t count = 0;       // non-missing power minutes
  unsigned first_day_seen = 99;
  unsigned last_day_seen = 0;  // day of month, any row counts as presence
};

unsigned days_in_month(int year, unsigned month) {
  const int next_year = month == 12 ? year + 1 : year;
  const unsigned next_month = month == 12 ? 1 : month + 1;
  return static_cast<unsigned>(days_from_civil(next_year, next_month, 1) -
                               days_from_civil(year, month, 1));
}

}  // namespace

DailySeries read_household(std::istream& in, const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) throw EmptyInput(origin + " is empty");
  chomp(line);
  if (line.rfind("Date;Time;Global_active_power", 0) != 0)
    throw ParseError(origin + ": unexpected header '" + line + "'", 1);

  std::map<std::int64_t, MonthBucket> months;  // key: months since 1970-01
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    chomp(line);
    if (line.empty()) continue;
    const std::vector<std::string> f = split(line, ';');
    if (f.size() < 3) throw ParseError(origin + ": expected at least 3 fields", line_no);

    const std::vector<std::string> dmy = split(f[0], '/');
    if (dmy.size() != 3) throw ParseError(origin + ": bad date '" + f[0] + "'", line_no);
    const long day = parse_int_field(dmy[0].data(), dmy[0].data() + dmy[0].size(), "day", line_no);
    const long month =
        parse_int_field(dmy[1].data(), dmy[1].data() + dmy[1].size(), "month", line_no);
    const long year =
        parse_int_field(dmy[2].data(), dmy[2].data() + dmy[2].size(), "year", line_no);
    if (month < 1 || month > 12 || day < 1 ||
        day > days_in_month(static_cast<int>(year), static_cast<unsigned>(month)))
      throw ParseError(origin + ": bad date '" + f[0] + "'", line_no);

    const std::int64_t serial = (year - 1970) * 12 + (month - 1);
    MonthBucket& bucket = months[serial];
    bucket.first_day_seen = std::min(bucket.first_day_seen, static_cast<unsigned>(day));
    bucket.last_day_seen = std::max(bucket.last_day_seen, static_cast<unsigned>(day));
    if (f[2] != "?") {
      bucket.sum += parse_double(f[2], "active power", line_no);
      bucket.count += 1;
    }
  }
  if (months.empty()) throw EmptyInput(origin + " has a header but no rows");

  const auto full = [&months](std::int64_t serial) {
    const MonthBucket& b = months.at(serial);
    const int year = static_cast<int>(1970 + (serial >= 0 ? serial / 12 : (serial - 11) / 12));
    const auto month = static_cast<unsigned>(serial - (year - 1970) * 12 + 1);
    return b.first_day_seen == 1 && b.last_day_seen == days_in_month(year, month) &&
           b.count > 0;
  };

  std::int64_t first = months.begin()->first;
  std::int64_t last = months.rbegin()->first;
  while (first <= last && !(months.count(first) && full(first))) ++first;
  while (last >= first && !(months.count(last) && full(last))) --last;
  if (first > last) throw InsufficientData(origin + " contains no full month");

  DailySeries series;
  std::vector<double> kw;
  for (std::int64_t m = first; m <= last; ++m) {
    series.dates.push_back(m);
    const auto it = months.find(m);
    kw.push_back(it != months.end() && full(m)
                     ? it->second.sum / static_cast<double>(it->second.count)
                     : std::numeric_limits<double>::quiet_NaN());
  }
  series.channels["kw"] = std::move(kw);
  series.target = "kw";
  series.validate();
  return series;
}

DailySeries ingest_household(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  return read_household(in, path);
}

std::string month_label(std::int64_t month_serial) {
  const std::int64_t y = month_serial >= 0 ? month_serial / 12 : (month_serial - 11) / 12;
  const auto month = static_cast<int>(month_serial - y * 12) + 1;
  std::ostringstream out;
  out << (1970 + y) << '-' << (month < 10 ? "0" : "") << month;
  return out.str();
}

}  // namespace soh
