#include "soilmark/datetime.hpp"

#include <cctype>
#include <cstdio>

#include "soilmark/errors.hpp"

namespace soilmark {

namespace {

bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static const int n[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  if (m == 2 && is_leap(y)) return 29;
  return n[m - 1];
}

}  // namespace

std::int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDateTime civil_from_unix(std::int64_t t) {
  std::int64_t days = t / 86400;
  std::int64_t rem = t % 86400;
  if (rem < 0) {
    rem += 86400;
    days -= 1;
  }
  std::int64_t z = days + 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp + (mp < 10 ? 3 : -9);

  CivilDateTime c;
  c.year = static_cast<int>(y + (m <= 2));
  c.month = static_cast<int>(m);
  c.day = static_cast<int>(d);
  c.hour = static_cast<int>(rem / 3600);
  c.minute = static_cast<int>(rem / 60 % 60);
  c.second = static_cast<int>(rem % 60);
  return c;
}

std::int64_t unix_from_civil(const CivilDateTime& c) {
  return days_from_civil(c.year, c.month, c.day) * 86400 +
         c.hour * 3600 + c.minute * 60 + c.second;
}

std::int64_t parse_rfc3339(const std::string& text) {
  int y, mo, d, h, mi, s;
  int n = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &y, &mo, &d, &h,
                  &mi, &s, &n) != 6 &&
      std::sscanf(text.c_str(), "%4d-%2d-%2dt%2d:%2d:%2d%n", &y, &mo, &d, &h,
                  &mi, &s, &n) != 6 &&
      std::sscanf(text.c_str(), "%4d-%2d-%2d %2d:%2d:%2d%n", &y, &mo, &d, &h,
                  &mi, &s, &n) != 6) {
    throw InvalidArgument("not an RFC 3339 timestamp: '" + text + "'");
  }
  std::size_t pos = static_cast<std::size_t>(n);
  if (mo < 1 || mo > 12 || d < 1 || d > days_in_month(y, mo) || h > 23 ||
      mi > 59 || s > 60 || h < 0 || mi < 0 || s < 0) {
    throw InvalidArgument("timestamp field out of range: '" + text + "'");
  }
  if (s == 60) s = 59;  // fold leap second

  // optional fractional seconds
  if (pos < text.size() && text[pos] == '.') {
    ++pos;
    std::size_t digits = 0;
    while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
      ++pos;
      ++digits;
    }
    if (digits == 0) throw InvalidArgument("empty fractional seconds: '" + text + "'");
  }

  int offset_minutes = 0;
  if (pos >= text.size()) {
    throw InvalidArgument("missing timezone designator: '" + text + "'");
  }
  char tz = text[pos];
  if (tz == 'Z' || tz == 'z') {
    ++pos;
  } else if (tz == '+' || tz == '-') {
    int oh, om;
    if (std::sscanf(text.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2 ||
        oh > 23 || om > 59 || oh < 0 || om < 0) {
      throw InvalidArgument("bad timezone offset: '" + text + "'");
    }
    offset_minutes = oh * 60 + om;
    if (tz == '-') offset_minutes = -offset_minutes;
    pos += 6;
  } else {
    throw InvalidArgument("bad timezone designator: '" + text + "'");
  }
  if (pos != text.size()) {
    throw InvalidArgument("trailing characters in timestamp: '" + text + "'");
  }

  CivilDateTime c{y, mo, d, h, mi, s};
  return unix_from_civil(c) - std::int64_t(offset_minutes) * 60;
}

std::string format_rfc3339(std::int64_t unix_seconds) {
  CivilDateTime c = civil_from_unix(unix_seconds);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02dZ", c.year,
                c.month, c.day, c.hour, c.minute, c.second);
  return buf;
}

}  // namespace soilmark
