#pragma once

#include <cstdint>
#include <string>

namespace soilmark {

struct CivilDateTime {
  int year = 1970;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;
};

// Days between 1970-01-01 and y-m-d (proleptic Gregorian).
std::int64_t days_from_civil(int year, int month, int day);
CivilDateTime civil_from_unix(std::int64_t unix_seconds);
std::int64_t unix_from_civil(const CivilDateTime& c);

// Strict RFC 3339 timestamp ("2017-02-10T10:30:00Z", fractional seconds and
// numeric offsets accepted). Returns UTC Unix seconds, fraction truncated.
// Throws InvalidArgument on malformed input.
std::int64_t parse_rfc3339(const std::string& text);
std::string format_rfc3339(std::int64_t unix_seconds);

}  // namespace soilmark
