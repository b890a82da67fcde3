#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace popshift {

using Timestamp = std::chrono::sys_seconds;

// ISO-8601 subset: YYYY-MM-DD[T| ]HH:MM[:SS] followed by Z, +HH:MM, -HH:MM or
// nothing (UTC). Returns nullopt for anything else.
std::optional<Timestamp> parse_timestamp(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp t);

// Minutes after local midnight for the given UTC offset.
int minute_of_day(Timestamp t, int utc_offset_minutes);

std::string format_minute_of_day(int minutes);  // "HH:MM"
std::optional<int> parse_minute_of_day(std::string_view hhmm);

} // namespace popshift
