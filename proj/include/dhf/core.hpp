#pragma once

// Domain types shared by every forecaster: hourly timestamps, series, weather
// records, calendar indexing and feature extraction.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dhf/error.hpp"

namespace dhf {

using Timestamp = std::chrono::sys_seconds;

inline constexpr std::size_t kHorizon = 72;
inline constexpr std::size_t kHoursPerWeek = 168;
inline constexpr std::size_t kYearSlots = 8784;

inline bool is_hour_aligned(Timestamp ts) {
    return ts.time_since_epoch().count() % 3600 == 0;
}

inline void require_aligned(Timestamp ts) {
    if (!is_hour_aligned(ts)) {
        throw AlignmentError("timestamp is not aligned to a whole hour");
    }
}

inline Timestamp add_hours(Timestamp ts, std::int64_t hours) {
    return ts + std::chrono::hours(hours);
}

// Whole hours from `from` to `to` (negative when `to` precedes `from`).
inline std::int64_t hours_between(Timestamp from, Timestamp to) {
    return std::chrono::duration_cast<std::chrono::hours>(to - from).count();
}

inline Timestamp make_timestamp(int year, unsigned month, unsigned day, int hour = 0) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{month}, std::chrono::day{day}};
    if (!ymd.ok()) {
        throw DataError("invalid calendar date");
    }
    return sys_days{ymd} + hours{hour};
}

namespace detail {

inline bool parse_uint(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        const char c = s[i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

}  // namespace detail

// Accepts "YYYY-MM-DD", "YYYY-MM-DD[T ]HH:MM" and "YYYY-MM-DD[T ]HH:MM:SS", with
// an optional trailing 'Z'. Timestamps are wall-clock hours of the dataset.
inline Timestamp parse_timestamp(std::string_view text) {
    std::string_view s = text;
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r')) s.remove_suffix(1);
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (!s.empty() && s.back() == 'Z') s.remove_suffix(1);

    int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
    const auto bad = [&] { return DataError("unparsable timestamp '" + std::string(text) + "'"); };
    if (s.size() < 10 || !detail::parse_uint(s, 0, 4, y) || s[4] != '-' ||
        !detail::parse_uint(s, 5, 2, mo) || s[7] != '-' || !detail::parse_uint(s, 8, 2, d)) {
        throw bad();
    }
    if (s.size() > 10) {
        if ((s[10] != 'T' && s[10] != ' ') || s.size() < 16 || !detail::parse_uint(s, 11, 2, h) ||
            s[13] != ':' || !detail::parse_uint(s, 14, 2, mi)) {
            throw bad();
        }
        if (s.size() > 16) {
            if (s.size() != 19 || s[16] != ':' || !detail::parse_uint(s, 17, 2, sec)) throw bad();
        }
    }
    if (h > 23 || mi > 59 || sec > 59) throw bad();
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(mo)},
                             std::chrono::day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw bad();
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_timestamp(Timestamp ts) {
    using namespace std::chrono;
    const auto day = floor<days>(ts);
    const year_month_day ymd{day};
    const hh_mm_ss tod{ts - day};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

// 0 at Monday 00:00, wrapping after Sunday 23:00 (167).
inline std::size_t hour_of_week(Timestamp ts) {
    require_aligned(ts);
    const std::int64_t hours = ts.time_since_epoch().count() / 3600;
    // 1970-01-01 was a Thursday, i.e. 72 hours after a Monday 00:00.
    const std::int64_t shifted = hours + 72;
    const std::int64_t m = shifted % static_cast<std::int64_t>(kHoursPerWeek);
    return static_cast<std::size_t>(m < 0 ? m + static_cast<std::int64_t>(kHoursPerWeek) : m);
}

// Index into an 8784-slot leap-year calendar: Feb 29 always occupies slots
// 1416..1439, so non-leap years skip them and March 1 is slot 1440 every year.
inline std::size_t hour_of_year(Timestamp ts) {
    require_aligned(ts);
    using namespace std::chrono;
    const auto day = floor<days>(ts);
    const year_month_day ymd{day};
    const auto jan1 = sys_days{ymd.year() / January / 1};
    auto doy = static_cast<std::size_t>((day - jan1).count());
    if (!ymd.year().is_leap() && ymd.month() > February) ++doy;
    const auto hour = static_cast<std::size_t>(duration_cast<hours>(ts - day).count());
    return 24 * doy + hour;
}

enum class DayType : int { MonThu = 1, Fri = 2, Sat = 3, Sun = 4 };
enum class Season : int { Spring = 1, Summer = 2, Autumn = 3, Winter = 4 };

inline DayType day_type_of(Timestamp ts) {
    const std::size_t weekday = hour_of_week(std::chrono::floor<std::chrono::days>(ts)) / 24;
    if (weekday <= 3) return DayType::MonThu;
    if (weekday == 4) return DayType::Fri;
    if (weekday == 5) return DayType::Sat;
    return DayType::Sun;
}

// Meteorological seasons.
inline Season season_of(Timestamp ts) {
    using namespace std::chrono;
    const unsigned m = static_cast<unsigned>(year_month_day{floor<days>(ts)}.month());
    if (m >= 3 && m <= 5) return Season::Spring;
    if (m >= 6 && m <= 8) return Season::Summer;
    if (m >= 9 && m <= 11) return Season::Autumn;
    return Season::Winter;
}

// Hours of daylight from the solar declination (Cooper's formula) at the given
// latitude. Kept strictly inside (0, 24) so polar days stay representable.
inline double day_length_hours(Timestamp ts, double latitude_deg) {
    using namespace std::chrono;
    const auto day = floor<days>(ts);
    const year_month_day ymd{day};
    const double n = static_cast<double>((day - sys_days{ymd.year() / January / 1}).count() + 1);
    constexpr double deg = std::numbers::pi / 180.0;
    const double declination = 23.44 * deg * std::sin(2.0 * std::numbers::pi * (284.0 + n) / 365.0);
    double c = -std::tan(latitude_deg * deg) * std::tan(declination);
    if (c > 1.0) c = 1.0;
    if (c < -1.0) c = -1.0;
    const double hours = 2.0 * std::acos(c) / (15.0 * deg);
    constexpr double eps = 1e-3;
    return std::clamp(hours, eps, 24.0 - eps);
}

struct WeatherRecord {
    double temperature = 0.0;  // degrees C
    double wind_speed = 0.0;   // m/s
    double humidity = 0.0;     // percent
    int overcast = 0;          // oktas
    DayType day_type = DayType::MonThu;
    Season season = Season::Winter;
    double day_length = 12.0;  // hours

    bool satisfies_invariants() const {
        return wind_speed >= 0.0 && humidity >= 0.0 && humidity <= 100.0 && overcast >= 0 &&
               overcast <= 8 && day_length > 0.0 && day_length < 24.0 && std::isfinite(temperature);
    }
};

struct WeatherFrame {
    Timestamp start{};
    std::vector<WeatherRecord> records;

    std::size_t size() const { return records.size(); }

    // nullptr when ts falls outside the frame.
    const WeatherRecord* find(Timestamp ts) const {
        const std::int64_t k = hours_between(start, ts);
        if (k < 0 || k >= static_cast<std::int64_t>(records.size())) return nullptr;
        return &records[static_cast<std::size_t>(k)];
    }
};

// Contiguous hourly readings of one counter. `valid` is the per-hour mask
// produced by cleaning; an empty mask means every hour is valid.
struct HourlySeries {
    Timestamp start{};
    std::vector<double> values;
    std::vector<std::uint8_t> valid;
    std::string counter_id;

    std::size_t size() const { return values.size(); }
    bool is_valid(std::size_t k) const { return valid.empty() || valid[k] != 0; }
    Timestamp time_at(std::size_t k) const { return add_hours(start, static_cast<std::int64_t>(k)); }

    // Position of ts in the series, or -1 when outside.
    std::int64_t index_of(Timestamp ts) const {
        const std::int64_t k = hours_between(start, ts);
        return (k < 0 || k >= static_cast<std::int64_t>(values.size())) ? -1 : k;
    }

    std::size_t valid_count() const {
        if (valid.empty()) return values.size();
        return static_cast<std::size_t>(std::count(valid.begin(), valid.end(), std::uint8_t{1}));
    }
};

inline double moving_average(std::span<const double> values, std::size_t at, std::size_t window) {
    if (window == 0) throw ValidationError("moving average window must be at least 1");
    if (at >= values.size() || at + 1 < window) {
        throw WarmupError("moving average needs " + std::to_string(window) + " hours of history");
    }
    double sum = 0.0;
    for (std::size_t k = at + 1 - window; k <= at; ++k) sum += values[k];
    return sum / static_cast<double>(window);
}

// True when the `window` readings ending at `at` exist and are all valid.
inline bool trailing_window_valid(const HourlySeries& series, std::size_t at, std::size_t window) {
    if (window == 0 || at >= series.size() || at + 1 < window) return false;
    if (series.valid.empty()) return true;
    for (std::size_t k = at + 1 - window; k <= at; ++k) {
        if (!series.valid[k]) return false;
    }
    return true;
}

// Mean of the `window` readings ending at `at`; every one of them must be valid.
inline double moving_average(const HourlySeries& series, std::size_t at, std::size_t window) {
    if (window == 0) throw ValidationError("moving average window must be at least 1");
    if (!trailing_window_valid(series, at, window)) {
        throw WarmupError("moving average needs " + std::to_string(window) +
                          " valid trailing hours");
    }
    return moving_average(std::span<const double>(series.values), at, window);
}

// Rolling means for every index, NaN where the trailing window is incomplete
// or contains an invalid reading. Linear time.
inline std::vector<double> rolling_means(const HourlySeries& series, std::size_t window) {
    const std::size_t n = series.size();
    std::vector<double> out(n, std::nan(""));
    if (window == 0 || n < window) return out;
    double sum = 0.0;
    std::size_t invalid = 0;
    for (std::size_t k = 0; k < n; ++k) {
        sum += series.values[k];
        invalid += series.is_valid(k) ? 0 : 1;
        if (k >= window) {
            sum -= series.values[k - window];
            invalid -= series.is_valid(k - window) ? 0 : 1;
        }
        if (k + 1 >= window && invalid == 0) {
            // Recompute exactly so results agree bit-for-bit with moving_average.
            out[k] = moving_average(std::span<const double>(series.values), k, window);
        }
    }
    return out;
}

enum class FeatureSet { FS0, FS1, FS2, FS3, FS4, FSM };

// Column order (subset selected per set): T, DL, DT, V, sqrt(V), T*V, T*sqrt(V), pY, Oc, H.
inline constexpr std::size_t feature_count(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::FS0: return 2;
        case FeatureSet::FS1: return 4;
        case FeatureSet::FS2: return 7;
        case FeatureSet::FS3:
        case FeatureSet::FSM: return 10;
        case FeatureSet::FS4: return 0;
    }
    return 0;
}

inline std::string_view feature_set_name(FeatureSet fs) {
    switch (fs) {
        case FeatureSet::FS0: return "FS0";
        case FeatureSet::FS1: return "FS1";
        case FeatureSet::FS2: return "FS2";
        case FeatureSet::FS3: return "FS3";
        case FeatureSet::FS4: return "FS4";
        case FeatureSet::FSM: return "FSM";
    }
    return "?";
}

inline FeatureSet parse_feature_set(std::string_view s) {
    for (auto fs : {FeatureSet::FS0, FeatureSet::FS1, FeatureSet::FS2, FeatureSet::FS3,
                    FeatureSet::FS4, FeatureSet::FSM}) {
        if (feature_set_name(fs) == s) return fs;
    }
    throw DataError("unknown feature set '" + std::string(s) + "'");
}

// Writes feature_count(fs) values into out.
inline void write_weather_features(const WeatherRecord& r, FeatureSet fs, double* out) {
    const double t = r.temperature;
    const double v = r.wind_speed;
    const double sv = std::sqrt(v);
    const double dt = static_cast<double>(static_cast<int>(r.day_type));
    const double py = static_cast<double>(static_cast<int>(r.season));
    switch (fs) {
        case FeatureSet::FS0:
            out[0] = t;
            out[1] = r.day_length;
            return;
        case FeatureSet::FS1:
            out[0] = t;
            out[1] = r.day_length;
            out[2] = sv;
            out[3] = t * sv;
            return;
        case FeatureSet::FS2:
            out[0] = t;
            out[1] = r.day_length;
            out[2] = v;
            out[3] = sv;
            out[4] = t * v;
            out[5] = t * sv;
            out[6] = py;
            return;
        case FeatureSet::FS3:
        case FeatureSet::FSM:
            out[0] = t;
            out[1] = r.day_length;
            out[2] = dt;
            out[3] = v;
            out[4] = sv;
            out[5] = t * v;
            out[6] = t * sv;
            out[7] = py;
            out[8] = static_cast<double>(r.overcast);
            out[9] = r.humidity;
            return;
        case FeatureSet::FS4:
            return;
    }
}

inline std::vector<double> weather_features(const WeatherRecord& r, FeatureSet fs) {
    std::vector<double> out(feature_count(fs));
    write_weather_features(r, fs, out.data());
    return out;
}

struct ForecastWindow {
    Timestamp origin{};
    std::array<double, kHorizon> values{};  // hours origin+1 .. origin+72
};

}  // namespace dhf
