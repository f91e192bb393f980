#pragma once

// Loading counter/weather CSV files, the validity-mask cleaning rules,
// train/test splitting and a synthetic data generator with a known ground
// truth model.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dhf/core.hpp"

namespace dhf {

inline constexpr std::string_view kSumCounter = "sum";
inline constexpr double kDefaultLatitude = 52.0;

struct RawRow {
    Timestamp timestamp{};
    std::string counter_id;
    double energy = 0.0;
    WeatherRecord weather;
};

struct Reject {
    std::size_t line = 0;
    std::string reason;
};

struct RawDataset {
    std::vector<RawRow> rows;
    std::vector<std::string> counters;  // first-seen order
    std::vector<Reject> rejects;
};

// Header names for each logical column. day_length is optional in the file.
struct CsvSchema {
    std::string timestamp = "timestamp";
    std::string counter_id = "counter_id";
    std::string energy = "energy_kwh";
    std::string temperature = "temperature_c";
    std::string wind_speed = "wind_speed_ms";
    std::string humidity = "humidity_pct";
    std::string overcast = "overcast_oktas";
    std::string day_type = "day_type";
    std::string season = "season";
    std::string day_length = "day_length_h";
};

struct LoadOptions {
    CsvSchema schema;
    double latitude = kDefaultLatitude;  // used when the day length column is absent
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(pos));
            break;
        }
        out.push_back(line.substr(pos, comma - pos));
        pos = comma + 1;
    }
    for (auto& f : out) {
        while (!f.empty() && (f.front() == ' ' || f.front() == '"')) f.remove_prefix(1);
        while (!f.empty() && (f.back() == ' ' || f.back() == '"' || f.back() == '\r')) {
            f.remove_suffix(1);
        }
    }
    return out;
}

inline std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::optional<Season> parse_season(std::string_view s) {
    const std::string l = lower(s);
    if (l == "1" || l == "spring") return Season::Spring;
    if (l == "2" || l == "summer") return Season::Summer;
    if (l == "3" || l == "autumn" || l == "fall") return Season::Autumn;
    if (l == "4" || l == "winter") return Season::Winter;
    return std::nullopt;
}

inline std::optional<DayType> parse_day_type(std::string_view s) {
    const auto v = parse_double(s);
    if (!v) return std::nullopt;
    if (*v == 1.0) return DayType::MonThu;
    if (*v == 2.0) return DayType::Fri;
    if (*v == 3.0) return DayType::Sat;
    if (*v == 4.0) return DayType::Sun;
    return std::nullopt;
}

inline std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace detail

// Rows that fail to parse or violate a field invariant are collected in
// `rejects`; an unparsable timestamp or a non-increasing timestamp within one
// counter aborts with DataError.
inline RawDataset load_csv(std::istream& in, const LoadOptions& opts = {}) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("input has no header row");
    const auto header = detail::split_csv_line(line);
    std::map<std::string, std::size_t, std::less<>> column;
    for (std::size_t i = 0; i < header.size(); ++i) column.emplace(std::string(header[i]), i);

    const CsvSchema& s = opts.schema;
    const auto require = [&](const std::string& name) {
        const auto it = column.find(name);
        if (it == column.end()) throw DataError("header has no column '" + name + "'");
        return it->second;
    };
    const std::size_t c_ts = require(s.timestamp);
    const std::size_t c_id = require(s.counter_id);
    const std::size_t c_energy = require(s.energy);
    const std::size_t c_temp = require(s.temperature);
    const std::size_t c_wind = require(s.wind_speed);
    const std::size_t c_hum = require(s.humidity);
    const std::size_t c_oc = require(s.overcast);
    const std::size_t c_dt = require(s.day_type);
    const std::size_t c_season = require(s.season);
    const auto dl_it = column.find(s.day_length);
    // npos when the file has no day-length column
    const std::size_t c_dl = dl_it == column.end() ? std::string::npos : dl_it->second;

    RawDataset ds;
    std::unordered_map<std::string, Timestamp> last_seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = detail::split_csv_line(line);
        const auto reject = [&](std::string reason) {
            ds.rejects.push_back({line_no, std::move(reason)});
        };
        if (f.size() < header.size()) {
            reject("expected " + std::to_string(header.size()) + " fields, found " +
                   std::to_string(f.size()));
            continue;
        }
        RawRow row;
        try {
            row.timestamp = parse_timestamp(f[c_ts]);
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!is_hour_aligned(row.timestamp)) {
            throw DataError("line " + std::to_string(line_no) + ": timestamp not on a whole hour");
        }
        row.counter_id = std::string(f[c_id]);
        if (row.counter_id.empty()) {
            reject("empty counter_id");
            continue;
        }
        const auto energy = detail::parse_double(f[c_energy]);
        if (!energy) {
            reject("missing or unparsable energy");
            continue;
        }
        if (*energy < 0.0) {
            reject("negative energy");
            continue;
        }
        row.energy = *energy;
        const auto temp = detail::parse_double(f[c_temp]);
        const auto wind = detail::parse_double(f[c_wind]);
        const auto hum = detail::parse_double(f[c_hum]);
        const auto oc = detail::parse_double(f[c_oc]);
        const auto dt = detail::parse_day_type(f[c_dt]);
        const auto season = detail::parse_season(f[c_season]);
        if (!temp || !wind || !hum || !oc || !dt || !season) {
            reject("missing or unparsable weather field");
            continue;
        }
        row.weather.temperature = *temp;
        row.weather.wind_speed = *wind;
        row.weather.humidity = *hum;
        row.weather.overcast = static_cast<int>(std::lround(*oc));
        row.weather.day_type = *dt;
        row.weather.season = *season;
        std::optional<double> dl;
        if (c_dl < f.size() && !f[c_dl].empty()) {
            dl = detail::parse_double(f[c_dl]);
            if (!dl) {
                reject("unparsable day length");
                continue;
            }
        }
        row.weather.day_length = dl ? *dl : day_length_hours(row.timestamp, opts.latitude);
        if (!row.weather.satisfies_invariants() || *oc != std::round(*oc)) {
            reject("weather field out of range");
            continue;
        }

        const auto [it, inserted] = last_seen.try_emplace(row.counter_id, row.timestamp);
        if (inserted) {
            ds.counters.push_back(row.counter_id);
        } else {
            if (row.timestamp <= it->second) {
                throw DataError("line " + std::to_string(line_no) + ": timestamps of counter '" +
                                row.counter_id + "' are not strictly increasing");
            }
            it->second = row.timestamp;
        }
        ds.rows.push_back(std::move(row));
    }
    return ds;
}

inline RawDataset load_csv(const std::string& path, const LoadOptions& opts = {}) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return load_csv(in, opts);
}

inline void write_csv(std::ostream& out, const RawDataset& ds) {
    const CsvSchema s;
    out << s.timestamp << ',' << s.counter_id << ',' << s.energy << ',' << s.temperature << ','
        << s.wind_speed << ',' << s.humidity << ',' << s.overcast << ',' << s.day_type << ','
        << s.season << ',' << s.day_length << '\n';
    for (const auto& r : ds.rows) {
        const auto& w = r.weather;
        out << format_timestamp(r.timestamp) << ',' << r.counter_id << ','
            << detail::format_double(r.energy) << ',' << detail::format_double(w.temperature) << ','
            << detail::format_double(w.wind_speed) << ',' << detail::format_double(w.humidity)
            << ',' << w.overcast << ',' << static_cast<int>(w.day_type) << ','
            << static_cast<int>(w.season) << ',' << detail::format_double(w.day_length) << '\n';
    }
}

inline void write_csv(const std::string& path, const RawDataset& ds) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    write_csv(out, ds);
}

inline void write_rejects(const std::string& path, const std::vector<Reject>& rejects) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "line_number,reason\n";
    for (const auto& r : rejects) out << r.line << ',' << r.reason << '\n';
}

// Per-counter series on one shared hourly grid. Every series starts at
// `start` and has `hours` entries; hours without a reading are invalid.
// lead_in/lead_out count warm-up hours before and horizon hours after the
// interval the view was cut for.
struct CleanDataset {
    Timestamp start{};
    std::size_t hours = 0;
    WeatherFrame weather;
    std::vector<HourlySeries> counters;
    std::size_t lead_in = 0;
    std::size_t lead_out = 0;

    const HourlySeries& counter(std::string_view id) const {
        for (const auto& c : counters) {
            if (c.counter_id == id) return c;
        }
        throw DataError("unknown counter '" + std::string(id) + "'");
    }
    bool has_counter(std::string_view id) const {
        return std::any_of(counters.begin(), counters.end(),
                           [&](const HourlySeries& c) { return c.counter_id == id; });
    }
    Timestamp interval_start() const { return add_hours(start, static_cast<std::int64_t>(lead_in)); }
    std::size_t interval_hours() const {
        return hours >= lead_in + lead_out ? hours - lead_in - lead_out : 0;
    }
};

// Validity mask: an hour is usable only if its humidity is non-zero and at
// least one counter reads non-zero; on the readings that survive those two
// rules, a zero is valid only when both neighbours are non-zero.
inline CleanDataset clean(const RawDataset& raw) {
    CleanDataset ds;
    if (raw.rows.empty()) return ds;
    Timestamp lo = raw.rows.front().timestamp;
    Timestamp hi = lo;
    for (const auto& r : raw.rows) {
        lo = std::min(lo, r.timestamp);
        hi = std::max(hi, r.timestamp);
    }
    const auto n = static_cast<std::size_t>(hours_between(lo, hi) + 1);
    ds.start = lo;
    ds.hours = n;
    ds.weather.start = lo;
    ds.weather.records.assign(n, WeatherRecord{});

    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& id : raw.counters) {
        slot.emplace(id, ds.counters.size());
        HourlySeries s;
        s.start = lo;
        s.counter_id = id;
        s.values.assign(n, 0.0);
        s.valid.assign(n, 0);
        ds.counters.push_back(std::move(s));
    }
    std::vector<std::uint8_t> has_weather(n, 0);
    std::vector<std::vector<std::uint8_t>> present(ds.counters.size(), std::vector<std::uint8_t>(n, 0));
    for (const auto& r : raw.rows) {
        const auto k = static_cast<std::size_t>(hours_between(lo, r.timestamp));
        if (!has_weather[k]) {
            ds.weather.records[k] = r.weather;
            has_weather[k] = 1;
        }
        const std::size_t c = slot.at(r.counter_id);
        ds.counters[c].values[k] = r.energy;
        present[c][k] = 1;
    }

    std::vector<std::uint8_t> hour_ok(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        if (!has_weather[k] || !(ds.weather.records[k].humidity > 0.0)) continue;
        for (std::size_t c = 0; c < ds.counters.size(); ++c) {
            if (present[c][k] && ds.counters[c].values[k] != 0.0) {
                hour_ok[k] = 1;
                break;
            }
        }
    }

    for (std::size_t c = 0; c < ds.counters.size(); ++c) {
        auto& s = ds.counters[c];
        std::vector<std::size_t> surviving;
        for (std::size_t k = 0; k < n; ++k) {
            if (hour_ok[k] && present[c][k]) surviving.push_back(k);
        }
        for (std::size_t i = 0; i < surviving.size(); ++i) {
            const std::size_t k = surviving[i];
            if (s.values[k] != 0.0) {
                s.valid[k] = 1;
                continue;
            }
            const bool prev_nonzero = i > 0 && s.values[surviving[i - 1]] != 0.0;
            const bool next_nonzero = i + 1 < surviving.size() && s.values[surviving[i + 1]] != 0.0;
            s.valid[k] = (prev_nonzero && next_nonzero) ? 1 : 0;
        }
    }
    return ds;
}

// Valid readings only, in hour-major order.
inline RawDataset to_raw(const CleanDataset& ds) {
    RawDataset raw;
    for (const auto& c : ds.counters) raw.counters.push_back(c.counter_id);
    for (std::size_t k = 0; k < ds.hours; ++k) {
        for (const auto& c : ds.counters) {
            if (!c.is_valid(k)) continue;
            raw.rows.push_back({c.time_at(k), c.counter_id, c.values[k], ds.weather.records[k]});
        }
    }
    return raw;
}

// Hours [from, to] of the dataset (clipped to what exists), bit-exact copy.
inline CleanDataset slice(const CleanDataset& ds, Timestamp from, Timestamp to) {
    CleanDataset out;
    const std::int64_t a = std::max<std::int64_t>(0, hours_between(ds.start, from));
    const std::int64_t b =
        std::min<std::int64_t>(static_cast<std::int64_t>(ds.hours) - 1, hours_between(ds.start, to));
    out.start = add_hours(ds.start, a);
    out.weather.start = out.start;
    const std::size_t len = b >= a ? static_cast<std::size_t>(b - a + 1) : 0;
    out.hours = len;
    const auto first = static_cast<std::ptrdiff_t>(a);
    const auto last = first + static_cast<std::ptrdiff_t>(len);
    if (len > 0) {
        out.weather.records.assign(ds.weather.records.begin() + first,
                                   ds.weather.records.begin() + last);
    }
    for (const auto& c : ds.counters) {
        HourlySeries s;
        s.start = out.start;
        s.counter_id = c.counter_id;
        if (len > 0) {
            s.values.assign(c.values.begin() + first, c.values.begin() + last);
            if (!c.valid.empty()) s.valid.assign(c.valid.begin() + first, c.valid.begin() + last);
        }
        out.counters.push_back(std::move(s));
    }
    return out;
}

struct Interval {
    Timestamp start{};
    Timestamp end{};  // inclusive

    std::size_t hours() const { return static_cast<std::size_t>(hours_between(start, end) + 1); }
};

// "start/end" with ISO-8601 endpoints.
inline Interval parse_interval(std::string_view text) {
    const auto slash = text.find('/');
    if (slash == std::string_view::npos) throw ValidationError("interval must be 'start/end'");
    Interval iv{parse_timestamp(text.substr(0, slash)), parse_timestamp(text.substr(slash + 1))};
    if (!is_hour_aligned(iv.start) || !is_hour_aligned(iv.end)) {
        throw ValidationError("interval endpoints must be whole hours");
    }
    if (iv.end < iv.start) throw ValidationError("interval end precedes its start");
    return iv;
}

struct SplitViews {
    CleanDataset train;
    CleanDataset test;
};

// The test view also carries up to `warmup` hours before and `horizon` hours
// after the test interval, recorded in lead_in/lead_out.
inline SplitViews split(const CleanDataset& ds, const Interval& train, const Interval& test,
                        std::size_t warmup = kHoursPerWeek, std::size_t horizon = kHorizon) {
    for (const Interval* iv : {&train, &test}) {
        if (!is_hour_aligned(iv->start) || !is_hour_aligned(iv->end)) {
            throw ValidationError("split intervals must be hour aligned");
        }
        if (iv->end < iv->start) throw ValidationError("split interval is inverted");
    }
    if (!(train.end < test.start)) {
        throw ValidationError("training interval must precede and not overlap the test interval");
    }
    SplitViews v;
    v.train = slice(ds, train.start, train.end);
    const Timestamp from = add_hours(test.start, -static_cast<std::int64_t>(warmup));
    const Timestamp to = add_hours(test.end, static_cast<std::int64_t>(horizon));
    v.test = slice(ds, from, to);
    if (v.test.hours > 0) {
        v.test.lead_in = static_cast<std::size_t>(
            std::clamp<std::int64_t>(hours_between(v.test.start, test.start), 0,
                                     static_cast<std::int64_t>(v.test.hours)));
        const Timestamp last = add_hours(v.test.start, static_cast<std::int64_t>(v.test.hours) - 1);
        v.test.lead_out = static_cast<std::size_t>(std::clamp<std::int64_t>(
            hours_between(test.end, last), 0,
            static_cast<std::int64_t>(v.test.hours - v.test.lead_in)));
    }
    return v;
}

// ---------------------------------------------------------------------------
// Synthetic data with a known decomposition
//   Y_c(h) = scale_c * (f*(T_h) + g*(hour_of_week(h)) + eps),  eps ~ N(0, sigma)
// clamped at zero, plus a "sum" counter holding the per-hour total.

struct GeneratorConfig {
    std::size_t counters = 3;  // excluding "sum"
    std::size_t hours = 2 * 8760;
    double sigma = 0.0;
    double latitude = kDefaultLatitude;
    Timestamp start = make_timestamp(2016, 1, 1);
    double temp_mean = 8.0;
    double temp_annual_amplitude = 11.0;
    double temp_daily_amplitude = 4.0;
    double temp_noise = 2.0;

    void validate() const {
        if (counters == 0) throw ValidationError("generator: counters must be at least 1");
        if (hours == 0) throw ValidationError("generator: hours must be at least 1");
        if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ValidationError("generator: sigma must be >= 0");
        if (!(latitude > -90.0 && latitude < 90.0)) throw ValidationError("generator: latitude out of range");
        if (!(temp_noise >= 0.0)) throw ValidationError("generator: temp_noise must be >= 0");
        if (!is_hour_aligned(start)) throw ValidationError("generator: start must be a whole hour");
    }
};

// key=value lines; '#' starts a comment.
inline GeneratorConfig parse_generator_config(std::istream& in) {
    GeneratorConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos) {
                throw ValidationError("generator config: expected key=value, got '" + line + "'");
            }
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        const auto num = [&] {
            const auto v = detail::parse_double(val);
            if (!v) throw ValidationError("generator config: bad value for '" + key + "'");
            return *v;
        };
        const auto count = [&] {
            const double v = num();
            if (v < 0 || v != std::floor(v)) {
                throw ValidationError("generator config: '" + key + "' must be a whole number");
            }
            return static_cast<std::size_t>(v);
        };
        if (key == "counters") cfg.counters = count();
        else if (key == "hours") cfg.hours = count();
        else if (key == "sigma") cfg.sigma = num();
        else if (key == "latitude") cfg.latitude = num();
        else if (key == "start") cfg.start = parse_timestamp(val);
        else if (key == "temp_mean") cfg.temp_mean = num();
        else if (key == "temp_annual_amplitude") cfg.temp_annual_amplitude = num();
        else if (key == "temp_daily_amplitude") cfg.temp_daily_amplitude = num();
        else if (key == "temp_noise") cfg.temp_noise = num();
        else throw ValidationError("generator config: unknown key '" + key + "'");
    }
    return cfg;
}

// Ground truth of the generator. The kinks sit at the quintiles of the default
// temperature process, so the five-segment quantile fit can represent f*
// exactly; the daily profile is odd about the warmest hour, so it is
// uncorrelated with temperature and the two-stage decomposition separates.
struct SyntheticTruth {
    static constexpr double warmest_hour = 15.0;
    static constexpr std::array<double, 4> breakpoints{-0.4, 4.8, 11.2, 16.4};
    static constexpr std::array<double, 5> slopes{-6.0, -8.0, -7.0, -4.0, 0.0};
    static constexpr double level_at_hot_end = 30.0;  // f*(t) for t >= 16.4

    static double temperature_component(double t) {
        // Integrate the slopes leftwards from the flat right-hand segment.
        double v = level_at_hot_end;
        for (std::size_t j = 3; j >= 1; --j) {
            const double lo = breakpoints[j - 1];
            const double hi = breakpoints[j];
            if (t < hi) v += slopes[j] * (std::max(t, lo) - hi);
        }
        if (t < breakpoints[0]) v += slopes[0] * (t - breakpoints[0]);
        return v;
    }

    // Zero-mean weekly profile: morning and evening peaks plus a weekend dip.
    static double social_component(std::size_t how) {
        const double hour = static_cast<double>(how % 24);
        const std::size_t day = how / 24;
        const double daily = -6.0 * std::sin(2.0 * std::numbers::pi * (hour - warmest_hour) / 24.0) +
                             2.0 * std::sin(4.0 * std::numbers::pi * (hour - warmest_hour) / 24.0);
        const double weekend = day >= 5 ? -3.0 : 0.0;
        constexpr double weekend_mean = -3.0 * 2.0 / 7.0;
        return daily + weekend - weekend_mean;
    }

    static double counter_scale(std::size_t c) { return 1.0 + 0.5 * static_cast<double>(c); }

    // Noise-free reading of counter index c (0-based, "sum" excluded).
    static double value(std::size_t c, double temperature, std::size_t how) {
        return counter_scale(c) * (temperature_component(temperature) + social_component(how));
    }
};

inline std::string synthetic_counter_id(std::size_t c) { return std::to_string(c + 1); }

inline RawDataset generate_synthetic(const GeneratorConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> oktas(0, 8);

    RawDataset ds;
    for (std::size_t c = 0; c < cfg.counters; ++c) ds.counters.push_back(synthetic_counter_id(c));
    ds.counters.emplace_back(kSumCounter);
    ds.rows.reserve(cfg.hours * (cfg.counters + 1));

    constexpr double ar = 0.95;
    const double innovation = cfg.temp_noise * std::sqrt(1.0 - ar * ar);
    double temp_noise = cfg.temp_noise * normal(rng);
    for (std::size_t k = 0; k < cfg.hours; ++k) {
        const Timestamp ts = add_hours(cfg.start, static_cast<std::int64_t>(k));
        using namespace std::chrono;
        const auto day = floor<days>(ts);
        const year_month_day ymd{day};
        const double doy = static_cast<double>((day - sys_days{ymd.year() / January / 1}).count());
        const double hour = static_cast<double>(duration_cast<hours>(ts - day).count());

        if (k > 0) temp_noise = ar * temp_noise + innovation * normal(rng);
        WeatherRecord w;
        w.temperature = cfg.temp_mean -
                        cfg.temp_annual_amplitude * std::cos(2.0 * std::numbers::pi * (doy - 20.0) / 365.25) +
                        cfg.temp_daily_amplitude * std::cos(2.0 * std::numbers::pi * (hour - SyntheticTruth::warmest_hour) / 24.0) +
                        temp_noise;
        w.wind_speed = std::abs(3.0 + 2.0 * normal(rng));
        w.humidity = std::clamp(75.0 + 15.0 * normal(rng), 5.0, 100.0);
        w.overcast = oktas(rng);
        w.day_type = day_type_of(ts);
        w.season = season_of(ts);
        w.day_length = day_length_hours(ts, cfg.latitude);

        const std::size_t how = hour_of_week(ts);
        double total = 0.0;
        for (std::size_t c = 0; c < cfg.counters; ++c) {
            double y = SyntheticTruth::value(c, w.temperature, how);
            if (cfg.sigma > 0.0) {
                y += SyntheticTruth::counter_scale(c) * cfg.sigma * normal(rng);
                y = std::max(0.0, y);
            }
            total += y;
            ds.rows.push_back({ts, synthetic_counter_id(c), y, w});
        }
        ds.rows.push_back({ts, std::string(kSumCounter), total, w});
    }
    return ds;
}

}  // namespace dhf
