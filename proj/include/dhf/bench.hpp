#pragma once

// Rolling-origin evaluation: fit each (algorithm, counter) once on the
// training interval, forecast 72 hours from every origin of the test
// interval, score MAPE/MSE, time fitting and prediction, and summarize.

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "dhf/algorithms.hpp"
#include "dhf/core.hpp"
#include "dhf/ingest.hpp"
#include "dhf/models.hpp"
#include "dhf/regress.hpp"

namespace dhf {

// ---------------------------------------------------------------------------
// Metrics. Cells whose actual value is not > 0 (zero, negative or NaN) are
// excluded from both metrics so they share one mask.

struct ErrorScore {
    double value = 0.0;
    std::size_t scored = 0;
    std::size_t excluded = 0;
};

namespace detail {

template <class Term>
ErrorScore masked_mean(std::span<const double> pred, std::span<const double> actual, Term term,
                       const char* what) {
    if (pred.size() != actual.size()) throw ValidationError(std::string(what) + ": length mismatch");
    ErrorScore s;
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!(actual[i] > 0.0)) {
            ++s.excluded;
            continue;
        }
        sum += term(pred[i], actual[i]);
        ++s.scored;
    }
    if (s.scored == 0) throw ValidationError(std::string(what) + ": no scorable cells");
    s.value = sum / static_cast<double>(s.scored);
    return s;
}

}  // namespace detail

inline ErrorScore mape(std::span<const double> pred, std::span<const double> actual) {
    return detail::masked_mean(
        pred, actual, [](double p, double a) { return 100.0 * std::abs(a - p) / a; }, "mape");
}

inline ErrorScore mse(std::span<const double> pred, std::span<const double> actual) {
    return detail::masked_mean(
        pred, actual, [](double p, double a) { return (a - p) * (a - p); }, "mse");
}

struct Quartiles {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

inline Quartiles quartiles(std::span<const double> values) {
    if (values.empty()) throw ValidationError("quartiles of an empty sample");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    return {interpolated_quantile(v, 0.25), interpolated_quantile(v, 0.5), interpolated_quantile(v, 0.75)};
}

struct ParetoPoint {
    std::string name;
    double time = 0.0;
    double quality = 0.0;
};

// Names of the points no other point dominates (lower is better on both
// axes, at least one strictly). Identical points keep each other. Output
// follows input order.
inline std::vector<std::string> nondominated(std::span<const ParetoPoint> points) {
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].time != points[b].time) return points[a].time < points[b].time;
        return points[a].quality < points[b].quality;
    });
    // Sweep by increasing time; a point survives if its quality beats every
    // point with strictly smaller time, and equals the best among its own time.
    std::vector<std::uint8_t> keep(points.size(), 0);
    double best_before = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        const double t = points[order[i]].time;
        while (j < order.size() && points[order[j]].time == t) ++j;
        const double group_best = points[order[i]].quality;
        if (group_best < best_before) {
            for (std::size_t k = i; k < j && points[order[k]].quality == group_best; ++k) keep[order[k]] = 1;
        }
        best_before = std::min(best_before, group_best);
        i = j;
    }
    std::vector<std::string> out;
    for (std::size_t k = 0; k < points.size(); ++k) {
        if (keep[k]) out.push_back(points[k].name);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Timing

using Clock = std::chrono::steady_clock;

template <class F>
double time_seconds(F&& f) {
    const auto t0 = Clock::now();
    f();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

template <class F>
double time_micros(F&& f) {
    const auto t0 = Clock::now();
    f();
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

inline constexpr std::size_t kMinTimedCalls = 100;

inline double median_of(std::vector<double> v) {
    if (v.empty()) throw ValidationError("median of an empty sample");
    std::sort(v.begin(), v.end());
    return interpolated_quantile(v, 0.5);
}

// Median wall time of `repeats` calls, in microseconds.
template <class F>
double median_call_micros(F&& f, std::size_t repeats = kMinTimedCalls) {
    std::vector<double> t(std::max<std::size_t>(repeats, 1));
    for (auto& x : t) x = time_micros(f);
    return median_of(std::move(t));
}

// ---------------------------------------------------------------------------
// Evaluation grid

inline constexpr std::size_t kEvalWarmup = kHoursPerWeek;

struct EvalGrid {
    Timestamp start{};                 // time of index 0 of the test view
    std::vector<std::size_t> origins;  // indices into the test view
    std::size_t horizon = kHorizon;

    std::size_t size() const { return origins.size(); }
    Timestamp time_at(std::size_t i) const { return add_hours(start, static_cast<std::int64_t>(origins[i])); }
};

// Every hour of the view's interval with `warmup` earlier hours and a full
// horizon inside the view.
inline EvalGrid make_grid(const CleanDataset& test_view, std::size_t warmup = kEvalWarmup) {
    EvalGrid g;
    g.start = test_view.start;
    const std::size_t first = test_view.lead_in;
    const std::size_t last = test_view.lead_in + test_view.interval_hours();
    for (std::size_t k = first; k < last; ++k) {
        if (k + 1 < warmup || k + kHorizon >= test_view.hours) continue;
        g.origins.push_back(k);
    }
    return g;
}

// Origin k counts for a counter only when its trailing week is fully valid,
// which covers the warm-up of every algorithm, so all algorithms are scored
// on the same cells.
inline bool origin_eligible(const HourlySeries& s, std::size_t k, std::size_t warmup = kEvalWarmup) {
    return trailing_window_valid(s, k, warmup);
}

// ---------------------------------------------------------------------------
// Report

inline constexpr int kReportSchemaVersion = 1;

struct ScoreCard {
    std::string algorithm;
    std::string counter;
    bool ok = false;
    std::string error;
    double mape = std::numeric_limits<double>::quiet_NaN();       // percent
    double mse = std::numeric_limits<double>::quiet_NaN();        // kWh^2
    double train_time_s = std::numeric_limits<double>::quiet_NaN();
    double predict_time_us = std::numeric_limits<double>::quiet_NaN();      // median per 72-hour forecast
    double predict_time_max_us = std::numeric_limits<double>::quiet_NaN();  // slowest timed forecast
    std::size_t origins = 0;
    std::size_t scored_cells = 0;
    std::size_t excluded_cells = 0;
};

struct AlgorithmSummary {
    std::string algorithm;
    std::size_t counters_ok = 0;
    std::size_t counters_failed = 0;
    std::size_t excluded_cells = 0;
    // Across counters with a successful fit.
    Quartiles mape, mse, train_time_s, predict_time_us;
    // Median over every timed forecast call of every counter.
    double predict_time_all_calls_us = std::numeric_limits<double>::quiet_NaN();
};

struct Machine {
    std::string hostname;
    std::string cpu;
    unsigned hardware_threads = 0;
    std::string compiler;
};

inline Machine describe_machine() {
    Machine m;
    char host[256] = {};
    if (gethostname(host, sizeof host - 1) == 0) m.hostname = host;
    std::ifstream cpuinfo("/proc/cpuinfo");
    for (std::string line; std::getline(cpuinfo, line);) {
        if (line.rfind("model name", 0) == 0) {
            const auto colon = line.find(':');
            if (colon != std::string::npos) m.cpu = line.substr(std::min(line.size(), colon + 2));
            break;
        }
    }
    m.hardware_threads = std::thread::hardware_concurrency();
#if defined(__clang__)
    m.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
    m.compiler = "gcc " __VERSION__;
#else
    m.compiler = "unknown";
#endif
    return m;
}

inline const std::array<std::string_view, 4> kParetoAxes{"train_mape", "train_mse", "predict_mape", "predict_mse"};

struct BenchReport {
    int schema_version = kReportSchemaVersion;
    Machine machine;
    std::string train_interval;
    std::string test_interval;
    std::size_t grid_origins = 0;
    std::vector<ScoreCard> scorecards;
    std::vector<AlgorithmSummary> summaries;
    std::map<std::string, std::vector<std::string>> nondominated;  // keyed by kParetoAxes
    std::size_t failures = 0;
};

inline std::string pareto_key(std::string_view time_axis, std::string_view quality_axis) {
    if (time_axis != "train" && time_axis != "predict") {
        throw ValidationError("time axis must be 'train' or 'predict'");
    }
    if (quality_axis != "mape" && quality_axis != "mse") {
        throw ValidationError("quality axis must be 'mape' or 'mse'");
    }
    return std::string(time_axis) + "_" + std::string(quality_axis);
}

// Nondominated algorithms on per-algorithm medians; algorithms without a
// successful counter are left out.
inline std::vector<std::string> pareto_from_summaries(const std::vector<AlgorithmSummary>& summaries,
                                                      std::string_view time_axis, std::string_view quality_axis) {
    pareto_key(time_axis, quality_axis);
    std::vector<ParetoPoint> pts;
    for (const auto& s : summaries) {
        if (s.counters_ok == 0) continue;
        pts.push_back({s.algorithm, time_axis == "train" ? s.train_time_s.median : s.predict_time_us.median,
                       quality_axis == "mape" ? s.mape.median : s.mse.median});
    }
    return nondominated(pts);
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }
inline double number_from(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}
inline json quartiles_json(const Quartiles& q) {
    return {{"q1", number_or_null(q.q1)}, {"median", number_or_null(q.median)}, {"q3", number_or_null(q.q3)}};
}
inline Quartiles quartiles_from(const json& j) {
    return {number_from(j.at("q1")), number_from(j.at("median")), number_from(j.at("q3"))};
}

}  // namespace detail

inline nlohmann::json report_to_json(const BenchReport& r) {
    using detail::json;
    using detail::number_or_null;
    json cards = json::array();
    for (const auto& c : r.scorecards) {
        cards.push_back({{"algorithm", c.algorithm},
                         {"counter", c.counter},
                         {"ok", c.ok},
                         {"error", c.error},
                         {"mape", number_or_null(c.mape)},
                         {"mse", number_or_null(c.mse)},
                         {"train_time_s", number_or_null(c.train_time_s)},
                         {"predict_time_us", number_or_null(c.predict_time_us)},
                         {"predict_time_max_us", number_or_null(c.predict_time_max_us)},
                         {"origins", c.origins},
                         {"scored_cells", c.scored_cells},
                         {"excluded_cells", c.excluded_cells}});
    }
    json sums = json::array();
    for (const auto& s : r.summaries) {
        sums.push_back({{"algorithm", s.algorithm},
                        {"counters_ok", s.counters_ok},
                        {"counters_failed", s.counters_failed},
                        {"excluded_cells", s.excluded_cells},
                        {"mape", detail::quartiles_json(s.mape)},
                        {"mse", detail::quartiles_json(s.mse)},
                        {"train_time_s", detail::quartiles_json(s.train_time_s)},
                        {"predict_time_us", detail::quartiles_json(s.predict_time_us)},
                        {"predict_time_all_calls_us", number_or_null(s.predict_time_all_calls_us)}});
    }
    return {{"schema_version", r.schema_version},
            {"machine",
             {{"hostname", r.machine.hostname},
              {"cpu", r.machine.cpu},
              {"hardware_threads", r.machine.hardware_threads},
              {"compiler", r.machine.compiler}}},
            {"train_interval", r.train_interval},
            {"test_interval", r.test_interval},
            {"grid_origins", r.grid_origins},
            {"failures", r.failures},
            {"scorecards", cards},
            {"summaries", sums},
            {"nondominated", r.nondominated}};
}

inline BenchReport report_from_json(const nlohmann::json& j) {
    using detail::number_from;
    BenchReport r;
    r.schema_version = j.at("schema_version").get<int>();
    if (r.schema_version != kReportSchemaVersion) {
        throw DataError("unsupported report schema version " + std::to_string(r.schema_version));
    }
    const auto& m = j.at("machine");
    r.machine = {m.at("hostname").get<std::string>(), m.at("cpu").get<std::string>(),
                 m.at("hardware_threads").get<unsigned>(), m.at("compiler").get<std::string>()};
    r.train_interval = j.at("train_interval").get<std::string>();
    r.test_interval = j.at("test_interval").get<std::string>();
    r.grid_origins = j.at("grid_origins").get<std::size_t>();
    r.failures = j.at("failures").get<std::size_t>();
    for (const auto& c : j.at("scorecards")) {
        ScoreCard s;
        s.algorithm = c.at("algorithm").get<std::string>();
        s.counter = c.at("counter").get<std::string>();
        s.ok = c.at("ok").get<bool>();
        s.error = c.at("error").get<std::string>();
        s.mape = number_from(c.at("mape"));
        s.mse = number_from(c.at("mse"));
        s.train_time_s = number_from(c.at("train_time_s"));
        s.predict_time_us = number_from(c.at("predict_time_us"));
        s.predict_time_max_us = number_from(c.at("predict_time_max_us"));
        s.origins = c.at("origins").get<std::size_t>();
        s.scored_cells = c.at("scored_cells").get<std::size_t>();
        s.excluded_cells = c.at("excluded_cells").get<std::size_t>();
        r.scorecards.push_back(std::move(s));
    }
    for (const auto& c : j.at("summaries")) {
        AlgorithmSummary s;
        s.algorithm = c.at("algorithm").get<std::string>();
        s.counters_ok = c.at("counters_ok").get<std::size_t>();
        s.counters_failed = c.at("counters_failed").get<std::size_t>();
        s.excluded_cells = c.at("excluded_cells").get<std::size_t>();
        s.mape = detail::quartiles_from(c.at("mape"));
        s.mse = detail::quartiles_from(c.at("mse"));
        s.train_time_s = detail::quartiles_from(c.at("train_time_s"));
        s.predict_time_us = detail::quartiles_from(c.at("predict_time_us"));
        s.predict_time_all_calls_us = number_from(c.at("predict_time_all_calls_us"));
        r.summaries.push_back(std::move(s));
    }
    r.nondominated = j.at("nondominated").get<std::map<std::string, std::vector<std::string>>>();
    return r;
}

inline void write_report(const std::string& path, const BenchReport& r) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write report '" + path + "'");
    out << report_to_json(r).dump(2) << '\n';
}

inline BenchReport read_report(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open report '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report '" + path + "' is not valid JSON: " + e.what());
    }
    try {
        return report_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("report '" + path + "' is malformed: " + e.what());
    }
}

// One row per algorithm with Q1/median/Q3 of every axis.
inline void write_plot_csv(const std::string& path, const BenchReport& r) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << "algorithm,counters_ok";
    for (const char* axis : {"mape", "mse", "train_time_s", "predict_time_us"}) {
        out << ',' << axis << "_q1," << axis << "_median," << axis << "_q3";
    }
    out << '\n';
    const auto f = [](double v) { return std::isfinite(v) ? detail::format_double(v) : std::string(); };
    for (const auto& s : r.summaries) {
        out << s.algorithm << ',' << s.counters_ok;
        for (const Quartiles* q : {&s.mape, &s.mse, &s.train_time_s, &s.predict_time_us}) {
            out << ',' << f(q->q1) << ',' << f(q->median) << ',' << f(q->q3);
        }
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// evaluate

using FitFunction = std::function<std::unique_ptr<TrainedForecaster>(const CleanDataset& train,
                                                                     const std::string& counter_id)>;

struct AlgorithmSpec {
    std::string name;
    FitFunction fit;
};

inline AlgorithmSpec standard_algorithm(Algorithm algo, FitOptions opts = {}) {
    return {std::string(algorithm_name(algo)), [algo, opts](const CleanDataset& train, const std::string& id) {
                return fit_algorithm(algo, train, id, opts);
            }};
}

struct EvalOptions {
    std::vector<std::string> counters;  // empty: every counter of the dataset
    std::size_t jobs = 1;
    std::size_t min_timed_calls = kMinTimedCalls;
    std::function<void(const ScoreCard&)> progress;
};

namespace detail {

struct CardTiming {
    std::vector<double> calls_us;
};

inline ScoreCard score_one(const AlgorithmSpec& spec, const CleanDataset& train, const CleanDataset& test,
                           const EvalGrid& grid, const std::string& counter, std::size_t min_calls,
                           std::mutex& timing_lock, CardTiming& timing) {
    ScoreCard card;
    card.algorithm = spec.name;
    card.counter = counter;
    try {
        const HourlySeries& hist = test.counter(counter);
        std::vector<std::size_t> origins;
        for (std::size_t k : grid.origins) {
            if (origin_eligible(hist, k)) origins.push_back(k);
        }
        card.origins = origins.size();
        if (origins.empty()) throw ValidationError("no eligible forecast origins");

        std::unique_ptr<TrainedForecaster> model;
        std::vector<ForecastWindow> windows(origins.size());
        {
            std::lock_guard<std::mutex> lock(timing_lock);
            card.train_time_s = time_seconds([&] { model = spec.fit(train, counter); });
            timing.calls_us.reserve(std::max(origins.size(), min_calls));
            for (std::size_t i = 0; i < origins.size(); ++i) {
                const ForecastInput in{hist, test.weather, hist.time_at(origins[i])};
                timing.calls_us.push_back(time_micros([&] { windows[i] = model->predict(in); }));
            }
            // Short grids are cycled until enough calls are timed.
            for (std::size_t i = 0; timing.calls_us.size() < min_calls; ++i) {
                const ForecastInput in{hist, test.weather, hist.time_at(origins[i % origins.size()])};
                ForecastWindow w;
                timing.calls_us.push_back(time_micros([&] { w = model->predict(in); }));
            }
        }
        card.predict_time_us = median_of(timing.calls_us);
        card.predict_time_max_us = *std::max_element(timing.calls_us.begin(), timing.calls_us.end());

        std::vector<double> pred, actual;
        pred.reserve(origins.size() * kHorizon);
        actual.reserve(origins.size() * kHorizon);
        for (std::size_t i = 0; i < origins.size(); ++i) {
            for (std::size_t p = 1; p <= kHorizon; ++p) {
                const std::size_t q = origins[i] + p;
                pred.push_back(windows[i].values[p - 1]);
                actual.push_back(hist.is_valid(q) ? hist.values[q] : std::numeric_limits<double>::quiet_NaN());
            }
        }
        const ErrorScore m = mape(pred, actual);
        const ErrorScore s = mse(pred, actual);
        card.mape = m.value;
        card.mse = s.value;
        card.scored_cells = m.scored;
        card.excluded_cells = m.excluded;
        card.ok = true;
    } catch (const std::exception& e) {
        card = ScoreCard{spec.name, counter, false, e.what()};
        card.origins = 0;
        timing.calls_us.clear();
    }
    return card;
}

}  // namespace detail

inline void summarize(BenchReport& r, const std::vector<std::vector<double>>& call_times) {
    r.summaries.clear();
    r.failures = 0;
    std::vector<std::string> order;
    for (const auto& c : r.scorecards) {
        if (std::find(order.begin(), order.end(), c.algorithm) == order.end()) order.push_back(c.algorithm);
    }
    for (const auto& name : order) {
        AlgorithmSummary s;
        s.algorithm = name;
        std::vector<double> mp, ms, tt, pt, calls;
        for (std::size_t i = 0; i < r.scorecards.size(); ++i) {
            const auto& c = r.scorecards[i];
            if (c.algorithm != name) continue;
            if (!c.ok) {
                ++s.counters_failed;
                continue;
            }
            ++s.counters_ok;
            s.excluded_cells += c.excluded_cells;
            mp.push_back(c.mape);
            ms.push_back(c.mse);
            tt.push_back(c.train_time_s);
            pt.push_back(c.predict_time_us);
            if (i < call_times.size()) calls.insert(calls.end(), call_times[i].begin(), call_times[i].end());
        }
        constexpr double nan = std::numeric_limits<double>::quiet_NaN();
        const Quartiles none{nan, nan, nan};
        s.mape = mp.empty() ? none : quartiles(mp);
        s.mse = ms.empty() ? none : quartiles(ms);
        s.train_time_s = tt.empty() ? none : quartiles(tt);
        s.predict_time_us = pt.empty() ? none : quartiles(pt);
        s.predict_time_all_calls_us = calls.empty() ? nan : median_of(std::move(calls));
        r.failures += s.counters_failed;
        r.summaries.push_back(std::move(s));
    }
    r.nondominated.clear();
    for (std::string_view t : {"train", "predict"}) {
        for (std::string_view q : {"mape", "mse"}) {
            r.nondominated[pareto_key(t, q)] = pareto_from_summaries(r.summaries, t, q);
        }
    }
}

inline BenchReport evaluate(const std::vector<AlgorithmSpec>& algorithms, const CleanDataset& data,
                            const Interval& train_interval, const Interval& test_interval,
                            const EvalOptions& opts = {}) {
    if (algorithms.empty()) throw ValidationError("no algorithms to evaluate");
    if (test_interval.hours() < kHorizon) {
        throw ValidationError("test interval must span at least " + std::to_string(kHorizon) + " hours");
    }
    const SplitViews views = split(data, train_interval, test_interval);
    const EvalGrid grid = make_grid(views.test);
    if (grid.size() == 0) throw ValidationError("the test interval has no forecast origin with a full horizon");

    std::vector<std::string> counters = opts.counters;
    if (counters.empty()) {
        for (const auto& c : data.counters) counters.push_back(c.counter_id);
    }
    for (const auto& c : counters) {
        if (!data.has_counter(c)) throw ValidationError("unknown counter '" + c + "'");
    }

    BenchReport report;
    report.machine = describe_machine();
    report.train_interval = format_timestamp(train_interval.start) + "/" + format_timestamp(train_interval.end);
    report.test_interval = format_timestamp(test_interval.start) + "/" + format_timestamp(test_interval.end);
    report.grid_origins = grid.size();

    const std::size_t tasks = algorithms.size() * counters.size();
    report.scorecards.resize(tasks);
    std::vector<detail::CardTiming> timings(tasks);
    std::mutex timing_lock, progress_lock;
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t t; (t = next.fetch_add(1)) < tasks;) {
            const auto& spec = algorithms[t / counters.size()];
            const auto& counter = counters[t % counters.size()];
            report.scorecards[t] = detail::score_one(spec, views.train, views.test, grid, counter,
                                                     opts.min_timed_calls, timing_lock, timings[t]);
            if (opts.progress) {
                std::lock_guard<std::mutex> lock(progress_lock);
                opts.progress(report.scorecards[t]);
            }
        }
    };
    const std::size_t jobs = std::clamp<std::size_t>(opts.jobs, 1, std::max<std::size_t>(tasks, 1));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    std::vector<std::vector<double>> call_times(tasks);
    for (std::size_t t = 0; t < tasks; ++t) call_times[t] = std::move(timings[t].calls_us);
    summarize(report, call_times);
    return report;
}

}  // namespace dhf
