#pragma once

// Classical forecasters behind one interface: the Dotzauer decomposition
// (temperature component + social correction), the hour-of-week W-regressors
// over a 168-hour moving average, and the 100-hour moving-average baseline.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dhf/core.hpp"
#include "dhf/ingest.hpp"
#include "dhf/model_io.hpp"
#include "dhf/regress.hpp"

namespace dhf {

enum class Algorithm {
    DLW, DLY, DPLW, DPLY, DSW, DSY, DIW, DIY, DMW, DMY,
    WRNH0, WRNH1, WRNH2, WRNH3, WRNH4,
    WRWH0, WRWH1, WRWH2, WRWH3, WRWH4,
    FFNN, RBFNN, C100,
};

inline constexpr std::array<Algorithm, 23> kAllAlgorithms{
    Algorithm::DLW,   Algorithm::DLY,   Algorithm::DPLW,  Algorithm::DPLY,  Algorithm::DSW,
    Algorithm::DSY,   Algorithm::DIW,   Algorithm::DIY,   Algorithm::DMW,   Algorithm::DMY,
    Algorithm::WRNH0, Algorithm::WRNH1, Algorithm::WRNH2, Algorithm::WRNH3, Algorithm::WRNH4,
    Algorithm::WRWH0, Algorithm::WRWH1, Algorithm::WRWH2, Algorithm::WRWH3, Algorithm::WRWH4,
    Algorithm::FFNN,  Algorithm::RBFNN, Algorithm::C100,
};

inline std::string_view algorithm_name(Algorithm a) {
    static constexpr std::array<std::string_view, 23> names{
        "DLW",   "DLY",   "DPLW",  "DPLY",  "DSW",   "DSY",   "DIW",   "DIY",
        "DMW",   "DMY",   "WRNH0", "WRNH1", "WRNH2", "WRNH3", "WRNH4", "WRWH0",
        "WRWH1", "WRWH2", "WRWH3", "WRWH4", "FFNN",  "RBFNN", "C100"};
    return names[static_cast<std::size_t>(a)];
}

inline Algorithm parse_algorithm(std::string_view name) {
    for (Algorithm a : kAllAlgorithms) {
        if (algorithm_name(a) == name) return a;
    }
    if (name == "C-100") return Algorithm::C100;
    throw ValidationError("unknown algorithm '" + std::string(name) + "'");
}

inline bool is_dotzauer(Algorithm a) { return static_cast<int>(a) <= static_cast<int>(Algorithm::DMY); }
inline bool is_wrnh(Algorithm a) {
    return a >= Algorithm::WRNH0 && a <= Algorithm::WRNH4;
}
inline bool is_wrwh(Algorithm a) {
    return a >= Algorithm::WRWH0 && a <= Algorithm::WRWH4;
}

// History and weather available when forecasting from `origin`. Only
// history readings at or before the origin are read; the weather frame must
// cover origin+1 .. origin+72.
struct ForecastInput {
    const HourlySeries& history;
    const WeatherFrame& weather;
    Timestamp origin;

    std::size_t origin_index() const {
        require_aligned(origin);
        const std::int64_t k = history.index_of(origin);
        if (k < 0) throw WarmupError("forecast origin lies outside the supplied history");
        return static_cast<std::size_t>(k);
    }

    const WeatherRecord& weather_at(std::size_t lead) const {
        const WeatherRecord* r = weather.find(add_hours(origin, static_cast<std::int64_t>(lead)));
        if (r == nullptr) {
            throw DataError("weather forecast missing for " +
                            format_timestamp(add_hours(origin, static_cast<std::int64_t>(lead))));
        }
        return *r;
    }
};

class TrainedForecaster {
public:
    virtual ~TrainedForecaster() = default;

    virtual Algorithm algorithm() const = 0;
    // Trailing valid readings needed before an origin.
    virtual std::size_t warmup_hours() const = 0;
    virtual ForecastWindow predict(const ForecastInput& in) const = 0;
    virtual void save(ModelWriter& out) const = 0;

    const std::string& counter_id() const { return counter_id_; }

protected:
    explicit TrainedForecaster(std::string counter_id) : counter_id_(std::move(counter_id)) {}

private:
    std::string counter_id_;
};

// ---------------------------------------------------------------------------
// Dotzauer decomposition Y = f(weather) + g(calendar slot)

enum class TemperatureVariant { Linear, PiecewiseLinear, Spline, Isotonic, Multivariate };
enum class SocialMode { Weekly, Yearly };

struct LinearTemperature {
    LinearModel model;  // one coefficient, on T
};
struct MultivariateTemperature {
    LinearModel model;  // on weather_features(., FSM)
};

using TemperatureComponent =
    std::variant<LinearTemperature, PiecewiseLinear, CubicSpline, IsotonicFit, MultivariateTemperature>;

inline double evaluate(const TemperatureComponent& f, const WeatherRecord& w) {
    return std::visit(
        [&](const auto& c) -> double {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, LinearTemperature>) {
                return c.model.intercept + c.model.coefficients[0] * w.temperature;
            } else if constexpr (std::is_same_v<T, MultivariateTemperature>) {
                std::array<double, 10> x{};
                write_weather_features(w, FeatureSet::FSM, x.data());
                return c.model.predict(x.data());
            } else {
                return c(w.temperature);
            }
        },
        f);
}

struct SocialComponent {
    SocialMode mode = SocialMode::Weekly;
    std::vector<double> corrections;      // fallback already applied to unpopulated slots
    std::vector<std::uint8_t> populated;  // 0 marks a slot never seen in training

    static std::size_t slot_count(SocialMode m) {
        return m == SocialMode::Weekly ? kHoursPerWeek : kYearSlots;
    }
    std::size_t slot_of(Timestamp ts) const {
        return mode == SocialMode::Weekly ? hour_of_week(ts) : hour_of_year(ts);
    }
    double at(Timestamp ts) const { return corrections[slot_of(ts)]; }
};

struct DotzauerModel {
    TemperatureComponent temperature;
    SocialComponent social;

    double predict(const WeatherRecord& w, Timestamp ts) const {
        return evaluate(temperature, w) + social.at(ts);
    }
};

inline constexpr std::size_t kDotzauerMinHours = 2 * kHoursPerWeek;
inline constexpr int kTemperatureSegments = 5;

// Fits the temperature component on every valid (weather, reading) pair, then
// sets each social slot to the mean residual Y - f observed in it. Slots with
// no training data inherit the nearest earlier populated slot (cyclically).
inline DotzauerModel dotzauer_fit(const CleanDataset& train, std::string_view counter_id,
                                  TemperatureVariant variant, SocialMode mode) {
    const HourlySeries& s = train.counter(counter_id);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < s.size(); ++k) {
        if (s.is_valid(k)) idx.push_back(k);
    }
    if (idx.size() < kDotzauerMinHours) {
        throw FitError("Dotzauer fit needs at least " + std::to_string(kDotzauerMinHours) +
                       " valid hours, counter '" + std::string(counter_id) + "' has " +
                       std::to_string(idx.size()));
    }
    const std::size_t n = idx.size();
    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i] = train.weather.records[idx[i]].temperature;
        y[i] = s.values[idx[i]];
    }

    DotzauerModel m;
    switch (variant) {
        case TemperatureVariant::Linear: {
            const Eigen::Map<const Eigen::VectorXd> tv(t.data(), static_cast<Eigen::Index>(n));
            const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
            m.temperature = LinearTemperature{ols_fit(tv, yv)};
            break;
        }
        case TemperatureVariant::PiecewiseLinear:
            m.temperature = piecewise_fit(t, y, quantile_breakpoints(t, kTemperatureSegments));
            break;
        case TemperatureVariant::Spline:
            m.temperature = spline_fit(t, y, quantile_breakpoints(t, kTemperatureSegments));
            break;
        case TemperatureVariant::Isotonic:
            m.temperature = isotonic_fit(t, y);
            break;
        case TemperatureVariant::Multivariate: {
            constexpr std::size_t d = feature_count(FeatureSet::FSM);
            Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
            std::array<double, d> row{};
            for (std::size_t i = 0; i < n; ++i) {
                write_weather_features(train.weather.records[idx[i]], FeatureSet::FSM, row.data());
                for (std::size_t j = 0; j < d; ++j) {
                    X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
                }
            }
            const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(n));
            m.temperature = MultivariateTemperature{ols_fit(X, yv)};
            break;
        }
    }

    SocialComponent& g = m.social;
    g.mode = mode;
    const std::size_t slots = SocialComponent::slot_count(mode);
    std::vector<double> sum(slots, 0.0);
    std::vector<std::size_t> count(slots, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = idx[i];
        const std::size_t slot = g.slot_of(s.time_at(k));
        sum[slot] += y[i] - evaluate(m.temperature, train.weather.records[k]);
        ++count[slot];
    }
    g.corrections.assign(slots, 0.0);
    g.populated.assign(slots, 0);
    std::size_t last_populated = slots;
    for (std::size_t j = 0; j < slots; ++j) {
        if (count[j] > 0) {
            g.corrections[j] = sum[j] / static_cast<double>(count[j]);
            g.populated[j] = 1;
            last_populated = j;
        }
    }
    // Carry the previous populated value forward, wrapping from the end.
    double carry = g.corrections[last_populated];
    for (std::size_t j = 0; j < slots; ++j) {
        if (g.populated[j]) {
            carry = g.corrections[j];
        } else {
            g.corrections[j] = carry;
        }
    }
    return m;
}

inline ForecastWindow dotzauer_predict(const DotzauerModel& m, const ForecastInput& in) {
    ForecastWindow out;
    out.origin = in.origin;
    require_aligned(in.origin);
    for (std::size_t p = 1; p <= kHorizon; ++p) {
        const Timestamp ts = add_hours(in.origin, static_cast<std::int64_t>(p));
        out.values[p - 1] = std::max(0.0, m.predict(in.weather_at(p), ts));
    }
    return out;
}

inline std::pair<TemperatureVariant, SocialMode> dotzauer_variant(Algorithm a) {
    switch (a) {
        case Algorithm::DLW: return {TemperatureVariant::Linear, SocialMode::Weekly};
        case Algorithm::DLY: return {TemperatureVariant::Linear, SocialMode::Yearly};
        case Algorithm::DPLW: return {TemperatureVariant::PiecewiseLinear, SocialMode::Weekly};
        case Algorithm::DPLY: return {TemperatureVariant::PiecewiseLinear, SocialMode::Yearly};
        case Algorithm::DSW: return {TemperatureVariant::Spline, SocialMode::Weekly};
        case Algorithm::DSY: return {TemperatureVariant::Spline, SocialMode::Yearly};
        case Algorithm::DIW: return {TemperatureVariant::Isotonic, SocialMode::Weekly};
        case Algorithm::DIY: return {TemperatureVariant::Isotonic, SocialMode::Yearly};
        case Algorithm::DMW: return {TemperatureVariant::Multivariate, SocialMode::Weekly};
        case Algorithm::DMY: return {TemperatureVariant::Multivariate, SocialMode::Yearly};
        default: throw ValidationError("not a Dotzauer algorithm");
    }
}

namespace detail {

inline void save_linear(ModelWriter& out, std::string_view prefix, const LinearModel& m) {
    const std::string p(prefix);
    out.numbers(p + ".coef", m.coefficients);
    out.number(p + ".intercept", m.intercept);
    out.number(p + ".regularized", m.regularized ? 1.0 : 0.0);
}

inline LinearModel load_linear(const ModelReader& in, std::string_view prefix) {
    const std::string p(prefix);
    LinearModel m;
    m.coefficients = in.numbers(p + ".coef");
    m.intercept = in.number(p + ".intercept");
    m.regularized = in.number(p + ".regularized") != 0.0;
    return m;
}

inline std::vector<double> to_doubles(const std::vector<std::uint8_t>& v) {
    return {v.begin(), v.end()};
}

}  // namespace detail

class DotzauerForecaster final : public TrainedForecaster {
public:
    DotzauerForecaster(Algorithm algo, std::string counter_id, DotzauerModel model)
        : TrainedForecaster(std::move(counter_id)), algo_(algo), model_(std::move(model)) {}

    Algorithm algorithm() const override { return algo_; }
    std::size_t warmup_hours() const override { return 0; }
    ForecastWindow predict(const ForecastInput& in) const override {
        return dotzauer_predict(model_, in);
    }
    const DotzauerModel& model() const { return model_; }

    void save(ModelWriter& out) const override {
        std::visit(
            [&](const auto& c) {
                using T = std::decay_t<decltype(c)>;
                if constexpr (std::is_same_v<T, LinearTemperature>) {
                    out.text("temperature", "linear");
                    detail::save_linear(out, "f", c.model);
                } else if constexpr (std::is_same_v<T, MultivariateTemperature>) {
                    out.text("temperature", "multivariate");
                    detail::save_linear(out, "f", c.model);
                } else if constexpr (std::is_same_v<T, PiecewiseLinear>) {
                    out.text("temperature", "piecewise");
                    out.numbers("f.breakpoints", c.breakpoints);
                    out.number("f.intercept", c.intercept);
                    out.number("f.slope", c.slope);
                    out.numbers("f.hinge_slopes", c.hinge_slopes);
                    out.number("f.regularized", c.regularized ? 1.0 : 0.0);
                } else if constexpr (std::is_same_v<T, CubicSpline>) {
                    out.text("temperature", "spline");
                    out.numbers("f.knots", c.knots);
                    std::vector<double> flat;
                    for (const auto& seg : c.segments) flat.insert(flat.end(), seg.begin(), seg.end());
                    out.numbers("f.segments", flat);
                    out.numbers("f.range", std::vector<double>{c.range_lo, c.range_hi});
                    out.number("f.regularized", c.regularized ? 1.0 : 0.0);
                } else {
                    out.text("temperature", "isotonic");
                    std::vector<double> flat;
                    for (const auto& b : c.blocks) {
                        flat.insert(flat.end(), {b.t_lo, b.t_hi, b.mean, b.weight});
                    }
                    out.numbers("f.blocks", flat);
                }
            },
            model_.temperature);
        out.text("social.mode", model_.social.mode == SocialMode::Weekly ? "weekly" : "yearly");
        out.numbers("social.corrections", model_.social.corrections);
        out.numbers("social.populated", detail::to_doubles(model_.social.populated));
    }

    static std::unique_ptr<DotzauerForecaster> load(Algorithm algo, std::string counter_id,
                                                    const ModelReader& in) {
        DotzauerModel m;
        const std::string& kind = in.text("temperature");
        if (kind == "linear") {
            m.temperature = LinearTemperature{detail::load_linear(in, "f")};
        } else if (kind == "multivariate") {
            m.temperature = MultivariateTemperature{detail::load_linear(in, "f")};
        } else if (kind == "piecewise") {
            PiecewiseLinear f;
            f.breakpoints = in.numbers("f.breakpoints");
            f.intercept = in.number("f.intercept");
            f.slope = in.number("f.slope");
            f.hinge_slopes = in.numbers("f.hinge_slopes", f.breakpoints.size());
            f.regularized = in.number("f.regularized") != 0.0;
            m.temperature = std::move(f);
        } else if (kind == "spline") {
            CubicSpline f;
            f.knots = in.numbers("f.knots");
            const auto flat = in.numbers("f.segments", 4 * (f.knots.size() + 1));
            for (std::size_t j = 0; j < flat.size(); j += 4) {
                f.segments.push_back({flat[j], flat[j + 1], flat[j + 2], flat[j + 3]});
            }
            const auto range = in.numbers("f.range", 2);
            f.range_lo = range[0];
            f.range_hi = range[1];
            f.regularized = in.number("f.regularized") != 0.0;
            m.temperature = std::move(f);
        } else if (kind == "isotonic") {
            IsotonicFit f;
            const auto flat = in.numbers("f.blocks");
            if (flat.empty() || flat.size() % 4 != 0) throw DataError("bad isotonic block list");
            for (std::size_t j = 0; j < flat.size(); j += 4) {
                f.blocks.push_back({flat[j], flat[j + 1], flat[j + 2], flat[j + 3]});
            }
            m.temperature = std::move(f);
        } else {
            throw DataError("unknown temperature component '" + kind + "'");
        }
        const std::string& mode = in.text("social.mode");
        if (mode != "weekly" && mode != "yearly") throw DataError("unknown social mode");
        m.social.mode = mode == "weekly" ? SocialMode::Weekly : SocialMode::Yearly;
        const std::size_t slots = SocialComponent::slot_count(m.social.mode);
        m.social.corrections = in.numbers("social.corrections", slots);
        const auto pop = in.numbers("social.populated", slots);
        m.social.populated.assign(pop.begin(), pop.end());
        return std::make_unique<DotzauerForecaster>(algo, std::move(counter_id), std::move(m));
    }

private:
    Algorithm algo_;
    DotzauerModel model_;
};

// ---------------------------------------------------------------------------
// W-regressors: per-hour-of-week linear models on [a, W] where a is the
// 168-hour moving average of the counter's readings.

enum class HistoryMode { NH, WH };

inline constexpr std::size_t kWeekWindow = 168;
inline constexpr std::size_t kWrhModelCount = kHoursPerWeek * kHorizon;

struct WRegressor {
    HistoryMode mode = HistoryMode::NH;
    FeatureSet features = FeatureSet::FS0;
    std::size_t ma_window = kWeekWindow;
    // NH: indexed by the week-hour of the target hour.
    // WH: indexed by week-hour of the origin * 72 + (lead - 1).
    std::vector<LinearModel> models;

    const LinearModel& model_for(std::size_t origin_how, std::size_t target_how, std::size_t lead) const {
        return mode == HistoryMode::NH ? models[target_how] : models[origin_how * kHorizon + (lead - 1)];
    }
};

namespace detail {

inline LinearModel mean_model(double mean, std::size_t d) {
    LinearModel m;
    m.coefficients.assign(d, 0.0);
    m.intercept = mean;
    return m;
}

// Fits one bucket; fewer than two tuples fall back to the bucket mean, none
// to `global_mean`.
inline LinearModel fit_bucket(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double global_mean) {
    const auto n = X.rows();
    const auto d = static_cast<std::size_t>(X.cols());
    if (n == 0) return mean_model(global_mean, d);
    if (n < 2) return mean_model(y.mean(), d);
    return ols_fit(X, y);
}

}  // namespace detail

inline WRegressor wr_fit(const CleanDataset& train, std::string_view counter_id, HistoryMode mode,
                         FeatureSet fs) {
    const HourlySeries& s = train.counter(counter_id);
    const std::size_t n = s.size();
    const std::size_t dw = feature_count(fs);
    const std::size_t d = 1 + dw;
    const std::vector<double> a = rolling_means(s, kWeekWindow);

    std::vector<double> feat(n * dw);
    for (std::size_t k = 0; k < n; ++k) {
        write_weather_features(train.weather.records[k], fs, feat.data() + k * dw);
    }
    std::vector<std::size_t> how(n);
    for (std::size_t k = 0; k < n; ++k) how[k] = hour_of_week(s.time_at(k));

    WRegressor w;
    w.mode = mode;
    w.features = fs;

    // Tuples (a_j, W_q) -> Y_q grouped per bucket; q = j for NH, q = j + p for WH.
    const auto usable_origin = [&](std::size_t j) { return std::isfinite(a[j]); };
    const auto fill_row = [&](Eigen::MatrixXd& X, Eigen::Index r, std::size_t j, std::size_t q) {
        X(r, 0) = a[j];
        for (std::size_t c = 0; c < dw; ++c) X(r, static_cast<Eigen::Index>(1 + c)) = feat[q * dw + c];
    };

    std::array<std::vector<std::size_t>, kHoursPerWeek> origins;
    double total = 0.0;
    std::size_t total_n = 0;
    for (std::size_t j = 0; j < n; ++j) {
        if (!usable_origin(j)) continue;
        origins[how[j]].push_back(j);
    }

    if (mode == HistoryMode::NH) {
        std::array<Eigen::MatrixXd, kHoursPerWeek> Xs;
        std::array<Eigen::VectorXd, kHoursPerWeek> ys;
        for (std::size_t i = 0; i < kHoursPerWeek; ++i) {
            const auto& js = origins[i];  // a_j finite implies Y_j valid
            Xs[i].resize(static_cast<Eigen::Index>(js.size()), static_cast<Eigen::Index>(d));
            ys[i].resize(static_cast<Eigen::Index>(js.size()));
            for (std::size_t r = 0; r < js.size(); ++r) {
                fill_row(Xs[i], static_cast<Eigen::Index>(r), js[r], js[r]);
                ys[i][static_cast<Eigen::Index>(r)] = s.values[js[r]];
                total += s.values[js[r]];
                ++total_n;
            }
        }
        if (total_n == 0) throw FitError("W-regressor: no usable training tuples");
        const double global_mean = total / static_cast<double>(total_n);
        w.models.reserve(kHoursPerWeek);
        for (std::size_t i = 0; i < kHoursPerWeek; ++i) {
            w.models.push_back(detail::fit_bucket(Xs[i], ys[i], global_mean));
        }
        return w;
    }

    // WH: count first so the global fallback mean is known before fitting.
    for (std::size_t i = 0; i < kHoursPerWeek; ++i) {
        for (std::size_t j : origins[i]) {
            for (std::size_t p = 1; p <= kHorizon && j + p < n; ++p) {
                if (s.is_valid(j + p)) {
                    total += s.values[j + p];
                    ++total_n;
                }
            }
        }
    }
    if (total_n == 0) throw FitError("W-regressor: no usable training tuples");
    const double global_mean = total / static_cast<double>(total_n);
    w.models.resize(kWrhModelCount);
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    for (std::size_t i = 0; i < kHoursPerWeek; ++i) {
        const auto& js = origins[i];
        for (std::size_t p = 1; p <= kHorizon; ++p) {
            std::size_t rows = 0;
            for (std::size_t j : js) rows += (j + p < n && s.is_valid(j + p)) ? 1 : 0;
            X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
            y.resize(static_cast<Eigen::Index>(rows));
            Eigen::Index r = 0;
            for (std::size_t j : js) {
                const std::size_t q = j + p;
                if (q >= n || !s.is_valid(q)) continue;
                fill_row(X, r, j, q);
                y[r] = s.values[q];
                ++r;
            }
            w.models[i * kHorizon + (p - 1)] = detail::fit_bucket(X, y, global_mean);
        }
    }
    return w;
}

inline ForecastWindow wr_predict(const WRegressor& w, const ForecastInput& in) {
    const std::size_t t = in.origin_index();
    const double a = moving_average(in.history, t, w.ma_window);
    const std::size_t dw = feature_count(w.features);
    std::array<double, 11> x{};
    x[0] = a;
    const std::size_t origin_how = hour_of_week(in.origin);
    ForecastWindow out;
    out.origin = in.origin;
    for (std::size_t p = 1; p <= kHorizon; ++p) {
        write_weather_features(in.weather_at(p), w.features, x.data() + 1);
        const std::size_t target_how = (origin_how + p) % kHoursPerWeek;
        const LinearModel& m = w.model_for(origin_how, target_how, p);
        out.values[p - 1] = std::max(0.0, m.predict(std::span<const double>(x.data(), 1 + dw)));
    }
    return out;
}

inline std::pair<HistoryMode, FeatureSet> wr_variant(Algorithm a) {
    constexpr std::array<FeatureSet, 5> sets{FeatureSet::FS0, FeatureSet::FS1, FeatureSet::FS2,
                                             FeatureSet::FS3, FeatureSet::FS4};
    if (is_wrnh(a)) {
        return {HistoryMode::NH, sets[static_cast<std::size_t>(a) - static_cast<std::size_t>(Algorithm::WRNH0)]};
    }
    if (is_wrwh(a)) {
        return {HistoryMode::WH, sets[static_cast<std::size_t>(a) - static_cast<std::size_t>(Algorithm::WRWH0)]};
    }
    throw ValidationError("not a W-regressor algorithm");
}

class WRegressorForecaster final : public TrainedForecaster {
public:
    WRegressorForecaster(Algorithm algo, std::string counter_id, WRegressor model)
        : TrainedForecaster(std::move(counter_id)), algo_(algo), model_(std::move(model)) {}

    Algorithm algorithm() const override { return algo_; }
    std::size_t warmup_hours() const override { return model_.ma_window; }
    ForecastWindow predict(const ForecastInput& in) const override { return wr_predict(model_, in); }
    const WRegressor& model() const { return model_; }

    void save(ModelWriter& out) const override {
        out.text("wr.mode", model_.mode == HistoryMode::NH ? "NH" : "WH");
        out.text("wr.features", feature_set_name(model_.features));
        out.number("wr.ma_window", static_cast<double>(model_.ma_window));
        out.number("wr.count", static_cast<double>(model_.models.size()));
        const std::size_t d = 1 + feature_count(model_.features);
        std::vector<double> flat;
        flat.reserve(model_.models.size() * (d + 2));
        for (const auto& m : model_.models) {
            flat.insert(flat.end(), m.coefficients.begin(), m.coefficients.end());
            flat.push_back(m.intercept);
            flat.push_back(m.regularized ? 1.0 : 0.0);
        }
        out.numbers("wr.models", flat);
    }

    static std::unique_ptr<WRegressorForecaster> load(Algorithm algo, std::string counter_id,
                                                      const ModelReader& in) {
        WRegressor w;
        const std::string& mode = in.text("wr.mode");
        if (mode != "NH" && mode != "WH") throw DataError("unknown W-regressor mode");
        w.mode = mode == "NH" ? HistoryMode::NH : HistoryMode::WH;
        w.features = parse_feature_set(in.text("wr.features"));
        w.ma_window = static_cast<std::size_t>(in.number("wr.ma_window"));
        const auto count = static_cast<std::size_t>(in.number("wr.count"));
        if (count != (w.mode == HistoryMode::NH ? kHoursPerWeek : kWrhModelCount)) {
            throw DataError("W-regressor model count does not match its mode");
        }
        const std::size_t d = 1 + feature_count(w.features);
        const auto flat = in.numbers("wr.models", count * (d + 2));
        w.models.resize(count);
        for (std::size_t m = 0; m < count; ++m) {
            const double* p = flat.data() + m * (d + 2);
            w.models[m].coefficients.assign(p, p + d);
            w.models[m].intercept = p[d];
            w.models[m].regularized = p[d + 1] != 0.0;
        }
        return std::make_unique<WRegressorForecaster>(algo, std::move(counter_id), std::move(w));
    }

private:
    Algorithm algo_;
    WRegressor model_;
};

// ---------------------------------------------------------------------------
// C-100: every lead gets the mean of the last 100 readings.

inline constexpr std::size_t kC100Window = 100;

inline ForecastWindow c100_predict(const HourlySeries& history, Timestamp origin) {
    const std::int64_t t = history.index_of(origin);
    if (t < 0) throw WarmupError("forecast origin lies outside the supplied history");
    ForecastWindow out;
    out.origin = origin;
    out.values.fill(moving_average(history, static_cast<std::size_t>(t), kC100Window));
    return out;
}

class MovingAverageForecaster final : public TrainedForecaster {
public:
    explicit MovingAverageForecaster(std::string counter_id) : TrainedForecaster(std::move(counter_id)) {}

    Algorithm algorithm() const override { return Algorithm::C100; }
    std::size_t warmup_hours() const override { return kC100Window; }
    ForecastWindow predict(const ForecastInput& in) const override {
        require_aligned(in.origin);
        return c100_predict(in.history, in.origin);
    }
    void save(ModelWriter& out) const override {
        out.number("window", static_cast<double>(kC100Window));
    }
};

}  // namespace dhf
