#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "dhf/dhf.hpp"
#include "oracles.hpp"

using namespace dhf;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Reads the future straight out of the test view it is handed.
class Oracle final : public TrainedForecaster {
public:
    explicit Oracle(std::string id) : TrainedForecaster(std::move(id)) {}
    Algorithm algorithm() const override { return Algorithm::C100; }
    std::size_t warmup_hours() const override { return 0; }
    ForecastWindow predict(const ForecastInput& in) const override {
        const std::size_t t = in.origin_index();
        ForecastWindow w;
        w.origin = in.origin;
        for (std::size_t p = 1; p <= kHorizon; ++p) w.values[p - 1] = in.history.values.at(t + p);
        return w;
    }
    void save(ModelWriter&) const override {}
};

AlgorithmSpec oracle_spec() {
    return {"ORACLE", [](const CleanDataset&, const std::string& id) { return std::make_unique<Oracle>(id); }};
}

AlgorithmSpec failing_spec() {
    return {"BROKEN", [](const CleanDataset&, const std::string&) -> std::unique_ptr<TrainedForecaster> {
                throw FitError("deliberately broken");
            }};
}

struct Setup {
    CleanDataset data;
    Interval train, test;
};

// Five weeks: three to train, the test interval after them, and a horizon
// of slack at the end.
Setup small_setup(double sigma = 2.0, std::uint64_t seed = 1) {
    Setup s;
    s.data = fixture::synthetic(5 * 168, sigma, seed, 2, make_timestamp(2018, 1, 1));
    s.train = {s.data.start, add_hours(s.data.start, 3 * 168 - 1)};
    s.test = {add_hours(s.data.start, 3 * 168), add_hours(s.data.start, 5 * 168 - 73)};
    return s;
}

const ScoreCard& card(const BenchReport& r, std::string_view algo, std::string_view counter) {
    for (const auto& c : r.scorecards) {
        if (c.algorithm == algo && c.counter == counter) return c;
    }
    throw std::runtime_error("no such card");
}

}  // namespace

TEST(Metrics, MapeAndMseExamples) {
    const std::vector<double> pred{90, 110, 5, 7}, actual{100, 100, 0, kNaN};
    const auto m = mape(pred, actual);
    EXPECT_DOUBLE_EQ(m.value, 10.0);
    EXPECT_EQ(m.scored, 2u);
    EXPECT_EQ(m.excluded, 2u);
    const auto s = mse(pred, actual);
    EXPECT_DOUBLE_EQ(s.value, 100.0);
    EXPECT_EQ(s.scored, m.scored);
    EXPECT_THROW(mape(std::vector<double>{1}, std::vector<double>{0}), ValidationError);
    EXPECT_THROW(mse(std::vector<double>{1, 2}, std::vector<double>{1}), ValidationError);
}

TEST(Metrics, PerfectPredictionScoresZero) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(0.1, 100);
    std::vector<double> a(500);
    for (auto& v : a) v = u(rng);
    EXPECT_EQ(mape(a, a).value, 0.0);
    EXPECT_EQ(mse(a, a).value, 0.0);
}

TEST(Metrics, Quartiles) {
    const auto q = quartiles(std::vector<double>{4, 1, 3, 2});
    EXPECT_DOUBLE_EQ(q.q1, 1.75);
    EXPECT_DOUBLE_EQ(q.median, 2.5);
    EXPECT_DOUBLE_EQ(q.q3, 3.25);
    const auto one = quartiles(std::vector<double>{7});
    EXPECT_EQ(one.q1, 7.0);
    EXPECT_EQ(one.q3, 7.0);
    EXPECT_THROW(quartiles(std::vector<double>{}), ValidationError);
    std::mt19937 rng(2);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(1 + static_cast<std::size_t>(trial));
        for (auto& x : v) x = nd(rng);
        const auto r = quartiles(v);
        EXPECT_NEAR(r.q1, oracle::quantile(v, 0.25), 1e-12);
        EXPECT_NEAR(r.median, oracle::quantile(v, 0.5), 1e-12);
        EXPECT_NEAR(r.q3, oracle::quantile(v, 0.75), 1e-12);
    }
}

TEST(Pareto, Examples) {
    const std::vector<ParetoPoint> pts{{"A", 1, 5}, {"B", 2, 3}, {"C", 3, 4}, {"D", 2, 3}, {"E", 4, 1}};
    EXPECT_EQ(nondominated(pts), (std::vector<std::string>{"A", "B", "D", "E"}));
    EXPECT_TRUE(nondominated(std::vector<ParetoPoint>{}).empty());
    const std::vector<ParetoPoint> same_time{{"X", 1, 2}, {"Y", 1, 1}};
    EXPECT_EQ(nondominated(same_time), std::vector<std::string>{"Y"});
}

TEST(Pareto, MatchesBruteForce) {
    std::mt19937 rng(3);
    std::uniform_int_distribution<int> u(0, 6);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<ParetoPoint> pts;
        std::vector<oracle::Point> ref;
        for (int i = 0; i < 1 + trial % 15; ++i) {
            const double t = u(rng), q = u(rng);
            pts.push_back({std::to_string(i), t, q});
            ref.push_back({std::to_string(i), t, q});
        }
        EXPECT_EQ(nondominated(pts), oracle::brute_pareto(ref));
    }
}

TEST(Pareto, Keys) {
    EXPECT_EQ(pareto_key("train", "mape"), "train_mape");
    EXPECT_EQ(pareto_key("predict", "mse"), "predict_mse");
    EXPECT_THROW(pareto_key("fit", "mape"), ValidationError);
    EXPECT_THROW(pareto_key("train", "rmse"), ValidationError);
}

TEST(Timing, MeasuresElapsedTime) {
    const double us = time_micros([] { std::this_thread::sleep_for(std::chrono::milliseconds(3)); });
    EXPECT_GE(us, 3000.0);
    EXPECT_LT(us, 3e6);
    const double s = time_seconds([] { std::this_thread::sleep_for(std::chrono::milliseconds(3)); });
    EXPECT_GE(s, 0.003);
    EXPECT_DOUBLE_EQ(median_of({5, 1, 3}), 3.0);
    EXPECT_GE(median_call_micros([] {}, 10), 0.0);
}

TEST(Grid, OneOriginPerTestHour) {
    const auto data = fixture::synthetic(17544 + 1320 + 72, 1.0, 4, 1);
    const Interval train{data.start, add_hours(data.start, 17543)};
    const Interval test{add_hours(data.start, 17544), add_hours(data.start, 17544 + 1319)};
    const auto views = split(data, train, test);
    const auto grid = make_grid(views.test);
    EXPECT_EQ(grid.size(), 1320u);
    EXPECT_EQ(grid.time_at(0), test.start);
    EXPECT_EQ(grid.time_at(grid.size() - 1), test.end);
    for (std::size_t k : grid.origins) EXPECT_LT(k + kHorizon, views.test.hours);
}

TEST(Grid, DropsOriginsWithoutAFullHorizon) {
    const auto data = fixture::synthetic(1000, 1.0, 5, 1);
    const Interval train{data.start, add_hours(data.start, 499)};
    const Interval test{add_hours(data.start, 500), add_hours(data.start, 999)};
    const auto grid = make_grid(split(data, train, test).test);
    EXPECT_EQ(grid.size(), 500u - 72u);
}

TEST(Evaluate, PerfectForecasterScoresZero) {
    const auto s = small_setup();
    const auto r = evaluate({oracle_spec(), standard_algorithm(Algorithm::C100)}, s.data, s.train, s.test);
    EXPECT_EQ(r.grid_origins, 2u * 168u - 72u);
    for (const auto& c : r.scorecards) {
        ASSERT_TRUE(c.ok) << c.error;
        EXPECT_EQ(c.origins, r.grid_origins);
        EXPECT_EQ(c.scored_cells + c.excluded_cells, c.origins * kHorizon);
        if (c.algorithm == "ORACLE") {
            EXPECT_EQ(c.mape, 0.0);
            EXPECT_EQ(c.mse, 0.0);
        }
    }
    EXPECT_EQ(r.failures, 0u);
}

TEST(Evaluate, MovingAverageOnConstantSeriesScoresZero) {
    const std::size_t n = 5 * 168;
    std::vector<WeatherRecord> w;
    const Timestamp start = make_timestamp(2018, 1, 1);
    for (std::size_t k = 0; k < n; ++k) w.push_back(fixture::weather(2.0, add_hours(start, static_cast<std::int64_t>(k))));
    const auto data = fixture::dataset(start, w, {{"7", std::vector<double>(n, 7.0)}});
    const Interval train{start, add_hours(start, 3 * 168 - 1)};
    const Interval test{add_hours(start, 3 * 168), add_hours(start, n - 73)};
    const auto r = evaluate({standard_algorithm(Algorithm::C100)}, data, train, test);
    ASSERT_TRUE(r.scorecards[0].ok);
    EXPECT_EQ(r.scorecards[0].mape, 0.0);
    EXPECT_EQ(r.scorecards[0].mse, 0.0);
}

TEST(Evaluate, ResultsDoNotDependOnOrderOrThreads) {
    const auto s = small_setup(3.0, 6);
    const std::vector<AlgorithmSpec> fwd{standard_algorithm(Algorithm::DLW), standard_algorithm(Algorithm::WRNH0),
                                         standard_algorithm(Algorithm::C100)};
    const std::vector<AlgorithmSpec> rev{fwd[2], fwd[1], fwd[0]};
    EvalOptions o1;
    o1.counters = {"1", "2", "sum"};
    EvalOptions o2;
    o2.counters = {"sum", "2", "1"};
    o2.jobs = 3;
    const auto a = evaluate(fwd, s.data, s.train, s.test, o1);
    const auto b = evaluate(rev, s.data, s.train, s.test, o2);
    ASSERT_EQ(a.scorecards.size(), 9u);
    for (const auto& c : a.scorecards) {
        const auto& d = card(b, c.algorithm, c.counter);
        EXPECT_EQ(c.mape, d.mape);
        EXPECT_EQ(c.mse, d.mse);
        EXPECT_EQ(c.scored_cells, d.scored_cells);
    }
    EXPECT_EQ(a.summaries.size(), 3u);
}

TEST(Evaluate, AllAlgorithmsShareOneMask) {
    auto s = small_setup(2.0, 7);
    // Knock out a few readings so some origins and cells are skipped.
    for (std::size_t k : {600u, 610u, 700u}) s.data.counters[0].valid[k] = 0;
    const auto r = evaluate({standard_algorithm(Algorithm::DLW), standard_algorithm(Algorithm::WRWH4),
                             standard_algorithm(Algorithm::C100), oracle_spec()},
                            s.data, s.train, s.test);
    for (const std::string counter : {"1", "2"}) {
        const auto& ref = card(r, "DLW", counter);
        for (const auto& c : r.scorecards) {
            if (c.counter != counter) continue;
            ASSERT_TRUE(c.ok) << c.algorithm << ": " << c.error;
            EXPECT_EQ(c.origins, ref.origins);
            EXPECT_EQ(c.scored_cells, ref.scored_cells);
            EXPECT_EQ(c.excluded_cells, ref.excluded_cells);
        }
    }
    EXPECT_LT(card(r, "DLW", "1").origins, r.grid_origins);
    EXPECT_GT(card(r, "DLW", "1").excluded_cells, 0u);
}

TEST(Evaluate, FailedFitsBecomeNullCards) {
    const auto s = small_setup();
    EvalOptions opts;
    opts.counters = {"1"};
    const auto r = evaluate({failing_spec(), standard_algorithm(Algorithm::C100)}, s.data, s.train, s.test, opts);
    const auto& bad = card(r, "BROKEN", "1");
    EXPECT_FALSE(bad.ok);
    EXPECT_NE(bad.error.find("deliberately broken"), std::string::npos);
    EXPECT_TRUE(std::isnan(bad.mape));
    EXPECT_EQ(r.failures, 1u);
    const auto j = report_to_json(r);
    EXPECT_TRUE(j["scorecards"][0]["mape"].is_null());
    EXPECT_EQ(r.summaries[0].counters_failed, 1u);
    EXPECT_TRUE(std::isnan(r.summaries[0].mape.median));
    for (const auto& [key, names] : r.nondominated) {
        EXPECT_EQ(names, std::vector<std::string>{"C100"}) << key;
    }
}

TEST(Evaluate, RejectsBadIntervals) {
    const auto s = small_setup();
    const Interval short_test{s.test.start, add_hours(s.test.start, 70)};
    EXPECT_THROW(evaluate({oracle_spec()}, s.data, s.train, short_test), ValidationError);
    EXPECT_THROW(evaluate({oracle_spec()}, s.data, s.test, s.train), ValidationError);
    EvalOptions opts;
    opts.counters = {"nope"};
    EXPECT_THROW(evaluate({oracle_spec()}, s.data, s.train, s.test, opts), ValidationError);
}

TEST(Evaluate, TimesEveryCallAndCyclesShortGrids) {
    const auto s = small_setup();
    EvalOptions opts;
    opts.counters = {"1"};
    opts.min_timed_calls = 250;
    std::size_t progress_calls = 0;
    opts.progress = [&](const ScoreCard&) { ++progress_calls; };
    const auto r = evaluate({standard_algorithm(Algorithm::C100)}, s.data, s.train, s.test, opts);
    const auto& c = r.scorecards[0];
    EXPECT_EQ(progress_calls, 1u);
    EXPECT_GE(c.train_time_s, 0.0);
    EXPECT_GT(c.predict_time_us, 0.0);
    EXPECT_GE(c.predict_time_max_us, c.predict_time_us);
    EXPECT_FALSE(std::isnan(r.summaries[0].predict_time_all_calls_us));
}

TEST(Report, JsonRoundTrip) {
    const auto s = small_setup();
    EvalOptions opts;
    opts.counters = {"1", "sum"};
    const auto r = evaluate({failing_spec(), standard_algorithm(Algorithm::DLW), standard_algorithm(Algorithm::C100)},
                            s.data, s.train, s.test, opts);
    const auto path = (std::filesystem::temp_directory_path() / "dhf_report_test.json").string();
    write_report(path, r);
    const auto back = read_report(path);
    EXPECT_EQ(report_to_json(back).dump(), report_to_json(r).dump());
    EXPECT_EQ(back.schema_version, 1);
    EXPECT_EQ(back.scorecards.size(), 6u);
    EXPECT_EQ(back.nondominated.size(), 4u);
    for (std::string_view key : kParetoAxes) EXPECT_TRUE(back.nondominated.count(std::string(key)));
    std::filesystem::remove(path);

    std::ofstream(path) << "{\"schema_version\": 2}";
    EXPECT_THROW(read_report(path), DataError);
    std::ofstream(path) << "not json";
    EXPECT_THROW(read_report(path), DataError);
    std::filesystem::remove(path);
}

TEST(Report, PlotCsvHasOneRowPerAlgorithm) {
    const auto s = small_setup();
    EvalOptions opts;
    opts.counters = {"1", "2"};
    const auto r = evaluate({standard_algorithm(Algorithm::DLW), standard_algorithm(Algorithm::C100)}, s.data,
                            s.train, s.test, opts);
    const auto path = (std::filesystem::temp_directory_path() / "dhf_plot_test.csv").string();
    write_plot_csv(path, r);
    std::ifstream in(path);
    std::vector<std::string> lines;
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    ASSERT_EQ(lines.size(), 3u);
    EXPECT_EQ(lines[0].rfind("algorithm,counters_ok,mape_q1,mape_median,mape_q3,mse_q1", 0), 0u);
    EXPECT_EQ(lines[1].rfind("DLW,2,", 0), 0u);
    EXPECT_EQ(lines[2].rfind("C100,2,", 0), 0u);
    EXPECT_EQ(std::count(lines[1].begin(), lines[1].end(), ','), 13);
    std::filesystem::remove(path);
}

TEST(Report, SummariesFollowScorecards) {
    BenchReport r;
    const auto mk = [](std::string a, std::string c, double m, double t) {
        ScoreCard s;
        s.algorithm = std::move(a);
        s.counter = std::move(c);
        s.ok = true;
        s.mape = m;
        s.mse = m * m;
        s.train_time_s = t;
        s.predict_time_us = t * 10;
        return s;
    };
    r.scorecards = {mk("X", "1", 10, 1), mk("X", "2", 20, 3), mk("Y", "1", 5, 9), mk("Y", "2", 7, 11)};
    summarize(r, {{1, 2}, {3}, {4}, {5, 6, 7}});
    ASSERT_EQ(r.summaries.size(), 2u);
    EXPECT_DOUBLE_EQ(r.summaries[0].mape.median, 15.0);
    EXPECT_DOUBLE_EQ(r.summaries[0].train_time_s.median, 2.0);
    EXPECT_DOUBLE_EQ(r.summaries[0].predict_time_all_calls_us, 2.0);
    EXPECT_DOUBLE_EQ(r.summaries[1].predict_time_all_calls_us, 5.5);
    EXPECT_EQ(r.nondominated["train_mape"], (std::vector<std::string>{"X", "Y"}));
    EXPECT_EQ(r.nondominated["train_mse"], (std::vector<std::string>{"X", "Y"}));
}
