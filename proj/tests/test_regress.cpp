#include <gtest/gtest.h>

#include <random>

#include "dhf/regress.hpp"
#include "oracles.hpp"

using namespace dhf;

namespace {

double sse(const std::vector<double>& t, const std::vector<double>& y, const auto& f) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += (y[i] - f(t[i])) * (y[i] - f(t[i]));
    return s;
}

double line_sse(const std::vector<double>& t, const std::vector<double>& y) {
    const Eigen::Map<const Eigen::VectorXd> tv(t.data(), static_cast<Eigen::Index>(t.size()));
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
    const LinearModel m = ols_fit(tv, yv);
    return sse(t, y, [&](double x) { return m.intercept + m.coefficients[0] * x; });
}

}  // namespace

TEST(Ols, ExactLine) {
    Eigen::MatrixXd X(3, 1);
    X << 1, 2, 3;
    Eigen::VectorXd y(3);
    y << 3, 5, 7;
    const auto m = ols_fit(X, y);
    EXPECT_NEAR(m.coefficients[0], 2.0, 1e-12);
    EXPECT_NEAR(m.intercept, 1.0, 1e-12);
    EXPECT_FALSE(m.regularized);
}

TEST(Ols, ConstantColumnIsRegularizedAndPredictsTheMean) {
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(6, 1, 4.0);
    Eigen::VectorXd y(6);
    y << 1, 5, 2, 8, 3, 5;
    const auto m = ols_fit(X, y);
    EXPECT_TRUE(m.regularized);
    const double x = 4.0;
    EXPECT_NEAR(m.predict(&x), y.mean(), 1e-9);
    const auto o = oracle::pinv_ols(X, y);
    EXPECT_NEAR(o.intercept + o.coefficients[0] * 4.0, y.mean(), 1e-9);
}

TEST(Ols, CollinearColumnsAreRegularized) {
    std::mt19937 rng(2);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(30, 3);
    for (Eigen::Index i = 0; i < 30; ++i) {
        X(i, 0) = nd(rng);
        X(i, 1) = nd(rng);
        X(i, 2) = X(i, 0) - 2.0 * X(i, 1);
    }
    Eigen::VectorXd y = X.col(0) * 1.5 + Eigen::VectorXd::Constant(30, 2.0);
    const auto m = ols_fit(X, y);
    EXPECT_TRUE(m.regularized);
    for (Eigen::Index i = 0; i < 30; ++i) {
        const std::vector<double> row{X(i, 0), X(i, 1), X(i, 2)};
        EXPECT_NEAR(m.predict(row), y[i], 1e-6);
    }
}

TEST(Ols, RecoversKnownCoefficients) {
    std::mt19937 rng(3);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index d = 1 + trial % 8;
        const Eigen::Index n = d + 5 + trial;
        Eigen::MatrixXd X(n, d);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng) * 10.0;
        Eigen::VectorXd k(d);
        for (Eigen::Index j = 0; j < d; ++j) k[j] = nd(rng);
        const double l = nd(rng);
        const Eigen::VectorXd y = (X * k).array() + l;
        const auto m = ols_fit(X, y);
        for (Eigen::Index j = 0; j < d; ++j) EXPECT_NEAR(m.coefficients[static_cast<std::size_t>(j)], k[j], 1e-8);
        EXPECT_NEAR(m.intercept, l, 1e-8);
    }
}

TEST(Ols, MatchesPseudoInverse) {
    std::mt19937 rng(4);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::Index d = 1 + trial % 6;
        const Eigen::Index n = d + 3 + trial % 20;
        Eigen::MatrixXd X(n, d);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng);
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) y[i] = nd(rng);
        const auto m = ols_fit(X, y);
        const auto o = oracle::pinv_ols(X, y);
        for (Eigen::Index j = 0; j < d; ++j) {
            EXPECT_NEAR(m.coefficients[static_cast<std::size_t>(j)], o.coefficients[static_cast<std::size_t>(j)],
                        1e-8 * std::max(1.0, std::abs(o.coefficients[static_cast<std::size_t>(j)])));
        }
        EXPECT_NEAR(m.intercept, o.intercept, 1e-8 * std::max(1.0, std::abs(o.intercept)));
    }
}

TEST(Ols, ResidualNoWorseThanPerturbations) {
    std::mt19937 rng(5);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd X(40, 3);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng);
    Eigen::VectorXd y(40);
    for (Eigen::Index i = 0; i < 40; ++i) y[i] = X(i, 0) - X(i, 2) + nd(rng);
    const auto m = ols_fit(X, y);
    const auto rss = [&](const std::vector<double>& k, double l) {
        double s = 0.0;
        for (Eigen::Index i = 0; i < 40; ++i) {
            double p = l;
            for (Eigen::Index j = 0; j < 3; ++j) p += k[static_cast<std::size_t>(j)] * X(i, j);
            s += (y[i] - p) * (y[i] - p);
        }
        return s;
    };
    const double best = rss(m.coefficients, m.intercept);
    std::normal_distribution<double> step(0.0, 0.05);
    for (int trial = 0; trial < 1000; ++trial) {
        auto k = m.coefficients;
        for (auto& v : k) v += step(rng);
        EXPECT_LE(best, rss(k, m.intercept + step(rng)) + 1e-9);
    }
}

TEST(Ols, InterceptOnlyAndErrors) {
    Eigen::MatrixXd X(3, 0);
    Eigen::VectorXd y(3);
    y << 1, 2, 6;
    const auto m = ols_fit(X, y);
    EXPECT_TRUE(m.coefficients.empty());
    EXPECT_DOUBLE_EQ(m.intercept, 3.0);
    EXPECT_THROW(ols_fit(Eigen::MatrixXd(0, 1), Eigen::VectorXd(0)), FitError);
}

TEST(Quantiles, Breakpoints) {
    std::vector<double> s(10);
    for (int i = 0; i < 10; ++i) s[static_cast<std::size_t>(i)] = i + 1;
    const auto b = quantile_breakpoints(s, 5);
    ASSERT_EQ(b.size(), 4u);
    const std::vector<double> expect{2.8, 4.6, 6.4, 8.2};
    for (std::size_t k = 0; k < 4; ++k) {
        EXPECT_NEAR(b[k], expect[k], 1e-12);
        EXPECT_NEAR(b[k], oracle::quantile(s, 0.2 * static_cast<double>(k + 1)), 1e-12);
    }
    EXPECT_TRUE(quantile_breakpoints(std::vector<double>(7, 3.0), 5).empty());
    EXPECT_EQ(quantile_breakpoints(std::vector<double>{0, 10}, 2), std::vector<double>{5.0});
    EXPECT_THROW(quantile_breakpoints(std::vector<double>{}, 5), ValidationError);
    EXPECT_THROW(quantile_breakpoints(std::vector<double>{1.0}, 1), ValidationError);
}

TEST(Quantiles, MatchOracleOnRandomSamples) {
    std::mt19937 rng(6);
    std::uniform_real_distribution<double> u(-10, 10);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<double> v(1 + static_cast<std::size_t>(trial % 40));
        for (auto& x : v) x = u(rng);
        std::vector<double> sorted = v;
        std::sort(sorted.begin(), sorted.end());
        for (double q : {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
            EXPECT_NEAR(interpolated_quantile(sorted, q), oracle::quantile(v, q), 1e-12);
        }
    }
}

TEST(Quantiles, DuplicatesCollapse) {
    const std::vector<double> s{1, 1, 1, 1, 1, 1, 1, 1, 2, 3};
    const auto b = quantile_breakpoints(s, 5);
    for (std::size_t k = 1; k < b.size(); ++k) EXPECT_GT(b[k], b[k - 1]);
    for (double v : b) {
        EXPECT_GT(v, 1.0);
        EXPECT_LT(v, 3.0);
    }
}

TEST(Piecewise, LineHasZeroHinges) {
    std::vector<double> t, y;
    for (int i = 0; i < 100; ++i) {
        t.push_back(-10 + 0.3 * i);
        y.push_back(4.0 - 2.5 * t.back());
    }
    const auto f = piecewise_fit(t, y, quantile_breakpoints(t, 5));
    for (double h : f.hinge_slopes) EXPECT_NEAR(h, 0.0, 1e-8);
    EXPECT_NEAR(f.slope, -2.5, 1e-8);
    EXPECT_NEAR(f.intercept, 4.0, 1e-8);
}

TEST(Piecewise, RecoversKnownFunction) {
    const std::vector<double> bp{-3, 2, 6, 11};
    const auto truth = [&](double x) {
        return 50.0 - 3.0 * x + 1.0 * std::max(0.0, x + 3) - 2.0 * std::max(0.0, x - 2) +
               1.5 * std::max(0.0, x - 6) + 2.5 * std::max(0.0, x - 11);
    };
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> u(-15, 20);
    std::vector<double> t(400), y(400);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = u(rng);
        y[i] = truth(t[i]);
    }
    const auto f = piecewise_fit(t, y, bp);
    for (double x = -20; x <= 25; x += 0.25) EXPECT_NEAR(f(x), truth(x), 1e-6);
}

TEST(Piecewise, IsContinuousAndNestsTheLine) {
    std::mt19937 rng(9);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> t(60), y(60);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = 10 * nd(rng);
            y[i] = 20 - t[i] + 5 * nd(rng);
        }
        const auto f = piecewise_fit(t, y, quantile_breakpoints(t, 5));
        for (double b : f.breakpoints) EXPECT_NEAR(f(b - 1e-9), f(b + 1e-9), 1e-6);
        EXPECT_LE(sse(t, y, f), line_sse(t, y) * (1 + 1e-12) + 1e-9);
    }
}

TEST(Piecewise, EmptyBreakpointsIsALine) {
    const std::vector<double> t{0, 1, 2, 3}, y{1, 3, 2, 5};
    const auto f = piecewise_fit(t, y, {});
    Eigen::MatrixXd X(4, 1);
    X << 0, 1, 2, 3;
    const auto o = oracle::pinv_ols(X, Eigen::Map<const Eigen::VectorXd>(y.data(), 4));
    EXPECT_NEAR(f.slope, o.coefficients[0], 1e-12);
    EXPECT_NEAR(f.intercept, o.intercept, 1e-12);
    EXPECT_THROW(piecewise_fit(t, y, std::vector<double>{2, 1}), ValidationError);
}

TEST(Spline, LineHasZeroCurvature) {
    std::vector<double> t, y;
    for (int i = 0; i < 100; ++i) {
        t.push_back(-10 + 0.3 * i);
        y.push_back(4.0 - 2.5 * t.back());
    }
    const auto s = spline_fit(t, y, quantile_breakpoints(t, 5));
    for (const auto& seg : s.segments) {
        EXPECT_NEAR(seg[2], 0.0, 1e-7);
        EXPECT_NEAR(seg[3], 0.0, 1e-7);
    }
    for (double x = -10; x <= 20; x += 0.5) EXPECT_NEAR(s(x), 4.0 - 2.5 * x, 1e-7);
}

TEST(Spline, RecoversAKnownCubic) {
    const auto truth = [](double x) { return 3.0 - 0.5 * x + 0.04 * x * x - 0.002 * x * x * x; };
    std::vector<double> t, y;
    for (int i = 0; i <= 300; ++i) {
        t.push_back(-15.0 + 0.1 * i);
        y.push_back(truth(t.back()));
    }
    const auto s = spline_fit(t, y, quantile_breakpoints(t, 5));
    for (double x = -15; x <= 15; x += 0.1) EXPECT_NEAR(s(x), truth(x), 1e-6);
}

TEST(Spline, IsTwiceContinuouslyDifferentiable) {
    std::mt19937 rng(10);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> t(80), y(80);
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = 8 * nd(rng);
            y[i] = 100 - 4 * t[i] + 0.1 * t[i] * t[i] + 3 * nd(rng);
        }
        const auto s = spline_fit(t, y, quantile_breakpoints(t, 5));
        ASSERT_EQ(s.knots.size(), 4u);
        for (std::size_t k = 0; k < s.knots.size(); ++k) {
            for (int order = 0; order <= 2; ++order) {
                const double l = s.left_limit(k, order);
                const double r = s.right_limit(k, order);
                EXPECT_NEAR(l, r, 1e-9 * std::max(1.0, std::abs(l))) << "knot " << k << " order " << order;
            }
        }
        EXPECT_LE(sse(t, y, s), line_sse(t, y) * (1 + 1e-12) + 1e-9);
    }
}

TEST(Spline, ExtrapolatesLinearly) {
    std::vector<double> t, y;
    for (int i = 0; i <= 100; ++i) {
        t.push_back(0.1 * i);
        y.push_back(t.back() * t.back() * t.back());
    }
    const auto s = spline_fit(t, y, quantile_breakpoints(t, 5));
    const double slope = s.raw(10.0, 1);
    EXPECT_NEAR(s(12.0) - s(11.0), slope, 1e-9 * std::abs(slope));
    EXPECT_NEAR(s(-2.0), s.raw(0.0) - 2.0 * s.raw(0.0, 1), 1e-9);
}

TEST(Isotonic, FeasibleInputIsReproduced) {
    const std::vector<double> t{0, 1, 2, 3, 4}, y{9, 7, 7, 3, 1};
    const auto f = isotonic_fit(t, y);
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_DOUBLE_EQ(f(t[i]), y[i]);
}

TEST(Isotonic, PoolsViolators) {
    const std::vector<double> t{0, 1, 2}, y{1, 3, 2};
    const auto f = isotonic_fit(t, y);
    for (double x : t) EXPECT_DOUBLE_EQ(f(x), 2.0);
    const auto o = oracle::brute_isotonic(t, y);
    EXPECT_DOUBLE_EQ(o.sse, 2.0);
}

TEST(Isotonic, SinglePointAndErrors) {
    const auto f = isotonic_fit(std::vector<double>{4.0}, std::vector<double>{7.5});
    EXPECT_DOUBLE_EQ(f(-100), 7.5);
    EXPECT_DOUBLE_EQ(f(100), 7.5);
    EXPECT_THROW(isotonic_fit(std::vector<double>{}, std::vector<double>{}), FitError);
}

TEST(Isotonic, TiesArePooledAndPredictionSteps) {
    const std::vector<double> t{1, 1, 3, 5, 5}, y{10, 6, 4, 2, 0};
    const auto f = isotonic_fit(t, y);
    EXPECT_DOUBLE_EQ(f(1), 8.0);
    EXPECT_DOUBLE_EQ(f(3), 4.0);
    EXPECT_DOUBLE_EQ(f(5), 1.0);
    EXPECT_DOUBLE_EQ(f(1.9), 8.0);   // below the midpoint of the gap 1..3
    EXPECT_DOUBLE_EQ(f(2.1), 4.0);
    EXPECT_DOUBLE_EQ(f(-50), 8.0);
    EXPECT_DOUBLE_EQ(f(50), 1.0);
}

TEST(Isotonic, MatchesBruteForce) {
    std::mt19937 rng(12);
    std::uniform_int_distribution<int> tv(0, 5);
    std::normal_distribution<double> nd;
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 8);
        std::vector<double> t(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = tv(rng);
            y[i] = nd(rng);
        }
        const auto f = isotonic_fit(t, y);
        const auto o = oracle::brute_isotonic(t, y);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(f(t[i]), o.fitted[i], 1e-9);
            s += (y[i] - f(t[i])) * (y[i] - f(t[i]));
        }
        EXPECT_NEAR(s, o.sse, 1e-9);
        for (std::size_t b = 1; b < f.blocks.size(); ++b) EXPECT_LE(f.blocks[b].mean, f.blocks[b - 1].mean);
    }
}

TEST(Fitters, AreDeterministic) {
    std::mt19937 rng(13);
    std::normal_distribution<double> nd;
    std::vector<double> t(200), y(200);
    for (std::size_t i = 0; i < t.size(); ++i) {
        t[i] = 10 * nd(rng);
        y[i] = 50 - 2 * t[i] + nd(rng);
    }
    const auto bp = quantile_breakpoints(t, 5);
    const auto a = piecewise_fit(t, y, bp), b = piecewise_fit(t, y, bp);
    EXPECT_EQ(a.hinge_slopes, b.hinge_slopes);
    EXPECT_EQ(a.intercept, b.intercept);
    const auto s1 = spline_fit(t, y, bp), s2 = spline_fit(t, y, bp);
    EXPECT_EQ(s1.segments, s2.segments);
    const auto i1 = isotonic_fit(t, y), i2 = isotonic_fit(t, y);
    ASSERT_EQ(i1.blocks.size(), i2.blocks.size());
    for (std::size_t k = 0; k < i1.blocks.size(); ++k) EXPECT_EQ(i1.blocks[k].mean, i2.blocks[k].mean);
}
