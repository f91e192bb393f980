#pragma once

// Least-squares fitting primitives: ordinary least squares with a ridge
// fallback, continuous piecewise-linear (hinge) regression, cubic regression
// splines on a truncated-power basis, and isotonic regression (PAVA).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dhf/error.hpp"

namespace dhf {

inline constexpr double kConditionLimit = 1e10;
inline constexpr double kRidgeFactor = 1e-8;
inline constexpr double kConstantColumnTolerance = 1e-12;

struct LinearModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    bool regularized = false;

    double predict(std::span<const double> x) const {
        double y = intercept;
        for (std::size_t j = 0; j < coefficients.size(); ++j) y += coefficients[j] * x[j];
        return y;
    }
    double predict(const double* x) const {
        return predict(std::span<const double>(x, coefficients.size()));
    }
};

// Minimizes sum (y - X k - l)^2. Columns are centered and scaled to unit RMS
// before solving the normal equations; when that system is singular or its
// condition number exceeds kConditionLimit a ridge term of
// kRidgeFactor * trace / d is added and the result is flagged as regularized.
inline LinearModel ols_fit(const Eigen::Ref<const Eigen::MatrixXd>& X,
                           const Eigen::Ref<const Eigen::VectorXd>& y) {
    const auto n = X.rows();
    const auto d = X.cols();
    if (n == 0) throw FitError("ols_fit: empty input");
    if (y.size() != n) throw FitError("ols_fit: X and y row counts differ");

    LinearModel model;
    const double y_mean = y.mean();
    if (d == 0) {
        model.intercept = y_mean;
        return model;
    }

    const Eigen::RowVectorXd x_mean = X.colwise().mean();
    Eigen::MatrixXd Z = X.rowwise() - x_mean;
    Eigen::VectorXd scale(d);
    for (Eigen::Index j = 0; j < d; ++j) {
        const double rms = std::sqrt(Z.col(j).squaredNorm() / static_cast<double>(n));
        // Spread at rounding level (e.g. a moving average over a periodic
        // signal) carries no information; treat the column as constant.
        if (!(rms > kConstantColumnTolerance * std::abs(x_mean[j]))) {
            Z.col(j).setZero();
            scale[j] = 1.0;
            continue;
        }
        scale[j] = rms;
        Z.col(j) /= scale[j];
    }
    const Eigen::VectorXd yc = y.array() - y_mean;
    Eigen::MatrixXd G = (Z.transpose() * Z) / static_cast<double>(n);
    const Eigen::VectorXd b = (Z.transpose() * yc) / static_cast<double>(n);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G, Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    const double lmax = eig.eigenvalues().maxCoeff();
    const bool ill = !(lmin > 0.0) || lmax / lmin > kConditionLimit;

    Eigen::VectorXd beta;
    if (ill) {
        const double trace = G.trace();
        const double lambda = kRidgeFactor * (trace > 0.0 ? trace / static_cast<double>(d) : 1.0);
        G.diagonal().array() += lambda;
        beta = G.ldlt().solve(b);
        model.regularized = true;
    } else {
        beta = G.llt().solve(b);
    }

    model.coefficients.resize(static_cast<std::size_t>(d));
    double intercept = y_mean;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double k = beta[j] / scale[j];
        model.coefficients[static_cast<std::size_t>(j)] = k;
        intercept -= k * x_mean[j];
    }
    model.intercept = intercept;
    return model;
}

// Empirical quantile with linear interpolation between order statistics.
// `sorted` must be ascending and non-empty; q in [0, 1].
inline double interpolated_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw ValidationError("quantile of an empty sample");
    const double h = static_cast<double>(sorted.size() - 1) * q;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    if (lo + 1 >= sorted.size()) return sorted.back();
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

// Breakpoints at the 1/parts .. (parts-1)/parts quantiles. Values that repeat
// or coincide with the sample extremes are dropped, so degenerate samples
// produce fewer segments.
inline std::vector<double> quantile_breakpoints(std::span<const double> samples, int parts) {
    if (samples.empty()) throw ValidationError("quantile_breakpoints: empty sample");
    if (parts < 2) throw ValidationError("quantile_breakpoints: parts must be at least 2");
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const double lo = sorted.front();
    const double hi = sorted.back();
    std::vector<double> out;
    for (int k = 1; k < parts; ++k) {
        const double q = interpolated_quantile(sorted, static_cast<double>(k) / parts);
        if (q <= lo || q >= hi) continue;
        if (!out.empty() && q <= out.back()) continue;
        out.push_back(q);
    }
    return out;
}

// Continuous piecewise-linear function in hinge form:
//   f(t) = intercept + slope * t + sum_k hinge_slopes[k] * max(0, t - breakpoints[k]).
struct PiecewiseLinear {
    std::vector<double> breakpoints;
    double intercept = 0.0;
    double slope = 0.0;
    std::vector<double> hinge_slopes;
    bool regularized = false;

    double operator()(double t) const {
        double v = intercept + slope * t;
        for (std::size_t k = 0; k < breakpoints.size(); ++k) {
            if (t > breakpoints[k]) v += hinge_slopes[k] * (t - breakpoints[k]);
        }
        return v;
    }
};

inline void require_increasing(std::span<const double> knots, const char* what) {
    for (std::size_t k = 1; k < knots.size(); ++k) {
        if (!(knots[k] > knots[k - 1])) {
            throw ValidationError(std::string(what) + " must be strictly increasing");
        }
    }
}

inline PiecewiseLinear piecewise_fit(std::span<const double> t, std::span<const double> y,
                                     std::span<const double> breakpoints) {
    if (t.size() != y.size()) throw FitError("piecewise_fit: length mismatch");
    require_increasing(breakpoints, "breakpoints");
    const auto n = static_cast<Eigen::Index>(t.size());
    const auto nb = static_cast<Eigen::Index>(breakpoints.size());
    Eigen::MatrixXd X(n, 1 + nb);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double ti = t[static_cast<std::size_t>(i)];
        X(i, 0) = ti;
        for (Eigen::Index k = 0; k < nb; ++k) {
            X(i, 1 + k) = std::max(0.0, ti - breakpoints[static_cast<std::size_t>(k)]);
        }
    }
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    const LinearModel lm = ols_fit(X, yv);

    PiecewiseLinear f;
    f.breakpoints.assign(breakpoints.begin(), breakpoints.end());
    f.intercept = lm.intercept;
    f.slope = lm.coefficients[0];
    f.hinge_slopes.assign(lm.coefficients.begin() + 1, lm.coefficients.end());
    f.regularized = lm.regularized;
    return f;
}

// Cubic regression spline stored as one local cubic per segment. Segment j
// covers (knots[j-1], knots[j]] and is expanded around anchor(j); segment 0
// extends to -inf and the last one to +inf. Outside [range_lo, range_hi] the
// function continues linearly along the boundary tangent.
struct CubicSpline {
    std::vector<double> knots;
    std::vector<std::array<double, 4>> segments;  // c0 + c1 w + c2 w^2 + c3 w^3, w = t - anchor
    double range_lo = 0.0;
    double range_hi = 0.0;
    bool regularized = false;

    double anchor(std::size_t j) const {
        if (knots.empty()) return 0.5 * (range_lo + range_hi);
        return j == 0 ? knots.front() : knots[j - 1];
    }

    std::size_t segment_of(double t) const {
        return static_cast<std::size_t>(std::lower_bound(knots.begin(), knots.end(), t) -
                                        knots.begin());
    }

    // order-th derivative (0..3) of segment j's polynomial at t, no extrapolation rule.
    double segment_eval(std::size_t j, double t, int order = 0) const {
        const auto& c = segments[j];
        const double w = t - anchor(j);
        switch (order) {
            case 0: return c[0] + w * (c[1] + w * (c[2] + w * c[3]));
            case 1: return c[1] + w * (2.0 * c[2] + w * 3.0 * c[3]);
            case 2: return 2.0 * c[2] + 6.0 * c[3] * w;
            case 3: return 6.0 * c[3];
            default: return 0.0;
        }
    }

    double raw(double t, int order = 0) const { return segment_eval(segment_of(t), t, order); }

    double operator()(double t) const {
        if (t < range_lo) return raw(range_lo) + raw(range_lo, 1) * (t - range_lo);
        if (t > range_hi) return raw(range_hi) + raw(range_hi, 1) * (t - range_hi);
        return raw(t);
    }

    // Limits of the order-th derivative at knot k from the left and right segment.
    double left_limit(std::size_t k, int order) const { return segment_eval(k, knots[k], order); }
    double right_limit(std::size_t k, int order) const {
        return segment_eval(k + 1, knots[k], order);
    }
};

// Least squares on {1, u, u^2, u^3, (u - kappa_k)_+^3} where u is t mapped to
// [-1, 1] over the sample range, then re-expanded per segment.
inline CubicSpline spline_fit(std::span<const double> t, std::span<const double> y,
                              std::span<const double> knots) {
    if (t.size() != y.size()) throw FitError("spline_fit: length mismatch");
    if (t.empty()) throw FitError("spline_fit: empty input");
    require_increasing(knots, "knots");
    const auto [lo_it, hi_it] = std::minmax_element(t.begin(), t.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    const double center = 0.5 * (lo + hi);
    const double half = hi > lo ? 0.5 * (hi - lo) : 1.0;
    const auto to_u = [&](double v) { return (v - center) / half; };

    const auto n = static_cast<Eigen::Index>(t.size());
    const auto nk = static_cast<Eigen::Index>(knots.size());
    std::vector<double> kappa(knots.size());
    for (std::size_t k = 0; k < knots.size(); ++k) kappa[k] = to_u(knots[k]);

    Eigen::MatrixXd X(n, 3 + nk);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double u = to_u(t[static_cast<std::size_t>(i)]);
        X(i, 0) = u;
        X(i, 1) = u * u;
        X(i, 2) = u * u * u;
        for (Eigen::Index k = 0; k < nk; ++k) {
            const double r = std::max(0.0, u - kappa[static_cast<std::size_t>(k)]);
            X(i, 3 + k) = r * r * r;
        }
    }
    const Eigen::Map<const Eigen::VectorXd> yv(y.data(), n);
    const LinearModel lm = ols_fit(X, yv);

    CubicSpline s;
    s.knots.assign(knots.begin(), knots.end());
    s.range_lo = lo;
    s.range_hi = hi;
    s.regularized = lm.regularized;

    // Global cubic in u for each segment: A0 + A1 u + A2 u^2 + A3 u^3.
    std::array<double, 4> A{lm.intercept, lm.coefficients[0], lm.coefficients[1],
                            lm.coefficients[2]};
    s.segments.resize(knots.size() + 1);
    for (std::size_t j = 0; j <= knots.size(); ++j) {
        if (j > 0) {
            const double g = lm.coefficients[3 + (j - 1)];
            const double kp = kappa[j - 1];
            A[0] -= g * kp * kp * kp;
            A[1] += 3.0 * g * kp * kp;
            A[2] -= 3.0 * g * kp;
            A[3] += g;
        }
        const double ua = to_u(s.anchor(j));
        const double p0 = A[0] + ua * (A[1] + ua * (A[2] + ua * A[3]));
        const double p1 = A[1] + ua * (2.0 * A[2] + ua * 3.0 * A[3]);
        const double p2 = 2.0 * A[2] + 6.0 * A[3] * ua;
        const double p3 = 6.0 * A[3];
        s.segments[j] = {p0, p1 / half, p2 / (2.0 * half * half), p3 / (6.0 * half * half * half)};
    }
    return s;
}

// Non-increasing step function of temperature. Blocks are ordered by
// increasing temperature and cover [t_lo, t_hi] of the pooled samples.
struct IsotonicFit {
    struct Block {
        double t_lo = 0.0;
        double t_hi = 0.0;
        double mean = 0.0;
        double weight = 0.0;
    };
    std::vector<Block> blocks;

    // Constant inside a block, steps at the midpoint of the gap between
    // neighbouring blocks, constant beyond the fitted range.
    double operator()(double t) const {
        if (t <= blocks.front().t_lo) return blocks.front().mean;
        if (t >= blocks.back().t_hi) return blocks.back().mean;
        const auto it = std::lower_bound(blocks.begin(), blocks.end(), t,
                                         [](const Block& b, double v) { return b.t_hi < v; });
        // it->t_hi >= t and the previous block ends below t.
        if (t >= it->t_lo) return it->mean;
        const Block& prev = *(it - 1);
        const double mid = 0.5 * (prev.t_hi + it->t_lo);
        return t < mid ? prev.mean : it->mean;
    }
};

inline IsotonicFit isotonic_fit(std::span<const double> t, std::span<const double> y) {
    if (t.size() != y.size()) throw FitError("isotonic_fit: length mismatch");
    if (t.empty()) throw FitError("isotonic_fit: empty input");
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return t[a] < t[b]; });

    // Pool identical temperatures first, then merge adjacent violators.
    std::vector<IsotonicFit::Block> stack;
    stack.reserve(t.size());
    std::size_t i = 0;
    while (i < order.size()) {
        const double ti = t[order[i]];
        double sum = 0.0;
        double w = 0.0;
        while (i < order.size() && t[order[i]] == ti) {
            sum += y[order[i]];
            w += 1.0;
            ++i;
        }
        IsotonicFit::Block blk{ti, ti, sum / w, w};
        while (!stack.empty() && stack.back().mean < blk.mean) {
            const auto& prev = stack.back();
            const double merged_w = prev.weight + blk.weight;
            blk.mean = (prev.mean * prev.weight + blk.mean * blk.weight) / merged_w;
            blk.weight = merged_w;
            blk.t_lo = prev.t_lo;
            stack.pop_back();
        }
        stack.push_back(blk);
    }
    for (std::size_t b = 1; b < stack.size(); ++b) {
        if (stack[b].mean > stack[b - 1].mean) {
            throw FitError("isotonic_fit: block means are not non-increasing");
        }
    }
    return IsotonicFit{std::move(stack)};
}

}  // namespace dhf
