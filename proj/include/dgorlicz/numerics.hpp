#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "dgorlicz/error.hpp"

namespace dgorlicz::numerics {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dual exponent x/(x-1).
inline double dual_exponent(double x) { return x / (x - 1.0); }

/// Bracket a root of an increasing function by expanding geometrically
/// from `guess`. Returns {lo, hi} with fn(lo) <= 0 <= fn(hi).
template <class F>
std::pair<double, double> bracket_increasing(F&& fn, double guess, double step = 1.0,
                                             int max_expansions = 200) {
    double lo = guess;
    double hi = guess;
    const double f0 = fn(guess);
    if (std::isnan(f0)) throw NumericalFailure("bracket_increasing: NaN at initial guess");
    if (f0 <= 0.0) {
        for (int i = 0; i < max_expansions; ++i) {
            lo = hi;
            hi = lo + step;
            step *= 2.0;
            if (fn(hi) >= 0.0) return {lo, hi};
        }
    } else {
        for (int i = 0; i < max_expansions; ++i) {
            hi = lo;
            lo = hi - step;
            step *= 2.0;
            if (fn(lo) <= 0.0) return {lo, hi};
        }
    }
    throw NumericalFailure("bracket_increasing: no sign change found");
}

/// Solve fn(x) = 0 for an increasing fn, starting from a guess. Uses the
/// TOMS 748 bracketing solver once a sign change is located.
template <class F>
double solve_increasing(F&& fn, double guess, double step = 1.0) {
    auto [lo, hi] = bracket_increasing(fn, guess, step);
    double flo = fn(lo);
    double fhi = fn(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    std::uintmax_t max_iter = 300;
    const auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
    auto r = boost::math::tools::toms748_solve(fn, lo, hi, flo, fhi, tol, max_iter);
    return 0.5 * (r.first + r.second);
}

/// Safeguarded Newton on an increasing function with known derivative.
/// `fdf` returns {f(x), f'(x)}.
template <class FDF>
double newton_increasing(FDF&& fdf, double guess, double step = 1.0) {
    auto f_only = [&](double x) { return fdf(x).first; };
    auto [lo, hi] = bracket_increasing(f_only, guess, step);
    const double start = std::clamp(guess, lo, hi);
    std::uintmax_t max_iter = 200;
    auto tuple_fn = [&](double x) {
        auto [f, df] = fdf(x);
        return std::make_tuple(f, df);
    };
    return boost::math::tools::newton_raphson_iterate(tuple_fn, start, lo, hi,
                                                      std::numeric_limits<double>::digits - 4,
                                                      max_iter);
}

/// Golden-section maximisation of a unimodal function on [a, b].
template <class F>
std::pair<double, double> golden_maximize(F&& fn, double a, double b, double xtol = 1e-13,
                                          int max_iter = 200) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = fn(c);
    double fd = fn(d);
    for (int i = 0; i < max_iter && std::abs(b - a) > xtol * (1.0 + std::abs(a) + std::abs(b)); ++i) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = fn(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = fn(d);
        }
    }
    return fc > fd ? std::pair{c, fc} : std::pair{d, fd};
}

/// Least-squares slope of y against x.
inline double fit_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxy / sxx;
}

/// Local power-law exponent d log g / d log x of a function given in log
/// form, fitted over x in [x_hi / decades_ratio, x_hi].
template <class LogG>
double tail_exponent(LogG&& log_g, double x_hi, double decades_ratio = 100.0, int samples = 21) {
    std::vector<double> lx(samples), ly(samples);
    const double a = std::log(x_hi / decades_ratio);
    const double b = std::log(x_hi);
    for (int i = 0; i < samples; ++i) {
        lx[i] = a + (b - a) * i / (samples - 1);
        ly[i] = log_g(std::exp(lx[i]));
    }
    return fit_slope(lx, ly);
}

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive 31-point Gauss-Kronrod on [a, b].
template <class F>
QuadResult integrate(F&& fn, double a, double b, double tol = 1e-12, unsigned max_depth = 20) {
    double err = 0.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        fn, a, b, max_depth, tol, &err);
    return {v, err};
}

/// 64-bit FNV-1a, used for config fingerprints in artifact headers.
inline std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace dgorlicz::numerics
