#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "dgorlicz/grid.hpp"
#include "dgorlicz/young.hpp"

namespace dgtest {

using dgorlicz::SymMatrix2;
using dgorlicz::Vec2;
using dgorlicz::WeightedGrid;
using dgorlicz::YoungFunction;

inline double uniform(std::mt19937_64& rng, double a, double b) {
    return std::uniform_real_distribution<double>(a, b)(rng);
}

/// Closed-form Young functions with parameters spread over their families.
inline YoungFunction random_young(std::mt19937_64& rng) {
    switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
        case 0: return dgorlicz::make_power(uniform(rng, 1.2, 4.0));
        case 1: return dgorlicz::make_log_bump(uniform(rng, 1.2, 3.0), uniform(rng, 0.5, 4.0));
        default: return dgorlicz::make_iterated_log_bump(2, uniform(rng, 1.2, 3.0), uniform(rng, 0.5, 4.0));
    }
}

/// 1D grid on (0, 1) with a positive random weight, total mass 1.
inline WeightedGrid random_grid(std::mt19937_64& rng, std::size_t n = 64) {
    const double a1 = uniform(rng, -0.8, 0.8);
    const double k1 = uniform(rng, 1.0, 6.0);
    WeightedGrid raw = WeightedGrid::interval(
        0.0, 1.0, n, [=](const Vec2& x) { return 1.0 + a1 * std::sin(k1 * x[0]); },
        [](const Vec2&) { return SymMatrix2::identity(); });
    const double m = raw.measure();
    return WeightedGrid::interval(
        0.0, 1.0, n, [=](const Vec2& x) { return (1.0 + a1 * std::sin(k1 * x[0])) / m; },
        [](const Vec2&) { return SymMatrix2::identity(); });
}

/// Random field with a mix of scales and some exact zeros.
inline std::vector<double> random_field(std::mt19937_64& rng, const WeightedGrid& g) {
    std::vector<double> f(g.size());
    const double scale = std::exp(uniform(rng, -3.0, 3.0));
    for (auto& x : f) {
        const double u = uniform(rng, 0.0, 1.0);
        x = u < 0.1 ? 0.0 : scale * uniform(rng, -1.0, 1.0) * std::exp(uniform(rng, -2.0, 2.0));
    }
    return f;
}

}  // namespace dgtest
