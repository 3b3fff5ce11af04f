#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dgorlicz/pdesolve.hpp"
#include "support.hpp"

using namespace dgorlicz;

namespace {

double sup(const GridFunction& u) { return *std::max_element(u.values().begin(), u.values().end()); }

ProblemSpec unit_problem(std::size_t n, double p, double f = 1.0) {
    const auto g = WeightedGrid::unit_interval(n);
    return make_problem(g, p, GridFunction::constant(g, f));
}

std::vector<double> interior_random(std::mt19937_64& rng, const WeightedGrid& g) {
    std::vector<double> u(g.size(), 0.0);
    for (std::size_t i = 0; i < g.size(); ++i)
        if (!g.on_boundary(i)) u[i] = dgtest::uniform(rng, -1.0, 1.0);
    return u;
}

}  // namespace

TEST(Solve, LinearModelIsExactAtNodes) {
    const auto s = unit_problem(64, 2.0);
    const auto r = solve(s);
    for (std::size_t i = 0; i < s.grid.size(); ++i) {
        const double x = s.grid.nodes()[i][0];
        EXPECT_NEAR(r.u[i], 0.5 * x * (1.0 - x), 1e-12);
    }
    EXPECT_NEAR(sup(r.u), 0.125, 1e-12);
    EXPECT_LE(r.residual_norm, 1e-11);
}

TEST(Solve, CubicModelSupremum) {
    // u(x) = (2/3) ((1/2)^{3/2} - |x - 1/2|^{3/2}) for -(|u'| u')' = 1.
    const auto r = solve(unit_problem(256, 3.0));
    const double exact = (2.0 / 3.0) * std::pow(0.5, 1.5);
    EXPECT_NEAR(sup(r.u), exact, 1e-3 * exact);
}

TEST(Solve, SubquadraticModelSupremum) {
    // p = 1.5: u(x) = (1/3) ((1/2)^3 - |x - 1/2|^3).
    const auto r = solve(unit_problem(256, 1.5));
    const double exact = std::pow(0.5, 3.0) / 3.0;
    EXPECT_NEAR(sup(r.u), exact, 1e-2 * exact);
    EXPECT_LE(r.residual_norm, 1e-11);
}

TEST(Solve, ZeroDataGivesZero) {
    for (double p : {1.5, 2.0, 3.0}) {
        const auto r = solve(unit_problem(32, p, 0.0));
        for (double x : r.u.values()) EXPECT_EQ(x, 0.0);
    }
}

TEST(Solve, BoundaryIsExactlyZero) {
    const auto g = WeightedGrid::degenerate_square(12, 3.0);
    const auto r = solve(make_problem(g, 3.0, GridFunction::constant(g, 1.0)));
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.on_boundary(i)) { EXPECT_EQ(r.u[i], 0.0); }
    EXPECT_EQ(weak_residual(r.u.values(), make_problem(g, 3.0, GridFunction::constant(g, 1.0))), r.residual_norm);
}

TEST(Solve, EnergyHistoryNonIncreasing) {
    for (double p : {1.5, 3.0, 4.0}) {
        const auto r = solve(unit_problem(64, p));
        ASSERT_FALSE(r.energy_history.empty());
        for (std::size_t k = 1; k < r.energy_history.size(); ++k)
            EXPECT_LE(r.energy_history[k], r.energy_history[k - 1]);
        EXPECT_EQ(r.energy, r.energy_history.back());
        EXPECT_NEAR(r.energy, energy(r.u.values(), make_problem(WeightedGrid::unit_interval(64), p, GridFunction::constant(WeightedGrid::unit_interval(64), 1.0))), 1e-14);
    }
}

TEST(Solve, Homogeneity) {
    for (double p : {2.0, 3.0}) {
        const auto base = solve(unit_problem(64, p));
        for (double lam : {2.0, 8.0}) {
            const auto scaled = solve(unit_problem(64, p, lam));
            const double factor = std::pow(lam, 1.0 / (p - 1.0));
            for (std::size_t i = 0; i < base.u.size(); ++i)
                EXPECT_NEAR(scaled.u[i], factor * base.u[i], 1e-8 * factor * sup(base.u));
        }
    }
}

TEST(Solve, ComparisonPrinciple) {
    std::mt19937_64 rng(5);
    for (int k = 0; k < 10; ++k) {
        const auto g = dgtest::random_grid(rng, 48);
        std::vector<double> f(g.size());
        for (auto& x : f) x = dgtest::uniform(rng, 0.0, 2.0);
        const double p = dgtest::uniform(rng, 1.6, 4.0);
        const auto r = solve(make_problem(g, p, GridFunction(f)));
        for (double x : r.u.values()) EXPECT_GE(x, -1e-12);
    }
}

TEST(Solve, RegularisationIsStable) {
    const auto g = WeightedGrid::unit_interval(128);
    const auto a = solve(make_problem(g, 3.0, GridFunction::constant(g, 1.0), 1e-3));
    const auto b = solve(make_problem(g, 3.0, GridFunction::constant(g, 1.0), 1e-4));
    EXPECT_LT(std::abs(sup(a.u) - sup(b.u)), 1e-2 * sup(b.u));
}

TEST(Solve, AbsorptionDoesNotIncreaseSupremum) {
    auto s = unit_problem(64, 3.0);
    const auto free = solve(s);
    s.tau = GridFunction::constant(s.grid, 5.0);
    const auto damped = solve(s);
    EXPECT_LE(sup(damped.u), sup(free.u));
    EXPECT_GT(sup(damped.u), 0.0);
}

TEST(Solve, RejectsBadProblems) {
    const auto g = WeightedGrid::unit_interval(8);
    EXPECT_THROW(make_problem(g, 1.0, GridFunction::constant(g, 1.0)), InvalidArgument);
    EXPECT_THROW(make_problem(g, 2.0, GridFunction::constant(g, 1.0), -1.0), InvalidArgument);
    EXPECT_THROW(make_problem(g, 2.0, GridFunction(std::vector<double>(3, 1.0))), InvalidArgument);
    auto s = make_problem(g, 2.0, GridFunction::constant(g, 1.0));
    s.tau = GridFunction::constant(g, -1.0);
    EXPECT_THROW(solve(s), InvalidArgument);
}

TEST(Solve, ExhaustedBudgetCarriesBestIterate) {
    SolveOptions opt;
    opt.max_iterations = 1;
    try {
        solve(unit_problem(64, 4.0), opt);
        FAIL() << "expected SolveFailure";
    } catch (const SolveFailure& e) {
        EXPECT_EQ(e.best_iterate().size(), 65u);
        EXPECT_GT(e.residual(), opt.tol);
    }
}

TEST(WeakForm, GradientMatchesFiniteDifferences) {
    std::mt19937_64 rng(13);
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
        const auto g = dgtest::random_grid(rng, 24);
        std::vector<double> f(g.size());
        for (auto& x : f) x = dgtest::uniform(rng, -1.0, 1.0);
        auto s = make_problem(g, p, GridFunction(f), 1e-2);
        s.tau = GridFunction::constant(g, 0.7);
        const auto u = interior_random(rng, g);
        const auto grad = energy_gradient(u, s);
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double h = 1e-6;
            auto up = u, um = u;
            up[i] += h;
            um[i] -= h;
            const double fd = (energy(up, s) - energy(um, s)) / (2 * h);
            EXPECT_NEAR(grad[i], fd, 1e-6 * (1.0 + std::abs(fd))) << "p=" << p << " i=" << i;
        }
    }
}

TEST(WeakForm, ResidualGrowsLinearlyUnderPerturbation) {
    const auto s = unit_problem(64, 2.0);
    const auto r = solve(s);
    std::vector<double> phi(s.grid.size(), 0.0);
    phi[20] = 1.0;
    std::vector<double> ratios;
    for (double d : {1e-2, 1e-3, 1e-4}) {
        std::vector<double> v(r.u.values().begin(), r.u.values().end());
        v[20] += d;
        ratios.push_back(weak_residual(v, s) / d);
    }
    EXPECT_NEAR(ratios[0], ratios[1], 1e-6 * ratios[1]);
    EXPECT_NEAR(ratios[1], ratios[2], 1e-5 * ratios[1]);
    EXPECT_GT(ratios[0], 0.0);
}

TEST(WeakForm, DefectVanishesAgainstHatCombinations) {
    const auto s = unit_problem(64, 3.0);
    const auto r = solve(s);
    std::mt19937_64 rng(3);
    const auto phi = interior_random(rng, s.grid);
    EXPECT_LE(std::abs(weak_form_defect(r.u.values(), phi, s)), 64 * r.residual_norm);
}

TEST(WeakForm, ResidualRejectsBoundaryValues) {
    const auto s = unit_problem(8, 2.0);
    std::vector<double> u(s.grid.size(), 0.0);
    u[0] = 1e-3;
    EXPECT_THROW(weak_residual(u, s), InvalidArgument);
}

TEST(Sobolev, QuotientOfSineMatchesClosedForm) {
    // ||sin(pi x)||_4 / ||pi cos(pi x)||_2 = (3/8)^{1/4} / (pi / sqrt 2)
    const auto g = WeightedGrid::unit_interval(512);
    const auto phi = GridFunction::sample(g, [](const Vec2& x) { return std::sin(std::numbers::pi * x[0]); });
    const double exact = std::pow(3.0 / 8.0, 0.25) / (std::numbers::pi / std::sqrt(2.0));
    EXPECT_NEAR(sobolev_quotient(phi.values(), g, 2.0, 2.0), exact, 1e-4);
    EXPECT_TRUE(std::isnan(sobolev_quotient(GridFunction::constant(g, 0.0).values(), g, 2.0, 2.0)));
}

TEST(Sobolev, EstimateDominatesSine) {
    const auto g = WeightedGrid::unit_interval(128);
    const auto est = estimate_sobolev_constant(g, 2.0, 2.0, 200, 1);
    EXPECT_GE(est.constant, 0.3522677959014683);
    EXPECT_EQ(est.evaluated, 201);  // sine plus the trials
    EXPECT_FALSE(est.best_family.empty());
}

TEST(Sobolev, EstimateIsDeterministicPerSeed) {
    const auto g = WeightedGrid::unit_interval(64);
    EXPECT_EQ(estimate_sobolev_constant(g, 3.0, 2.0, 60, 9).constant,
              estimate_sobolev_constant(g, 3.0, 2.0, 60, 9).constant);
}

TEST(Sobolev, ScalesWithTheWeight) {
    // v -> c v multiplies the quotient by c^{1/(p sigma)}.
    const double c = 16.0;
    const auto id = [](const Vec2&) { return SymMatrix2::identity(); };
    const auto g1 = WeightedGrid::interval(0.0, 1.0, 64, [](const Vec2&) { return 1.0; }, id);
    const auto g2 = WeightedGrid::interval(0.0, 1.0, 64, [c](const Vec2&) { return c; }, id);
    const double a = estimate_sobolev_constant(g1, 2.0, 2.0, 80, 4).constant;
    const double b = estimate_sobolev_constant(g2, 2.0, 2.0, 80, 4).constant;
    EXPECT_NEAR(b, std::pow(c, 0.25) * a, 1e-12 * b);
}

TEST(Sobolev, StableUnderRefinement) {
    const double a = estimate_sobolev_constant(WeightedGrid::unit_interval(128), 2.0, 2.0, 200, 1).constant;
    const double b = estimate_sobolev_constant(WeightedGrid::unit_interval(256), 2.0, 2.0, 200, 1).constant;
    EXPECT_LT(std::abs(a - b), 0.02 * b);
}

TEST(Sobolev, RejectsBadInput) {
    const auto g = WeightedGrid::unit_interval(16);
    EXPECT_THROW(estimate_sobolev_constant(g, 2.0, 1.0, 10, 1), InvalidArgument);
    EXPECT_THROW(estimate_sobolev_constant(g, 1.0, 2.0, 10, 1), InvalidArgument);
    EXPECT_THROW(estimate_sobolev_constant(g, 2.0, 2.0, 0, 1), InvalidArgument);
}

class ExpChain : public ::testing::Test {
protected:
    void SetUp() override {
        s = unit_problem(128, 2.0);
        u = solve(s).u;
        ep.sigma = 2.0;
        ep.sobolev_constant = estimate_sobolev_constant(s.grid, 2.0, 2.0, 200, 1).constant;
    }
    ProblemSpec s = unit_problem(2, 2.0);
    GridFunction u;
    ExpParams ep;
};

TEST_F(ExpChain, ThresholdFormula) {
    const double thr = exp_threshold(s, ep);
    EXPECT_NEAR(thr, 1.0 / (ep.sobolev_constant * ep.sobolev_constant), 1e-12 * thr);
}

TEST_F(ExpChain, GradientEstimateHolds) {
    const double thr = exp_threshold(s, ep);
    for (double frac : {0.1, 0.5, 0.9})
        for (double alpha : {0.0, 0.01, 0.1}) {
            const auto r = verify_exp_gradient_estimate(u.values(), s, frac * thr, alpha);
            EXPECT_TRUE(r.holds) << frac << " " << alpha << " ratio " << r.ratio;
        }
}

TEST_F(ExpChain, NormBoundHoldsAndMarginShrinks) {
    const double thr = exp_threshold(s, ep);
    double last = 2.0;
    for (double frac : {0.25, 0.5, 0.75}) {
        const auto r = verify_exp_norm_bound(u.values(), s, frac * thr, 0.0, ep);
        EXPECT_TRUE(r.holds);
        EXPECT_NEAR(r.margin, 1.0 - frac, 1e-12);
        EXPECT_LT(r.margin, last);
        last = r.margin;
    }
    EXPECT_THROW(verify_exp_norm_bound(u.values(), s, thr, 0.0, ep), InvalidArgument);
    EXPECT_THROW(verify_exp_norm_bound(u.values(), s, 0.0, 0.0, ep), InvalidArgument);
}

TEST_F(ExpChain, EmptySuperlevelSetIsVacuous) {
    const double thr = exp_threshold(s, ep);
    const auto r = verify_exp_norm_bound(u.values(), s, 0.5 * thr, 1e6, ep);
    EXPECT_EQ(r.lhs, 0.0);
    EXPECT_TRUE(r.holds);
}

TEST_F(ExpChain, IntegrabilityMonotoneInGamma) {
    const double gstar = 4.0 * exp_threshold(s, ep);
    double last = 0.0;
    for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const auto r = verify_exp_integrability(u.values(), s, frac * gstar, ep);
        EXPECT_TRUE(r.admissible);
        EXPECT_TRUE(r.holds);
        EXPECT_GT(r.lhs, last);
        EXPECT_NEAR(r.constant, std::pow(1.0 - frac, -4.0), 1e-9 * r.constant);
        last = r.lhs;
    }
    const auto out = verify_exp_integrability(u.values(), s, 1.5 * gstar, ep);
    EXPECT_FALSE(out.admissible);
}

TEST_F(ExpChain, RejectsAbsorption) {
    auto t = s;
    t.tau = GridFunction::constant(t.grid, 1.0);
    EXPECT_THROW(verify_exp_gradient_estimate(u.values(), t, 0.1, 0.0), InvalidArgument);
    EXPECT_THROW(verify_exp_norm_bound(u.values(), t, 0.1, 0.0, ep), InvalidArgument);
    EXPECT_THROW(verify_exp_integrability(u.values(), t, 0.1, ep), InvalidArgument);
}

TEST(ExpZeroData, EverythingIsTrivial) {
    const auto s = unit_problem(32, 3.0, 0.0);
    const auto u = solve(s).u;
    const ExpParams ep{2.0, 0.4};
    EXPECT_TRUE(std::isinf(exp_threshold(s, ep)));
    const auto r = verify_exp_integrability(u.values(), s, 50.0, ep);
    EXPECT_TRUE(r.admissible);
    EXPECT_NEAR(r.lhs, 1.0, 1e-14);
    EXPECT_EQ(r.constant, 1.0);
    EXPECT_TRUE(r.holds);
}
