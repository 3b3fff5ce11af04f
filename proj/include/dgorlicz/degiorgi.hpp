#pragma once

// Level-set iteration: thresholds s_k with worst-case measures v_k = rho^{-k},
//   s_{k+1} = s_k + v_k^{1/((p-1) sigma')} Gamma^{-1}(1/v_k)^{1/(p-1)},
// the integral bound on its limit, and checks of the measure recursion and
// the sup bound on computed solutions.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "dgorlicz/error.hpp"
#include "dgorlicz/grid.hpp"
#include "dgorlicz/numerics.hpp"
#include "dgorlicz/orlicz.hpp"
#include "dgorlicz/pdesolve.hpp"
#include "dgorlicz/young.hpp"

namespace dgorlicz {

struct IterationParams {
    double p = 2.0;
    double sigma = 2.0;
    double sigma_prime = 2.0;
    double rho = 2.0;
    YoungFunction gamma;
    double tol = 1e-300;  // stop once v_k < tol

    static IterationParams make(double p, double sigma, double rho, YoungFunction gamma, double tol = 1e-300) {
        IterationParams ip{p, sigma, numerics::dual_exponent(sigma), rho, std::move(gamma), tol};
        ip.validate();
        return ip;
    }

    void validate() const {
        if (!(p > 1.0)) throw InvalidArgument("IterationParams: p must exceed 1");
        if (!(sigma > 1.0)) throw InvalidArgument("IterationParams: sigma must exceed 1");
        if (sigma_prime != numerics::dual_exponent(sigma))
            throw InvalidArgument("IterationParams: sigma' must equal sigma/(sigma-1)");
        if (!(rho > 1.0)) throw InvalidArgument("IterationParams: rho must exceed 1");
        if (!(tol > 0.0) || !(tol < 1.0)) throw InvalidArgument("IterationParams: tol must lie in (0, 1)");
        if (std::abs(gamma(1.0) - 1.0) > 1e-12)
            throw InvalidArgument("IterationParams: Gamma must be normalised, Gamma(1) = 1");
    }
};

/// rho^{-t/((p-1) sigma')} Gamma^{-1}(rho^t)^{1/(p-1)}, evaluated in logs.
inline double iteration_term(const IterationParams& ip, double t) {
    const double lr = t * std::log(ip.rho);
    return std::exp(-lr / ((ip.p - 1.0) * ip.sigma_prime) + ip.gamma.log_inverse_at_log(lr) / (ip.p - 1.0));
}

struct LevelSetTrace {
    std::vector<double> s;           // s_0 = 0, s_1, ..., s_K
    std::vector<double> log_v;       // log v_k = -k log rho, k < K
    std::vector<double> increments;  // s_{k+1} - s_k
    double sup_bound = 0.0;          // s_K
    double tail_bound = 0.0;         // bound on the neglected sum past K; +inf when not summable
    double integral_bound = numerics::kInf;
    bool summable = true;

    std::size_t terms() const { return increments.size(); }
};

/// 1 + (1/log rho) ∫_1^∞ (Γ'/Γ)(s/Γ^{1/σ'})^{1/(p-1)} ds; +inf for a divergent Γ.
inline double integral_bound(const IterationParams& ip, const DataConditionOptions& opt = {}) {
    ip.validate();
    const auto rep = check_data_condition(ip.gamma, ip.p, ip.sigma, opt);
    if (rep.verdict == Verdict::divergent) return numerics::kInf;
    return 1.0 + rep.value / std::log(ip.rho);
}

/// Runs the recursion until v_k < tol or k = kmax. For a divergent Γ the
/// trace is returned with summable = false (its partial sums witness the
/// divergence); for a convergent Γ, partial sums exceeding the integral
/// bound raise Inconsistency.
inline LevelSetTrace run_abstract_iteration(const IterationParams& ip, std::size_t kmax,
                                            const DataConditionOptions& opt = {}) {
    ip.validate();
    if (kmax == 0) throw InvalidArgument("run_abstract_iteration: kmax must be positive");
    LevelSetTrace tr;
    tr.integral_bound = integral_bound(ip, opt);
    tr.summable = std::isfinite(tr.integral_bound);
    const double lr = std::log(ip.rho);
    const double log_tol = std::log(ip.tol);
    tr.s.push_back(0.0);
    for (std::size_t k = 0; k < kmax; ++k) {
        const double lv = -static_cast<double>(k) * lr;
        if (lv < log_tol) break;
        const double inc = iteration_term(ip, static_cast<double>(k));
        tr.log_v.push_back(lv);
        tr.increments.push_back(inc);
        tr.s.push_back(tr.s.back() + inc);
    }
    tr.sup_bound = tr.s.back();
    if (!tr.summable) {
        tr.tail_bound = numerics::kInf;
        return tr;
    }
    const double k_last = static_cast<double>(tr.terms()) - 1.0;
    const double s0 = ip.gamma.log_inverse_at_log(k_last * lr);
    tr.tail_bound = detail::condition_integral_from(ip.gamma, ip.p, ip.sigma_prime, s0, opt).value / lr;
    if (tr.sup_bound > tr.integral_bound * (1.0 + 1e-9)) {
        std::ostringstream os;
        os << "run_abstract_iteration: partial sum " << tr.sup_bound << " exceeds the integral bound "
           << tr.integral_bound << " for " << ip.gamma.describe();
        throw Inconsistency(os.str());
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Exponent algebra
// ---------------------------------------------------------------------------

/// (p sigma - 1) / (p sigma - sigma), the power of v_alpha in the recursion.
inline double recursion_exponent(double p, double sigma) { return (p * sigma - 1.0) / (p * sigma - sigma); }

/// |(pσ-1)/(pσ(p-1)) + 1 - 1/(pσ) - (pσ-1)/(pσ-σ)|
inline double exponent_identity_residual(double p, double sigma) {
    const double ps = p * sigma;
    return std::abs((ps - 1.0) / (ps * (p - 1.0)) + 1.0 - 1.0 / ps - recursion_exponent(p, sigma));
}

/// max of |1/((p-1)σ') - (σ-1)/(σ(p-1))| and |(pσ-1)/(σ(p-1)) - (σ-1)/(σ(p-1)) - 1|.
inline double decay_identity_residual(double p, double sigma) {
    const double sp = numerics::dual_exponent(sigma);
    const double a = (sigma - 1.0) / (sigma * (p - 1.0));
    return std::max(std::abs(1.0 / ((p - 1.0) * sp) - a),
                    std::abs((p * sigma - 1.0) / (sigma * (p - 1.0)) - a - 1.0));
}

/// (4 C_s^p)^{1/(p-1)}
inline double recursion_constant(double p, double sobolev_constant) {
    return std::pow(4.0 * std::pow(sobolev_constant, p), 1.0 / (p - 1.0));
}

// ---------------------------------------------------------------------------
// Checks on computed solutions
// ---------------------------------------------------------------------------

/// `count` thresholds at the v-weighted quantiles i/(count-1) of u.
inline std::vector<double> quantile_thresholds(std::span<const double> u, const WeightedGrid& g, std::size_t count = 32) {
    if (u.size() != g.size()) throw InvalidArgument("quantile_thresholds: size mismatch");
    if (count < 2) throw InvalidArgument("quantile_thresholds: need at least two levels");
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < g.size(); ++i)
        if (g.mass(i) > 0.0) idx.push_back(i);
    if (idx.empty()) throw InvalidArgument("quantile_thresholds: grid has no mass");
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return u[a] < u[b]; });
    double total = 0.0;
    for (auto i : idx) total += g.mass(i);
    std::vector<double> out;
    out.reserve(count);
    double acc = 0.0;
    std::size_t j = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double target = total * static_cast<double>(k) / static_cast<double>(count - 1);
        while (j + 1 < idx.size() && acc + g.mass(idx[j]) < target) acc += g.mass(idx[j++]);
        out.push_back(u[idx[j]]);
    }
    return out;
}

struct RecursionReport {
    std::size_t pairs_checked = 0;
    std::size_t pairs_skipped = 0;  // v_alpha = 0 or beta <= alpha
    std::size_t violations = 0;
    double worst_ratio = 0.0;       // max lhs / rhs
    double constant = 0.0;          // (4 C_s^p)^{1/(p-1)}
    double f_norm = 0.0;            // ||f||_Gamma
    bool holds = true;
};

/// For every threshold pair beta > alpha:
///   (beta - alpha) v_beta <= C ||f||_Γ^{1/(p-1)} v_alpha^{(pσ-1)/(pσ-σ)} Γ^{-1}(1/v_alpha)^{1/(p-1)}.
inline RecursionReport verify_measure_recursion(std::span<const double> u, std::span<const double> f,
                                                const WeightedGrid& g, const IterationParams& ip,
                                                double sobolev_constant, std::span<const double> thresholds = {},
                                                double slack = kDefaultSlack) {
    ip.validate();
    if (u.size() != g.size() || f.size() != g.size())
        throw InvalidArgument("verify_measure_recursion: size mismatch");
    std::vector<double> th(thresholds.begin(), thresholds.end());
    if (th.empty()) th = quantile_thresholds(u, g);
    RecursionReport r;
    r.constant = recursion_constant(ip.p, sobolev_constant);
    r.f_norm = luxemburg_norm(f, ip.gamma, g);
    const double fpow = std::pow(r.f_norm, 1.0 / (ip.p - 1.0));
    const double ex = recursion_exponent(ip.p, ip.sigma);
    std::vector<double> meas(th.size());
    for (std::size_t i = 0; i < th.size(); ++i) meas[i] = level_set(u, g, th[i]).measure;
    for (std::size_t a = 0; a < th.size(); ++a) {
        for (std::size_t b = 0; b < th.size(); ++b) {
            if (!(th[b] > th[a]) || meas[a] == 0.0) {
                ++r.pairs_skipped;
                continue;
            }
            ++r.pairs_checked;
            const double lhs = (th[b] - th[a]) * meas[b];
            const double rhs = r.constant * fpow * std::pow(meas[a], ex) *
                               std::pow(ip.gamma.inverse(1.0 / meas[a]), 1.0 / (ip.p - 1.0));
            const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 0.0 ? numerics::kInf : 0.0);
            r.worst_ratio = std::max(r.worst_ratio, ratio);
            if (lhs > rhs * (1.0 + slack)) ++r.violations;
        }
    }
    r.holds = r.violations == 0;
    return r;
}

struct SupBoundReport {
    double sup_u = 0.0;
    double f_norm = 0.0;    // ||f||_Gamma
    double ratio = 0.0;     // ||u||_inf / ||f||_Gamma^{1/(p-1)}
};

inline SupBoundReport empirical_sup_bound(std::span<const double> u, std::span<const double> f,
                                          const WeightedGrid& g, const IterationParams& ip) {
    ip.validate();
    SupBoundReport r;
    r.sup_u = sup_norm(u, g);
    r.f_norm = luxemburg_norm(f, ip.gamma, g);
    r.ratio = r.f_norm > 0.0 ? r.sup_u / std::pow(r.f_norm, 1.0 / (ip.p - 1.0)) : (r.sup_u > 0.0 ? numerics::kInf : 0.0);
    return r;
}

struct ScalingRow {
    double lambda = 1.0;
    SupBoundReport bound;
};

struct ScalingReport {
    std::vector<ScalingRow> rows;
    double theoretical_constant = 0.0;  // (4 C_s^p)^{1/(p-1)} rho (1 + I / log rho)
    double spread = 0.0;                // max relative deviation of the ratio from the first row
    bool bounded = true;                // every ratio <= theoretical_constant
};

/// Solves with f replaced by lambda f for each lambda and compares the sup ratios.
inline ScalingReport sup_bound_sweep(const ProblemSpec& spec, const IterationParams& ip,
                                     std::span<const double> lambdas, double sobolev_constant,
                                     const SolveOptions& opt = {}) {
    if (lambdas.empty()) throw InvalidArgument("sup_bound_sweep: no scaling factors");
    ScalingReport rep;
    rep.theoretical_constant = recursion_constant(ip.p, sobolev_constant) * ip.rho * integral_bound(ip);
    for (double lam : lambdas) {
        ProblemSpec s = spec;
        std::vector<double> fl(spec.f.values().begin(), spec.f.values().end());
        for (auto& x : fl) x *= lam;
        s.f = GridFunction(std::move(fl));
        const auto res = solve(s, opt);
        rep.rows.push_back({lam, empirical_sup_bound(res.u.values(), s.f.values(), s.grid, ip)});
    }
    const double r0 = rep.rows.front().bound.ratio;
    for (const auto& row : rep.rows) {
        rep.spread = std::max(rep.spread, std::abs(row.bound.ratio - r0) / r0);
        if (!(row.bound.ratio <= rep.theoretical_constant)) rep.bounded = false;
    }
    return rep;
}

}  // namespace dgorlicz
