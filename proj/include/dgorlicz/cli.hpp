#pragma once

// Config-driven experiment runner behind the dgorlicz command-line tool.
// Exit codes: 0 all assertions pass, 1 an assertion fails, 2 configuration error.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dgorlicz/config.hpp"
#include "dgorlicz/csv.hpp"
#include "dgorlicz/degiorgi.hpp"
#include "dgorlicz/error.hpp"
#include "dgorlicz/grid.hpp"
#include "dgorlicz/orlicz.hpp"
#include "dgorlicz/pdesolve.hpp"
#include "dgorlicz/young.hpp"

namespace dgorlicz::cli {

enum ExitCode : int { kPass = 0, kAssertionFailed = 1, kConfigError = 2 };

inline constexpr const char* kOutEnv = "DGORLICZ_OUT";

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
};

/// --out, then $DGORLICZ_OUT, then [output] dir.
inline std::filesystem::path resolve_out_dir(const config::ExperimentConfig& c, const Overrides& o) {
    if (o.out) return *o.out;
    if (const char* env = std::getenv(kOutEnv); env && *env) return env;
    return c.out_dir;
}

namespace detail {

using config::ExperimentConfig;

struct Setup {
    WeightedGrid grid;
    GridFunction f;
};

inline Setup build_setup(const ExperimentConfig& c) {
    if (!c.grid.input.empty()) {
        auto path = std::filesystem::path(c.grid.input);
        if (path.is_relative()) path = c.base_dir / path;
        auto data = csv::read_grid(path);
        return {std::move(data.grid), GridFunction(std::move(data.values))};
    }
    const double p = c.problem.p;
    const double vmin = c.grid.v_min;
    const bool degenerate = c.grid.matrix == "degenerate";
    WeightedGrid::MatrixFn q = [degenerate](const Vec2& x) {
        return degenerate ? SymMatrix2::diag(1.0, x[0] * x[0]) : SymMatrix2::identity();
    };
    WeightedGrid::WeightFn v = [compatible = c.grid.weight == "compatible", q, p, vmin](const Vec2& x) {
        return compatible ? std::max(std::pow(q(x).op_norm(), 0.5 * p), vmin) : 1.0;
    };
    WeightedGrid g = c.grid.dim == 1 ? WeightedGrid::interval(c.grid.lower, c.grid.upper, c.grid.n, v, q)
                                     : WeightedGrid::square(c.grid.lower, c.grid.upper, c.grid.n, v, q);
    const double len = c.grid.upper - c.grid.lower;
    const double a = c.grid.lower;
    const int dim = c.grid.dim;
    const double amp = c.problem.f;
    GridFunction f = c.problem.f_shape == "constant"
                         ? GridFunction::constant(g, amp)
                         : GridFunction::sample(g, [&](const Vec2& x) {
                               double s = amp * std::sin(std::numbers::pi * (x[0] - a) / len);
                               if (dim == 2) s *= std::sin(std::numbers::pi * (x[1] - a) / len);
                               return s;
                           });
    return {std::move(g), std::move(f)};
}

inline ProblemSpec build_problem(const ExperimentConfig& c, const Setup& s) {
    ProblemSpec spec{s.grid, c.problem.p, GridFunction::constant(s.grid, c.problem.tau), s.f, c.problem.epsilon};
    spec.validate();
    return spec;
}

inline double sobolev_constant(const ExperimentConfig& c, const WeightedGrid& g) {
    if (c.sobolev.constant > 0.0) return c.sobolev.constant;
    return estimate_sobolev_constant(g, c.problem.p, c.problem.sigma, c.sobolev.trials, c.seed).constant;
}

inline std::string flag(bool b) { return b ? "1" : "0"; }

class Summary {
public:
    void add(const std::string& key, double v) { rows_.push_back({key, csv::format(v)}); }
    void add(const std::string& key, const std::string& v) { rows_.push_back({key, v}); }
    void write(const std::filesystem::path& dir, std::uint64_t hash) const {
        csv::Writer w(dir / "summary.csv", hash, {"key", "value"});
        for (const auto& r : rows_) w.row(r);
    }

private:
    std::vector<std::vector<std::string>> rows_;
};

inline void write_trace(const std::filesystem::path& path, std::uint64_t hash, const LevelSetTrace& tr) {
    csv::Writer w(path, hash, {"k", "s_k", "v_k", "increment"});
    for (std::size_t k = 0; k < tr.terms(); ++k)
        w.row({static_cast<double>(k), tr.s[k], std::exp(tr.log_v[k]), tr.increments[k]});
}

// --- commands ---------------------------------------------------------------

inline int check_condition(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const auto gamma = c.young.build();
    Summary sum;
    sum.add("young", gamma.describe());
    sum.add("p", c.problem.p);
    sum.add("sigma", c.problem.sigma);
    ConditionReport rep;
    try {
        rep = check_data_condition(gamma, c.problem.p, c.problem.sigma);
    } catch (const Inconclusive& e) {
        sum.add("verdict", "Inconclusive");
        sum.write(out, c.hash());
        log << "check-condition: Inconclusive: " << e.what() << "\n";
        return kAssertionFailed;
    }
    sum.add("verdict", to_string(rep.verdict));
    sum.add("value", rep.value);
    sum.add("tail_exponent", rep.tail_exponent);
    sum.add("scale", static_cast<double>(rep.scale));
    sum.add("truncation_error", rep.truncation_error);
    sum.add("quadrature_error", rep.quadrature_error);
    sum.write(out, c.hash());
    log << "check-condition: " << to_string(rep.verdict);
    if (rep.verdict == Verdict::convergent) log << " value=" << csv::format(rep.value);
    log << " tail_exponent=" << csv::format(rep.tail_exponent) << "\n";
    if (c.expect && *c.expect != to_string(rep.verdict)) {
        log << "check-condition: expected " << *c.expect << "\n";
        return kAssertionFailed;
    }
    return kPass;
}

inline int luxemburg(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const auto gamma = c.young.build();
    const auto s = build_setup(c);
    const auto& g = s.grid;
    const double norm = luxemburg_norm(s.f, gamma, g);
    std::vector<double> absf(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) absf[i] = std::abs(s.f[i]);
    auto th = quantile_thresholds(absf, g, c.degiorgi.levels);
    th.erase(std::remove_if(th.begin(), th.end(), [](double a) { return !(a > 0.0); }), th.end());
    th.erase(std::unique(th.begin(), th.end()), th.end());
    csv::Writer w(out / "levels.csv", c.hash(), {"alpha", "v_alpha", "closed_form", "bisection", "rel_diff", "chebyshev_ratio"});
    double worst = 0.0;
    bool cheb_ok = true;
    for (double a : th) {
        const auto ls = superlevel_abs(s.f.values(), g, a);
        std::vector<double> chi(ls.indicator.begin(), ls.indicator.end());
        const double closed = characteristic_norm(ls, gamma);
        const double bis = luxemburg_norm(chi, gamma, g);
        const double rel = closed > 0.0 ? std::abs(closed - bis) / closed : std::abs(bis);
        const auto cheb = verify_chebyshev(s.f.values(), a, gamma, g);
        worst = std::max(worst, rel);
        cheb_ok = cheb_ok && cheb.holds;
        w.row({a, ls.measure, closed, bis, rel, cheb.ratio});
    }
    Summary sum;
    sum.add("young", gamma.describe());
    sum.add("luxemburg_norm", norm);
    sum.add("modular_at_norm", norm > 0.0 ? modular(s.f.values(), gamma, g, norm) : 0.0);
    sum.add("sup_norm", sup_norm(s.f.values(), g));
    sum.add("levels", static_cast<double>(th.size()));
    sum.add("worst_indicator_rel_diff", worst);
    sum.add("chebyshev_holds", flag(cheb_ok));
    sum.write(out, c.hash());
    log << "luxemburg: norm=" << csv::format(norm) << " worst indicator rel diff=" << csv::format(worst) << "\n";
    return worst <= 1e-8 && cheb_ok ? kPass : kAssertionFailed;
}

inline int solve_cmd(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const auto s = build_setup(c);
    const auto spec = build_problem(c, s);
    SolveResult r;
    try {
        r = solve(spec, c.solver);
    } catch (const SolveFailure& e) {
        csv::write_grid(out / "solution.csv", c.hash(), spec.grid, e.best_iterate());
        log << "solve: " << e.what() << "\n";
        return kAssertionFailed;
    }
    csv::write_grid(out / "solution.csv", c.hash(), spec.grid, r.u.values());
    const double sup = sup_norm(r.u.values(), spec.grid);
    Summary sum;
    sum.add("iterations", static_cast<double>(r.iterations));
    sum.add("energy", r.energy);
    sum.add("residual", r.residual_norm);
    sum.add("sup_norm", sup);
    sum.add("h", spec.grid.h());
    sum.add("weight_constant", spec.grid.weight_constant(spec.p));
    sum.write(out, c.hash());
    log << "solve: sup=" << csv::format(sup) << " iterations=" << r.iterations
        << " residual=" << csv::format(r.residual_norm) << "\n";
    if (c.expect_sup && std::abs(sup - *c.expect_sup) > c.expect_tol) {
        log << "solve: expected sup " << csv::format(*c.expect_sup) << " +- " << csv::format(c.expect_tol) << "\n";
        return kAssertionFailed;
    }
    return kPass;
}

inline IterationParams iteration_params(const ExperimentConfig& c) {
    return IterationParams::make(c.problem.p, c.problem.sigma, c.degiorgi.rho, c.young.build(), c.degiorgi.tol);
}

inline int degiorgi_trace(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const auto ip = iteration_params(c);
    LevelSetTrace tr;
    try {
        tr = run_abstract_iteration(ip, c.degiorgi.kmax);
    } catch (const Inconsistency& e) {
        log << "degiorgi-trace: " << e.what() << "\n";
        return kAssertionFailed;
    }
    write_trace(out / "trace.csv", c.hash(), tr);
    Summary sum;
    sum.add("young", ip.gamma.describe());
    sum.add("rho", ip.rho);
    sum.add("terms", static_cast<double>(tr.terms()));
    sum.add("sup_bound", tr.sup_bound);
    sum.add("tail_bound", tr.tail_bound);
    sum.add("integral_bound", tr.integral_bound);
    sum.add("summable", flag(tr.summable));
    sum.write(out, c.hash());
    log << "degiorgi-trace: terms=" << tr.terms() << " sup_bound=" << csv::format(tr.sup_bound)
        << " integral_bound=" << csv::format(tr.integral_bound) << (tr.summable ? "" : " (divergent)") << "\n";
    return kPass;
}

inline int verify_bound(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const auto ip = iteration_params(c);
    LevelSetTrace tr;
    try {
        tr = run_abstract_iteration(ip, c.degiorgi.kmax);
    } catch (const Inconsistency& e) {
        log << "verify-bound: " << e.what() << "\n";
        return kAssertionFailed;
    }
    write_trace(out / "trace.csv", c.hash(), tr);
    Summary sum;
    sum.add("young", ip.gamma.describe());
    sum.add("rho", ip.rho);
    sum.add("terms", static_cast<double>(tr.terms()));
    sum.add("sup_bound", tr.sup_bound);
    sum.add("integral_bound", tr.integral_bound);
    sum.add("summable", flag(tr.summable));
    if (!tr.summable) {
        sum.write(out, c.hash());
        log << "verify-bound: level-set series diverges for " << ip.gamma.describe() << " (partial sum "
            << csv::format(tr.sup_bound) << " after " << tr.terms() << " terms)\n";
        return kAssertionFailed;
    }
    const auto s = build_setup(c);
    const auto spec = build_problem(c, s);
    const auto res = solve(spec, c.solver);
    const double cs = sobolev_constant(c, spec.grid);
    const auto th = quantile_thresholds(res.u.values(), spec.grid, c.degiorgi.levels);
    const auto rec = verify_measure_recursion(res.u.values(), spec.f.values(), spec.grid, ip, cs, th);
    {
        csv::Writer w(out / "levels.csv", c.hash(), {"alpha", "v_alpha"});
        for (const auto& ls : level_sets(res.u.values(), spec.grid, th)) w.row({ls.threshold, ls.measure});
    }
    const auto sweep = sup_bound_sweep(spec, ip, c.degiorgi.lambdas, cs, c.solver);
    {
        csv::Writer w(out / "scaling.csv", c.hash(), {"lambda", "sup_u", "f_norm", "ratio", "bound"});
        for (const auto& row : sweep.rows)
            w.row({row.lambda, row.bound.sup_u, row.bound.f_norm, row.bound.ratio, sweep.theoretical_constant});
    }
    sum.add("sobolev_constant", cs);
    sum.add("recursion_pairs", static_cast<double>(rec.pairs_checked));
    sum.add("recursion_violations", static_cast<double>(rec.violations));
    sum.add("recursion_worst_ratio", rec.worst_ratio);
    sum.add("recursion_constant", rec.constant);
    sum.add("sup_ratio_bound", sweep.theoretical_constant);
    sum.add("sup_ratio_spread", sweep.spread);
    sum.add("sup_ratio_bounded", flag(sweep.bounded));
    sum.write(out, c.hash());
    log << "verify-bound: sup_bound=" << csv::format(tr.sup_bound) << " <= " << csv::format(tr.integral_bound)
        << "; recursion worst ratio " << csv::format(rec.worst_ratio) << " over " << rec.pairs_checked
        << " pairs; sup ratio " << csv::format(sweep.rows.front().bound.ratio) << " (spread "
        << csv::format(sweep.spread) << ")\n";
    return rec.holds && sweep.bounded ? kPass : kAssertionFailed;
}

inline int exp_integrability(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    const auto s = build_setup(c);
    const auto spec = build_problem(c, s);
    if (!spec.tau_vanishes()) throw config::ConfigError(0, "exp-integrability requires [problem] tau = 0");
    const auto res = solve(spec, c.solver);
    const auto u = res.u.values();
    const double cs = sobolev_constant(c, spec.grid);
    const ExpParams ep{c.problem.sigma, cs};
    const double thr = exp_threshold(spec, ep);
    Summary sum;
    sum.add("sobolev_constant", cs);
    sum.add("threshold", thr);
    if (!std::isfinite(thr)) {
        sum.write(out, c.hash());
        log << "exp-integrability: f vanishes, every exponent is admissible\n";
        return kPass;
    }
    bool ok = true;
    csv::Writer w(out / "exp.csv", c.hash(), {"kind", "fraction", "xi", "alpha", "gamma", "lhs", "rhs", "margin", "holds"});
    auto row = [&](const char* kind, double frac, double xi, double alpha, double gamma, double lhs, double rhs,
                   double margin, bool holds) {
        w.row({std::string(kind), csv::format(frac), csv::format(xi), csv::format(alpha), csv::format(gamma),
               csv::format(lhs), csv::format(rhs), csv::format(margin), flag(holds)});
        ok = ok && holds;
    };
    for (double fr : c.exp.xi_fractions)
        for (double a : c.exp.alphas) {
            const auto r = verify_exp_gradient_estimate(u, spec, fr * thr, a);
            row("gradient", fr, fr * thr, a, 0.0, r.lhs, r.rhs, r.rhs - r.lhs, r.holds);
        }
    double prev_margin = numerics::kInf;
    auto fracs = c.exp.bound_fractions;
    std::sort(fracs.begin(), fracs.end());
    bool shrinking = true;
    for (double fr : fracs) {
        const auto r = verify_exp_norm_bound(u, spec, fr * thr, 0.0, ep);
        row("norm", fr, fr * thr, 0.0, 0.0, r.lhs, r.rhs, r.margin, r.holds);
        shrinking = shrinking && r.margin < prev_margin;
        prev_margin = r.margin;
    }
    const double ps = spec.p * c.problem.sigma;
    const auto ir = verify_exp_integrability(u, spec, c.exp.gamma_fraction * ps * thr, ep);
    row("integrability", c.exp.gamma_fraction, ir.xi, 0.0, ir.gamma, ir.lhs, ir.rhs, ir.constant, ir.holds && ir.admissible);
    sum.add("margin_shrinking", flag(shrinking));
    sum.add("integrability_constant", ir.constant);
    sum.add("all_hold", flag(ok && shrinking));
    sum.write(out, c.hash());
    log << "exp-integrability: threshold=" << csv::format(thr) << " C=" << csv::format(ir.constant)
        << (ok && shrinking ? " all inequalities hold" : " VIOLATION") << "\n";
    return ok && shrinking ? kPass : kAssertionFailed;
}

int run_command(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log);

inline int sweep(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    struct Job {
        double rho, q, lambda;
    };
    const std::vector<double> rhos = c.sweep.rho.empty() ? std::vector<double>{c.degiorgi.rho} : c.sweep.rho;
    const std::vector<double> qs =
        c.sweep.log_exponent.empty() ? std::vector<double>{c.young.log_exponent} : c.sweep.log_exponent;
    const std::vector<double> lams = c.sweep.lambda.empty() ? std::vector<double>{1.0} : c.sweep.lambda;
    std::vector<Job> jobs;
    for (double r : rhos)
        for (double q : qs)
            for (double l : lams) jobs.push_back({r, q, l});

    struct Outcome {
        int code = 0;
        std::string log;
    };
    std::vector<Outcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            ExperimentConfig sub = c;
            sub.command = c.sweep.command;
            sub.degiorgi.rho = jobs[i].rho;
            sub.young.log_exponent = jobs[i].q;
            sub.problem.f *= jobs[i].lambda;
            sub.seed = c.seed + i;
            sub.canonical += "sweep.job=" + csv::format(jobs[i].rho) + "," + csv::format(jobs[i].q) + "," +
                             csv::format(jobs[i].lambda) + "\n";
            std::ostringstream os;
            const auto dir = out / ("run_" + std::to_string(i));
            try {
                std::filesystem::create_directories(dir);
                outcomes[i].code = run_command(sub, dir, os);
            } catch (const std::exception& e) {
                os << "run " << i << ": " << e.what() << "\n";
                outcomes[i].code = dynamic_cast<const InvalidArgument*>(&e) ? kConfigError : kAssertionFailed;
            }
            outcomes[i].log = os.str();
        }
    };
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const std::size_t nworkers =
        std::min<std::size_t>(jobs.size(), c.sweep.workers > 0 ? static_cast<std::size_t>(c.sweep.workers) : hw);
    std::vector<std::future<void>> futs;
    for (std::size_t w = 0; w < nworkers; ++w) futs.push_back(std::async(std::launch::async, worker));
    for (auto& f : futs) f.get();

    int code = kPass;
    csv::Writer w(out / "sweep.csv", c.hash(), {"run", "rho", "log_exponent", "lambda", "exit_code"});
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        w.row({static_cast<double>(i), jobs[i].rho, jobs[i].q, jobs[i].lambda, static_cast<double>(outcomes[i].code)});
        log << "[run_" << i << "] " << outcomes[i].log;
        code = std::max(code, outcomes[i].code);
    }
    return code;
}

inline int run_command(const ExperimentConfig& c, const std::filesystem::path& out, std::ostream& log) {
    std::filesystem::create_directories(out);
    if (c.command == "check-condition") return check_condition(c, out, log);
    if (c.command == "luxemburg") return luxemburg(c, out, log);
    if (c.command == "solve") return solve_cmd(c, out, log);
    if (c.command == "degiorgi-trace") return degiorgi_trace(c, out, log);
    if (c.command == "verify-bound") return verify_bound(c, out, log);
    if (c.command == "exp-integrability") return exp_integrability(c, out, log);
    if (c.command == "sweep") return sweep(c, out, log);
    throw config::ConfigError(0, "unknown command '" + c.command + "'");
}

}  // namespace detail

/// Runs a parsed configuration. Library exceptions map to exit codes:
/// InvalidArgument (including ConfigError) -> 2, any other failure -> 1.
inline int run(config::ExperimentConfig c, const Overrides& o, std::ostream& log, std::ostream& err) {
    if (o.seed) c.seed = *o.seed;
    const auto out = resolve_out_dir(c, o);
    try {
        return detail::run_command(c, out, log);
    } catch (const InvalidArgument& e) {
        err << "error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << "\n";
        return kAssertionFailed;
    }
}

/// Loads and runs a configuration file.
inline int run_file(const std::filesystem::path& config_path, const Overrides& o, std::ostream& log,
                    std::ostream& err) {
    config::ExperimentConfig c;
    try {
        c = config::load(config_path);
    } catch (const config::ConfigError& e) {
        err << config_path.string() << ": " << e.what() << "\n";
        return kConfigError;
    }
    return run(std::move(c), o, log, err);
}

}  // namespace dgorlicz::cli
