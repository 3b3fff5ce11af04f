// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.
// Usage: acceptance [configs-dir]

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dgorlicz/cli.hpp"
#include "support.hpp"

using namespace dgorlicz;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::ostringstream detail;
    std::string failures;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            failures += " [failed: " + what + "]";
        }
    }
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

double sup_of(const GridFunction& u) { return *std::max_element(u.values().begin(), u.values().end()); }

// --- 1 ---------------------------------------------------------------------
void dichotomy(Outcome& o) {
    Stopwatch sw;
    for (double q : {2.25, 3.0, 5.0}) {
        const auto v = check_data_condition(make_log_bump(2.0, q), 2.0, 2.0).verdict;
        o.require(v == Verdict::convergent, "q=" + csv::format(q) + " not Convergent");
    }
    for (double q : {1.0, 2.0}) {
        const auto v = check_data_condition(make_log_bump(2.0, q), 2.0, 2.0).verdict;
        o.require(v == Verdict::divergent, "q=" + csv::format(q) + " not Divergent");
    }
    const double t = sw.seconds();
    o.require(t < 5.0, "runtime");
    o.detail << "q in {2.25,3,5} Convergent, q in {1,2} Divergent, " << t << " s";
}

// --- 2 ---------------------------------------------------------------------
void classical(Outcome& o) {
    // n = 4: sigma = 2, sigma' = 2; closed form q (p-1) sigma' / (q - sigma') for q > 2
    int checked = 0;
    double worst = 0.0;
    for (double q : {1.2, 1.5, 1.9, 2.0, 2.5, 3.0, 4.0, 6.0, 10.0}) {
        const bool expect = q > 2.0;
        const auto rep = check_data_condition(make_power(q), 2.0, 2.0);
        o.require((rep.verdict == Verdict::convergent) == expect, "verdict at q=" + csv::format(q));
        if (expect) {
            const double exact = q * 2.0 / (q - 2.0);
            worst = std::max(worst, std::abs(rep.value - exact) / exact);
        }
        ++checked;
    }
    o.require(worst < 1e-6, "closed-form value");
    o.detail << checked << " exponents, verdict iff q > 2, max rel value error " << worst;
}

// --- 3 ---------------------------------------------------------------------
void indicator(Outcome& o) {
    Stopwatch sw;
    std::mt19937_64 rng(3);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
        const auto g = dgtest::random_grid(rng, 64);
        const auto psi = dgtest::random_young(rng);
        std::vector<std::uint8_t> s(g.size(), 0);
        const double density = dgtest::uniform(rng, 0.05, 1.0);
        for (auto& x : s) x = dgtest::uniform(rng, 0.0, 1.0) < density ? 1 : 0;
        s[rng() % s.size()] = 1;
        const double closed = characteristic_norm(g.measure_of(s), psi);
        const double bis = luxemburg_norm(std::vector<double>(s.begin(), s.end()), psi, g);
        worst = std::max(worst, std::abs(bis - closed) / closed);
    }
    const double t = sw.seconds();
    o.require(worst <= 1e-8, "relative agreement");
    o.require(t < 10.0, "runtime");
    o.detail << "50 pairs, max rel diff " << worst << ", " << t << " s";
}

// --- 4 ---------------------------------------------------------------------
void inequalities(Outcome& o) {
    Stopwatch sw;
    std::mt19937_64 rng(4);
    constexpr int n = 200;
    int young = 0, sandwich = 0, holder = 0, cheb = 0, gholder = 0, embed = 0;
    auto log_uniform = [&](double lo, double hi) { return std::exp(dgtest::uniform(rng, std::log(lo), std::log(hi))); };
    for (int i = 0; i < n; ++i) {
        const auto psi = dgtest::random_young(rng);
        const auto conj = conjugate(psi);
        const double s = log_uniform(1e-3, 1e3), t = log_uniform(1e-3, 1e3);
        if (s * t > (psi(s) + conj(t)) * (1.0 + kDefaultSlack)) ++young;
        const double prod = psi.inverse(t) * conj.inverse(t);
        if (prod < t * (1.0 - 1e-9) || prod > 2.0 * t * (1.0 + 1e-9)) ++sandwich;
    }
    for (int i = 0; i < n; ++i) {
        const auto g = dgtest::random_grid(rng, 32);
        const auto psi = dgtest::random_young(rng);
        const auto f = dgtest::random_field(rng, g), h = dgtest::random_field(rng, g);
        if (!verify_holder(f, h, psi, g).holds) ++holder;
        const double fmax = sup_norm(f, g);
        if (fmax > 0.0 && !verify_chebyshev(f, dgtest::uniform(rng, 0.05, 1.0) * fmax, psi, g).holds) ++cheb;
    }
    for (int i = 0; i < n; ++i) {
        const auto g = dgtest::random_grid(rng, 32);
        const double r = dgtest::uniform(rng, 1.1, 3.0);
        const double w = dgtest::uniform(rng, 0.1, 0.9);
        const auto phi = make_power(r), p1 = make_power(r / w), p2 = make_power(r / (1.0 - w));
        const auto f = dgtest::random_field(rng, g), h = dgtest::random_field(rng, g);
        if (!verify_generalized_holder(f, h, phi, p1, p2, g).holds) ++gholder;
    }
    for (int i = 0; i < n; ++i) {
        const auto g = dgtest::random_grid(rng, 32);
        const auto gamma = make_log_bump(2.0, dgtest::uniform(rng, 2.5, 6.0));
        if (!verify_embedding(dgtest::random_field(rng, g), gamma, 2.0, 2.0, g).holds) ++embed;
    }
    const double t = sw.seconds();
    o.require(young + sandwich + holder + cheb + gholder + embed == 0, "violations");
    o.require(t < 60.0, "runtime");
    o.detail << n << " instances each; violations young=" << young << " sandwich=" << sandwich << " holder=" << holder
             << " chebyshev=" << cheb << " generalized=" << gholder << " embedding=" << embed << ", " << t << " s";
}

// --- 5 ---------------------------------------------------------------------
void solver(Outcome& o) {
    const auto g = WeightedGrid::unit_interval(256);
    const double h = 1.0 / 256.0;
    Stopwatch s2;
    const double sup2 = sup_of(solve(make_problem(g, 2.0, GridFunction::constant(g, 1.0))).u);
    const double t2 = s2.seconds();
    Stopwatch s3;
    const double sup3 = sup_of(solve(make_problem(g, 3.0, GridFunction::constant(g, 1.0), 1e-6)).u);
    const double t3 = s3.seconds();
    const double exact3 = (2.0 / 3.0) * std::pow(0.5, 1.5);
    o.require(std::abs(sup2 - 0.125) <= 2.0 * h * h, "p=2 sup");
    o.require(std::abs(sup3 - exact3) <= 0.01 * exact3, "p=3 sup");
    o.require(t2 < 30.0 && t3 < 30.0, "runtime");
    o.detail << "p=2 sup " << csv::format(sup2) << " (err " << std::abs(sup2 - 0.125) << "), p=3 sup "
             << csv::format(sup3) << " (rel err " << std::abs(sup3 - exact3) / exact3 << "), " << t2 << " s / " << t3
             << " s";
}

// --- 6 ---------------------------------------------------------------------
void homogeneity(Outcome& o) {
    const auto g = WeightedGrid::unit_interval(256);
    const double base = sup_of(solve(make_problem(g, 3.0, GridFunction::constant(g, 1.0))).u);
    for (double lam : {8.0, 64.0}) {
        const double s = sup_of(solve(make_problem(g, 3.0, GridFunction::constant(g, lam))).u);
        const double rel = std::abs(s / base - std::sqrt(lam)) / std::sqrt(lam);
        o.require(rel <= 5e-3, "lambda=" + csv::format(lam));
        o.detail << "lambda=" << lam << " ratio " << csv::format(s / base) << " (rel " << rel << ") ";
    }
}

// --- 7 ---------------------------------------------------------------------
void recursion(Outcome& o) {
    const auto g = WeightedGrid::unit_interval(256);
    const auto f = GridFunction::constant(g, 1.0);
    const auto u = solve(make_problem(g, 2.0, f)).u;
    const double cs = estimate_sobolev_constant(g, 2.0, 2.0, 200, 1).constant;
    const auto ip = IterationParams::make(2.0, 2.0, 2.0, make_log_bump(2.0, 3.0));
    const auto rep = verify_measure_recursion(u.values(), f.values(), g, ip, cs);
    o.require(rep.pairs_checked + rep.pairs_skipped == 32 * 32, "pair count");
    o.require(rep.holds, "recursion violations");
    std::mt19937_64 rng(7);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i)
        worst = std::max(worst, exponent_identity_residual(dgtest::uniform(rng, 1.05, 8.0), dgtest::uniform(rng, 1.05, 6.0)));
    o.require(worst <= 1e-12, "exponent identity");
    o.detail << rep.pairs_checked << " ordered pairs checked, " << rep.violations << " violations, worst ratio "
             << rep.worst_ratio << ", C_s " << csv::format(cs) << "; identity residual " << worst;
}

// --- 8 ---------------------------------------------------------------------
void degiorgi(Outcome& o) {
    std::mt19937_64 rng(8);
    int gammas = 0, runs = 0, over = 0;
    while (gammas < 20) {
        const auto kind = rng() % 3;
        const double q = dgtest::uniform(rng, 2.5, 6.0);
        const auto gamma = kind == 0 ? make_power(q) : kind == 1 ? make_log_bump(2.0, q) : make_iterated_log_bump(2, 2.0, q);
        if (check_data_condition(gamma, 2.0, 2.0).verdict != Verdict::convergent) continue;
        ++gammas;
        for (double rho : {1.5, 2.0, 4.0}) {
            ++runs;
            try {
                const auto tr = run_abstract_iteration(IterationParams::make(2.0, 2.0, rho, gamma), 100000);
                if (!(tr.sup_bound <= tr.integral_bound)) ++over;
            } catch (const Inconsistency&) {
                ++over;
            }
        }
    }
    o.require(over == 0, "sup_bound above integral_bound");
    o.detail << runs << " convergent runs, " << over << " above the integral bound; ";


    const auto quad = run_abstract_iteration(IterationParams::make(2.0, 2.0, 2.0, make_power(2.0)), 100000);
    o.require(std::abs(quad.sup_bound - 2.0) <= 1e-10, "Gamma=t^2 rho=2 sum equals 2");
    o.detail << "Gamma=t^2 rho=2: " << quad.terms() << " increments of " << csv::format(quad.increments.front())
             << ", partial sum " << csv::format(quad.sup_bound) << (quad.summable ? "" : " (not summable)") << "; ";

    const auto quartic = run_abstract_iteration(IterationParams::make(2.0, 2.0, 16.0, make_power(4.0)), 100000);
    o.detail << "Gamma=t^4 rho=16: sum " << csv::format(quartic.sup_bound);
}

// --- 9 ---------------------------------------------------------------------
void exponential(Outcome& o) {
    Stopwatch sw;
    const auto g = WeightedGrid::unit_interval(256);
    const auto s = make_problem(g, 2.0, GridFunction::constant(g, 1.0));
    const auto u = solve(s).u;
    const ExpParams ep{2.0, estimate_sobolev_constant(g, 2.0, 2.0, 200, 1).constant};
    const double thr = exp_threshold(s, ep);
    int grad_ok = 0;
    for (double frac : {0.1, 0.5})
        for (double alpha : {0.0, 0.1, 1.0}) grad_ok += verify_exp_gradient_estimate(u.values(), s, frac * thr, alpha).holds;
    o.require(grad_ok == 6, "gradient estimate");
    double last_margin = 1.0;
    int bound_ok = 0;
    for (double frac : {0.25, 0.5, 0.75, 0.9}) {
        const auto r = verify_exp_norm_bound(u.values(), s, frac * thr, 0.0, ep);
        bound_ok += r.holds && r.margin < last_margin;
        last_margin = r.margin;
    }
    o.require(bound_ok == 4, "norm bound with shrinking margin");
    const double gstar = 4.0 * thr;
    const auto integ = verify_exp_integrability(u.values(), s, 0.5 * gstar, ep);
    o.require(integ.admissible && integ.holds, "integrability");
    const double t = sw.seconds();
    o.require(t < 60.0, "runtime");
    o.detail << "gradient estimate " << grad_ok << "/6, norm bound " << bound_ok << "/4 (last margin "
             << csv::format(last_margin) << "), integral " << csv::format(integ.lhs) << " <= " << csv::format(integ.rhs)
             << " at gamma=" << csv::format(integ.gamma) << ", " << t << " s";
}

// --- 10 --------------------------------------------------------------------
std::vector<fs::path> files_under(const fs::path& root) {
    std::vector<fs::path> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out.push_back(fs::relative(e.path(), root));
    std::sort(out.begin(), out.end());
    return out;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void determinism(Outcome& o, const fs::path& configs) {
    std::vector<fs::path> inis;
    for (const auto& e : fs::directory_iterator(configs))
        if (e.path().extension() == ".ini") inis.push_back(e.path());
    std::sort(inis.begin(), inis.end());
    o.require(!inis.empty(), "no configs found in " + configs.string());
    const auto root = fs::temp_directory_path() / "dgorlicz_acceptance";
    fs::remove_all(root);
    std::size_t compared = 0;
    for (const auto& ini : inis) {
        int codes[2];
        fs::path dirs[2];
        for (int r = 0; r < 2; ++r) {
            dirs[r] = root / ini.stem() / ("run" + std::to_string(r));
            cli::Overrides ov;
            ov.out = dirs[r].string();
            std::ostringstream log, err;
            codes[r] = cli::run_file(ini, ov, log, err);
        }
        o.require(codes[0] == codes[1], ini.filename().string() + " exit codes differ");
        const auto a = files_under(dirs[0]), b = files_under(dirs[1]);
        o.require(a == b && !a.empty(), ini.filename().string() + " file sets differ");
        for (const auto& rel : a) {
            ++compared;
            o.require(slurp(dirs[0] / rel) == slurp(dirs[1] / rel), (ini.stem() / rel).string() + " differs");
        }
    }
    fs::remove_all(root);
    o.detail << inis.size() << " configs run twice, " << compared << " CSV files byte-compared";
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path configs = argc > 1 ? fs::path(argv[1]) : fs::path(DGORLICZ_CONFIG_DIR);
    const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
        {"data-condition dichotomy for log-bumps", dichotomy},
        {"classical power threshold", classical},
        {"indicator norm closed form", indicator},
        {"inequality property suite", inequalities},
        {"solver regression", solver},
        {"homogeneity exponent", homogeneity},
        {"measure recursion and exponent identity", recursion},
        {"De Giorgi sum bound", degiorgi},
        {"exponential integrability", exponential},
        {"determinism", [&](Outcome& o) { determinism(o, configs); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            criteria[i].second(o);
        } catch (const std::exception& e) {
            o.pass = false;
            o.failures += std::string(" [exception: ") + e.what() + "]";
        }
        failed += !o.pass;
        std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), (o.detail.str() + o.failures).c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria failed\n", failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
