#pragma once

// Experiment configuration: INI-style sections of `key = value` lines.
// '#' starts a comment. Unknown sections or keys, duplicates and malformed
// values are reported with the offending line number.
//
//   [run]       command, seed, expect, expect_sup, expect_tol
//   [young]     family (power | log-bump | iterated-log-bump), exponent, log_exponent, depth
//   [grid]      dim, n, lower, upper, matrix (identity | degenerate), weight (unit | compatible), v_min, input
//   [problem]   p, sigma, f, f_shape (constant | sine), tau, epsilon
//   [solver]    max_iterations, tol
//   [sobolev]   trials, constant (0 = estimate)
//   [degiorgi]  rho, kmax, tol, levels, lambdas
//   [exp]       xi_fractions, alphas, bound_fractions, gamma_fraction
//   [sweep]     command, rho, log_exponent, lambda, workers
//   [output]    dir

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dgorlicz/error.hpp"
#include "dgorlicz/numerics.hpp"
#include "dgorlicz/pdesolve.hpp"
#include "dgorlicz/young.hpp"

namespace dgorlicz::config {

class ConfigError : public InvalidArgument {
public:
    ConfigError(int line, const std::string& msg)
        : InvalidArgument(line > 0 ? "config line " + std::to_string(line) + ": " + msg : "config: " + msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> c{"check-condition", "luxemburg",         "solve", "degiorgi-trace",
                                            "verify-bound",    "exp-integrability", "sweep"};
    return c;
}

struct YoungSpec {
    std::string family = "log-bump";
    double exponent = 2.0;
    double log_exponent = 3.0;
    int depth = 1;

    YoungFunction build() const {
        if (family == "power") return make_power(exponent);
        if (family == "log-bump") return make_log_bump(exponent, log_exponent);
        return make_iterated_log_bump(depth, exponent, log_exponent);
    }
};

struct GridSpec {
    int dim = 1;
    std::size_t n = 256;
    double lower = 0.0;
    double upper = 1.0;
    std::string matrix = "identity";
    std::string weight = "unit";
    double v_min = 1e-8;
    std::string input;  // grid CSV; overrides the lattice keys and supplies f
};

struct ProblemParams {
    double p = 2.0;
    double sigma = 2.0;
    double f = 1.0;
    std::string f_shape = "constant";
    double tau = 0.0;
    double epsilon = 0.0;
};

struct SobolevSpec {
    int trials = 200;
    double constant = 0.0;
};

struct DegiorgiSpec {
    double rho = 2.0;
    std::size_t kmax = 100000;
    double tol = 1e-300;
    std::size_t levels = 32;
    std::vector<double> lambdas{1.0, 8.0, 64.0};  // f-scaling factors for the sup ratio
};

struct ExpSpec {
    std::vector<double> xi_fractions{0.1, 0.5};
    std::vector<double> alphas{0.0, 0.1, 1.0};
    std::vector<double> bound_fractions{0.25, 0.5, 0.75};
    double gamma_fraction = 0.5;
};

struct SweepSpec {
    std::string command = "verify-bound";
    std::vector<double> rho;
    std::vector<double> log_exponent;
    std::vector<double> lambda;
    int workers = 0;  // 0: hardware concurrency
};

struct ExperimentConfig {
    std::string command;
    std::uint64_t seed = 0;
    std::optional<std::string> expect;
    std::optional<double> expect_sup;
    double expect_tol = 1e-6;
    YoungSpec young;
    GridSpec grid;
    ProblemParams problem;
    SolveOptions solver;
    SobolevSpec sobolev;
    DegiorgiSpec degiorgi;
    ExpSpec exp;
    SweepSpec sweep;
    std::string out_dir = "out";
    std::filesystem::path base_dir;  // relative paths resolve here

    /// Canonical "section.key=value" lines (output.dir excluded), sorted.
    std::string canonical;

    /// Hash of the canonical text and the effective seed.
    std::uint64_t hash() const { return numerics::fnv1a(canonical + "seed=" + std::to_string(seed) + "\n"); }
};

namespace detail {

struct Entry {
    std::string value;
    int line = 0;
};

using Table = std::map<std::string, Entry>;  // "section.key"

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline const std::map<std::string, std::set<std::string>>& schema() {
    static const std::map<std::string, std::set<std::string>> s{
        {"run", {"command", "seed", "expect", "expect_sup", "expect_tol"}},
        {"young", {"family", "exponent", "log_exponent", "depth"}},
        {"grid", {"dim", "n", "lower", "upper", "matrix", "weight", "v_min", "input"}},
        {"problem", {"p", "sigma", "f", "f_shape", "tau", "epsilon"}},
        {"solver", {"max_iterations", "tol"}},
        {"sobolev", {"trials", "constant"}},
        {"degiorgi", {"rho", "kmax", "tol", "levels", "lambdas"}},
        {"exp", {"xi_fractions", "alphas", "bound_fractions", "gamma_fraction"}},
        {"sweep", {"command", "rho", "log_exponent", "lambda", "workers"}},
        {"output", {"dir"}},
    };
    return s;
}

inline Table tokenize(std::string_view text) {
    Table t;
    std::string section;
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto nl = text.find('\n', pos);
        std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++lineno;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        const auto line = trim(raw);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(lineno, "unterminated section header");
            section = std::string(trim(line.substr(1, line.size() - 2)));
            if (!schema().contains(section)) throw ConfigError(lineno, "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ConfigError(lineno, "expected 'key = value'");
        if (section.empty()) throw ConfigError(lineno, "key outside of any section");
        const std::string key(trim(line.substr(0, eq)));
        const std::string value(trim(line.substr(eq + 1)));
        if (key.empty()) throw ConfigError(lineno, "empty key");
        if (!schema().at(section).contains(key))
            throw ConfigError(lineno, "unknown key '" + key + "' in [" + section + "]");
        const std::string full = section + "." + key;
        if (t.contains(full))
            throw ConfigError(lineno, "duplicate key '" + key + "' (first set on line " +
                                          std::to_string(t.at(full).line) + ")");
        if (value.empty()) throw ConfigError(lineno, "empty value for '" + key + "'");
        t.emplace(full, Entry{value, lineno});
    }
    return t;
}

class Reader {
public:
    explicit Reader(const Table& t) : t_(t) {}

    int line(const std::string& key) const {
        auto it = t_.find(key);
        return it == t_.end() ? 0 : it->second.line;
    }
    bool has(const std::string& key) const { return t_.contains(key); }

    void str(const std::string& key, std::string& out, std::initializer_list<const char*> allowed = {}) const {
        auto it = t_.find(key);
        if (it == t_.end()) return;
        if (allowed.size() != 0 &&
            std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return it->second.value == a; })) {
            std::string list;
            for (auto a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
            throw ConfigError(it->second.line, "'" + it->second.value + "' is not one of: " + list);
        }
        out = it->second.value;
    }

    void num(const std::string& key, double& out) const {
        auto it = t_.find(key);
        if (it == t_.end()) return;
        out = parse_double(it->second.value, it->second.line);
    }

    template <class Int>
    void integer(const std::string& key, Int& out) const {
        auto it = t_.find(key);
        if (it == t_.end()) return;
        const auto& v = it->second.value;
        Int x{};
        auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size())
            throw ConfigError(it->second.line, "'" + v + "' is not a valid integer");
        out = x;
    }

    void list(const std::string& key, std::vector<double>& out) const {
        auto it = t_.find(key);
        if (it == t_.end()) return;
        out.clear();
        std::string_view v = it->second.value;
        while (true) {
            const auto c = v.find(',');
            out.push_back(parse_double(trim(v.substr(0, c)), it->second.line));
            if (c == std::string_view::npos) break;
            v.remove_prefix(c + 1);
        }
    }

    static double parse_double(std::string_view v, int line) {
        double x = 0.0;
        auto res = std::from_chars(v.data(), v.data() + v.size(), x);
        if (res.ec != std::errc{} || res.ptr != v.data() + v.size() || !std::isfinite(x))
            throw ConfigError(line, "'" + std::string(v) + "' is not a finite number");
        return x;
    }

private:
    const Table& t_;
};

}  // namespace detail

/// Parses and validates configuration text.
inline ExperimentConfig parse(std::string_view text, const std::filesystem::path& base_dir = {}) {
    const auto table = detail::tokenize(text);
    const detail::Reader r(table);
    ExperimentConfig c;
    c.base_dir = base_dir;

    if (!r.has("run.command")) throw ConfigError(0, "missing [run] command");
    std::string cmd;
    r.str("run.command", cmd);
    if (std::find(commands().begin(), commands().end(), cmd) == commands().end())
        throw ConfigError(r.line("run.command"), "unknown command '" + cmd + "'");
    c.command = cmd;
    r.integer("run.seed", c.seed);
    if (r.has("run.expect")) {
        std::string e;
        r.str("run.expect", e, {"Convergent", "Divergent"});
        c.expect = e;
    }
    if (r.has("run.expect_sup")) {
        double e = 0.0;
        r.num("run.expect_sup", e);
        c.expect_sup = e;
    }
    r.num("run.expect_tol", c.expect_tol);
    if (!(c.expect_tol >= 0.0)) throw ConfigError(r.line("run.expect_tol"), "expect_tol must be non-negative");

    r.str("young.family", c.young.family, {"power", "log-bump", "iterated-log-bump"});
    r.num("young.exponent", c.young.exponent);
    r.num("young.log_exponent", c.young.log_exponent);
    r.integer("young.depth", c.young.depth);
    if (!(c.young.exponent > 1.0)) throw ConfigError(r.line("young.exponent"), "exponent must exceed 1");
    if (!(c.young.log_exponent > 0.0)) throw ConfigError(r.line("young.log_exponent"), "log_exponent must be positive");
    if (c.young.depth < 1 || c.young.depth > 3) throw ConfigError(r.line("young.depth"), "depth must be 1, 2 or 3");

    r.integer("grid.dim", c.grid.dim);
    r.integer("grid.n", c.grid.n);
    r.num("grid.lower", c.grid.lower);
    r.num("grid.upper", c.grid.upper);
    r.str("grid.matrix", c.grid.matrix, {"identity", "degenerate"});
    r.str("grid.weight", c.grid.weight, {"unit", "compatible"});
    r.num("grid.v_min", c.grid.v_min);
    r.str("grid.input", c.grid.input);
    if (c.grid.dim != 1 && c.grid.dim != 2) throw ConfigError(r.line("grid.dim"), "dim must be 1 or 2");
    if (c.grid.n < 2 || c.grid.n > 4096) throw ConfigError(r.line("grid.n"), "n must lie in [2, 4096]");
    if (!(c.grid.upper > c.grid.lower)) throw ConfigError(r.line("grid.upper"), "upper must exceed lower");
    if (!(c.grid.v_min > 0.0)) throw ConfigError(r.line("grid.v_min"), "v_min must be positive");
    if (c.grid.matrix == "degenerate" && c.grid.dim != 2)
        throw ConfigError(r.line("grid.matrix"), "the degenerate matrix needs dim = 2");

    r.num("problem.p", c.problem.p);
    r.num("problem.sigma", c.problem.sigma);
    r.num("problem.f", c.problem.f);
    r.str("problem.f_shape", c.problem.f_shape, {"constant", "sine"});
    r.num("problem.tau", c.problem.tau);
    r.num("problem.epsilon", c.problem.epsilon);
    if (!(c.problem.p > 1.0)) throw ConfigError(r.line("problem.p"), "p must exceed 1");
    if (!(c.problem.sigma > 1.0)) throw ConfigError(r.line("problem.sigma"), "sigma must exceed 1");
    if (!(c.problem.tau >= 0.0)) throw ConfigError(r.line("problem.tau"), "tau must be non-negative");
    if (!(c.problem.epsilon >= 0.0)) throw ConfigError(r.line("problem.epsilon"), "epsilon must be non-negative");

    r.integer("solver.max_iterations", c.solver.max_iterations);
    r.num("solver.tol", c.solver.tol);
    if (c.solver.max_iterations < 1) throw ConfigError(r.line("solver.max_iterations"), "max_iterations must be positive");
    if (!(c.solver.tol > 0.0)) throw ConfigError(r.line("solver.tol"), "tol must be positive");

    r.integer("sobolev.trials", c.sobolev.trials);
    r.num("sobolev.constant", c.sobolev.constant);
    if (c.sobolev.trials < 1) throw ConfigError(r.line("sobolev.trials"), "trials must be positive");
    if (!(c.sobolev.constant >= 0.0)) throw ConfigError(r.line("sobolev.constant"), "constant must be non-negative");

    r.num("degiorgi.rho", c.degiorgi.rho);
    r.integer("degiorgi.kmax", c.degiorgi.kmax);
    r.num("degiorgi.tol", c.degiorgi.tol);
    r.integer("degiorgi.levels", c.degiorgi.levels);
    if (!(c.degiorgi.rho > 1.0)) throw ConfigError(r.line("degiorgi.rho"), "rho must exceed 1");
    if (c.degiorgi.kmax < 1) throw ConfigError(r.line("degiorgi.kmax"), "kmax must be positive");
    if (!(c.degiorgi.tol > 0.0 && c.degiorgi.tol < 1.0)) throw ConfigError(r.line("degiorgi.tol"), "tol must lie in (0, 1)");
    if (c.degiorgi.levels < 2) throw ConfigError(r.line("degiorgi.levels"), "levels must be at least 2");
    r.list("degiorgi.lambdas", c.degiorgi.lambdas);
    if (std::any_of(c.degiorgi.lambdas.begin(), c.degiorgi.lambdas.end(), [](double x) { return !(x > 0.0); }))
        throw ConfigError(r.line("degiorgi.lambdas"), "every lambda must be positive");

    r.list("exp.xi_fractions", c.exp.xi_fractions);
    r.list("exp.alphas", c.exp.alphas);
    r.list("exp.bound_fractions", c.exp.bound_fractions);
    r.num("exp.gamma_fraction", c.exp.gamma_fraction);
    auto fractions_ok = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0 && x < 1.0; });
    };
    if (!fractions_ok(c.exp.xi_fractions)) throw ConfigError(r.line("exp.xi_fractions"), "fractions must lie in (0, 1)");
    if (!fractions_ok(c.exp.bound_fractions))
        throw ConfigError(r.line("exp.bound_fractions"), "fractions must lie in (0, 1)");
    if (!(c.exp.gamma_fraction > 0.0 && c.exp.gamma_fraction < 1.0))
        throw ConfigError(r.line("exp.gamma_fraction"), "gamma_fraction must lie in (0, 1)");
    if (std::any_of(c.exp.alphas.begin(), c.exp.alphas.end(), [](double a) { return a < 0.0; }))
        throw ConfigError(r.line("exp.alphas"), "alphas must be non-negative");

    r.str("sweep.command", c.sweep.command,
          {"check-condition", "luxemburg", "solve", "degiorgi-trace", "verify-bound", "exp-integrability"});
    r.list("sweep.rho", c.sweep.rho);
    r.list("sweep.log_exponent", c.sweep.log_exponent);
    r.list("sweep.lambda", c.sweep.lambda);
    r.integer("sweep.workers", c.sweep.workers);
    if (std::any_of(c.sweep.rho.begin(), c.sweep.rho.end(), [](double x) { return !(x > 1.0); }))
        throw ConfigError(r.line("sweep.rho"), "every rho must exceed 1");
    if (std::any_of(c.sweep.log_exponent.begin(), c.sweep.log_exponent.end(), [](double x) { return !(x > 0.0); }))
        throw ConfigError(r.line("sweep.log_exponent"), "every log_exponent must be positive");
    if (std::any_of(c.sweep.lambda.begin(), c.sweep.lambda.end(), [](double x) { return !(x > 0.0); }))
        throw ConfigError(r.line("sweep.lambda"), "every lambda must be positive");
    if (c.sweep.workers < 0) throw ConfigError(r.line("sweep.workers"), "workers must be non-negative");

    r.str("output.dir", c.out_dir);

    std::vector<std::string> lines;
    for (const auto& [k, e] : table)
        if (k != "output.dir" && k != "run.seed") lines.push_back(k + "=" + e.value);
    std::sort(lines.begin(), lines.end());
    for (const auto& l : lines) c.canonical += l + "\n";
    return c;
}

inline ExperimentConfig load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(0, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.parent_path());
}

}  // namespace dgorlicz::config
