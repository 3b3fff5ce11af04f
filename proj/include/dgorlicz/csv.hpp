#pragma once

// CSV artifacts. Every file starts with
//   # config-hash: <16 hex digits>
// followed by a header row. Numbers use the shortest round-trip form.
//
// Grid files, one row per node in lattice order (x fastest):
//   1D: x1,v,quad,q11,value
//   2D: x1,x2,v,quad,q11,q12,q22,value

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "dgorlicz/error.hpp"
#include "dgorlicz/grid.hpp"

namespace dgorlicz::csv {

inline std::string format(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

inline std::string hash_hex(std::uint64_t h) {
    char buf[17];
    static constexpr char digits[] = "0123456789abcdef";
    for (int i = 15; i >= 0; --i, h >>= 4) buf[i] = digits[h & 0xf];
    buf[16] = '\0';
    return buf;
}

class Writer {
public:
    Writer(const std::filesystem::path& path, std::uint64_t config_hash, const std::vector<std::string>& header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw InvalidArgument("cannot open " + path.string() + " for writing");
        out_ << "# config-hash: " << hash_hex(config_hash) << '\n';
        line(header);
        width_ = header.size();
    }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format(v));
        line(cells);
    }

    void row(const std::vector<std::string>& cells) { line(cells); }

    const std::filesystem::path& path() const { return path_; }

private:
    void line(const std::vector<std::string>& cells) {
        if (width_ != 0 && cells.size() != width_) throw InvalidArgument("csv row width mismatch in " + path_.string());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
        if (!out_) throw InvalidArgument("write failed for " + path_.string());
    }

    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t width_ = 0;
};

inline std::vector<std::string> grid_header(int dim) {
    if (dim == 1) return {"x1", "v", "quad", "q11", "value"};
    return {"x1", "x2", "v", "quad", "q11", "q12", "q22", "value"};
}

inline void write_grid(const std::filesystem::path& path, std::uint64_t hash, const WeightedGrid& g,
                       std::span<const double> values) {
    if (values.size() != g.size()) throw InvalidArgument("write_grid: value count mismatch");
    Writer w(path, hash, grid_header(g.dim()));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& x = g.nodes()[i];
        const auto& q = g.node_q()[i];
        if (g.dim() == 1)
            w.row({x[0], g.weight()[i], g.quad()[i], q.a11, values[i]});
        else
            w.row({x[0], x[1], g.weight()[i], g.quad()[i], q.a11, q.a12, q.a22, values[i]});
    }
}

struct GridData {
    WeightedGrid grid;
    std::vector<double> values;
};

namespace detail {

inline std::vector<std::string_view> split(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.remove_prefix(1);
        while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r')) cell.remove_suffix(1);
        out.push_back(cell);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline double parse_double(std::string_view s, const std::string& where) {
    double v = 0.0;
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw InvalidArgument(where + ": not a number: '" + std::string(s) + "'");
    return v;
}

}  // namespace detail

/// Reads a grid file written by write_grid (or by hand in the same layout).
/// The lattice is rebuilt from the coordinates; quad is recomputed and must
/// agree with the file.
inline GridData read_grid(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot open grid file " + path.string());
    std::string line;
    int lineno = 0;
    int dim = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = path.string() + ":" + std::to_string(lineno);
        if (line.empty() || line[0] == '#') continue;
        const auto cells = detail::split(line);
        if (dim == 0) {
            std::vector<std::string> hdr(cells.begin(), cells.end());
            if (hdr == grid_header(1))
                dim = 1;
            else if (hdr == grid_header(2))
                dim = 2;
            else
                throw InvalidArgument(where + ": unrecognised grid header");
            continue;
        }
        if (cells.size() != grid_header(dim).size()) throw InvalidArgument(where + ": wrong number of columns");
        std::vector<double> r;
        for (auto c : cells) r.push_back(detail::parse_double(c, where));
        rows.push_back(std::move(r));
    }
    if (dim == 0 || rows.size() < 2) throw InvalidArgument(path.string() + ": no grid rows");
    std::size_t per_axis = rows.size();
    if (dim == 2) {
        per_axis = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(rows.size()))));
        if (per_axis * per_axis != rows.size()) throw InvalidArgument(path.string() + ": 2D grid is not square");
    }
    const std::size_t n = per_axis - 1;
    const double a = rows.front()[0];
    const double b = rows[per_axis - 1][0];
    std::vector<double> weight;
    std::vector<SymMatrix2> q;
    std::vector<double> values;
    std::vector<double> quad;
    for (const auto& r : rows) {
        if (dim == 1) {
            weight.push_back(r[1]);
            quad.push_back(r[2]);
            q.push_back({r[3], 0.0, 0.0});
            values.push_back(r[4]);
        } else {
            weight.push_back(r[2]);
            quad.push_back(r[3]);
            q.push_back({r[4], r[5], r[6]});
            values.push_back(r[7]);
        }
    }
    GridData out{WeightedGrid::from_nodal(dim, a, b, n, std::move(weight), std::move(q)), std::move(values)};
    const double tol = 1e-9 * (b - a);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& x = out.grid.nodes()[i];
        const bool coords_ok = std::abs(x[0] - rows[i][0]) <= tol && (dim == 1 || std::abs(x[1] - rows[i][1]) <= tol);
        if (!coords_ok) throw InvalidArgument(path.string() + ": node " + std::to_string(i) + " is off the lattice");
        if (std::abs(out.grid.quad()[i] - quad[i]) > 1e-9 * out.grid.quad()[i])
            throw InvalidArgument(path.string() + ": node " + std::to_string(i) + " has inconsistent quad weight");
    }
    return out;
}

}  // namespace dgorlicz::csv
