#ifndef LATWIG_WIGNER_IO_HPP
#define LATWIG_WIGNER_IO_HPP

#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include <latwig/errors.hpp>
#include <latwig/wigner.hpp>

namespace latwig
{

// Shortest representation that round-trips (never more than 17 significant
// digits). Negative zero is printed as 0 so that outputs are byte-stable.
inline std::string format_double(double v)
{
    if (v == 0.0) {
        return "0";
    }
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) {
        throw domain_error("format_double: conversion failed");
    }
    return std::string(buf, res.ptr);
}

inline const char *wigner_csv_header = "m,k,re00,im00,re01,im01,re10,im10,re11,im11";

// One row per (m, k_j), m outer. With `t` set, a leading t column is added.
inline void write_wigner_csv(std::ostream &os, const WignerMatrix &w, std::optional<double> t = std::nullopt)
{
    if (t) {
        os << "t,";
    }
    os << wigner_csv_header << '\n';
    const std::string tcol = t ? format_double(*t) + "," : std::string();
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        const auto r = w.row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            os << tcol << m << ',' << format_double(w.kgrid().point(j));
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    os << ',' << format_double(r[j](a, b).real()) << ',' << format_double(r[j](a, b).imag());
                }
            }
            os << '\n';
        }
    }
}

inline nlohmann::json wigner_sidecar(const WignerMatrix &w, const nlohmann::json &provenance = nlohmann::json::object())
{
    return {{"window", {{"n_min", w.window().n_min}, {"n_max", w.window().n_max}, {"a", w.window().a}}},
            {"m_min", w.m_min()},
            {"m_max", w.m_max()},
            {"n_k", w.kgrid().size()},
            {"columns", wigner_csv_header},
            {"provenance", provenance}};
}

// Reads a file written by write_wigner_csv back onto the given layout.
inline WignerMatrix read_wigner_csv(std::istream &is, const LatticeWindow &window, const KGrid &grid)
{
    WignerMatrix w(window, grid);
    std::string line;
    if (!std::getline(is, line)) {
        throw config_error("wigner csv: empty input");
    }
    const bool has_t = line.rfind("t,", 0) == 0;
    std::size_t count = 0;
    const std::size_t expected = static_cast<std::size_t>(w.rows()) * grid.size();
    while (std::getline(is, line)) {
        if (line.empty()) {
            continue;
        }
        std::vector<double> cols;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc()) {
                throw config_error("wigner csv: bad number '" + cell + "'");
            }
            cols.push_back(v);
        }
        const std::size_t base = has_t ? 1 : 0;
        if (cols.size() != base + 10) {
            throw config_error("wigner csv: wrong column count");
        }
        if (count >= expected) {
            throw config_error("wigner csv: too many rows");
        }
        const long m = w.m_min() + static_cast<long>(count / grid.size());
        const std::size_t j = count % grid.size();
        if (static_cast<long>(cols[base]) != m) {
            throw config_error("wigner csv: rows out of order");
        }
        auto &b = w(m, j);
        b(0, 0) = {cols[base + 2], cols[base + 3]};
        b(0, 1) = {cols[base + 4], cols[base + 5]};
        b(1, 0) = {cols[base + 6], cols[base + 7]};
        b(1, 1) = {cols[base + 8], cols[base + 9]};
        ++count;
    }
    if (count != expected) {
        throw config_error("wigner csv: expected " + std::to_string(expected) + " rows, got " + std::to_string(count));
    }
    return w;
}

} // namespace latwig

#endif
