#ifndef LATWIG_NEGATIVITY_HPP
#define LATWIG_NEGATIVITY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <latwig/errors.hpp>
#include <latwig/state.hpp>
#include <latwig/wigner.hpp>

namespace latwig
{

inline constexpr double negativity_hermiticity_tolerance = 1e-10;

struct NegativityReport {
    double eta = 0.0;
    // (m, sum_j ||W(m, k_j)||_1 dk); the contributions sum to eta + 1
    std::vector<std::pair<long, double>> per_m;
    long n_k = 0;
    LatticeWindow window;
};

// Sum of |eigenvalues| of a Hermitian 2x2 block: eigenvalues h +- r.
inline double trace_norm_2x2(const SpinMatrix &b)
{
    const double h = 0.5 * (b(0, 0).real() + b(1, 1).real());
    const double d = 0.5 * (b(0, 0).real() - b(1, 1).real());
    const complex o = 0.5 * (b(0, 1) + std::conj(b(1, 0)));
    const double r = std::hypot(d, std::abs(o));
    return 2.0 * std::max(std::abs(h), r);
}

// eta = sum_m int dk ||W(m, k)||_1 - 1
inline NegativityReport matrix_negativity(const WignerMatrix &w)
{
    NegativityReport rep;
    rep.n_k = static_cast<long>(w.kgrid().size());
    rep.window = w.window();
    const double dk = w.kgrid().spacing();
    double total = 0.0;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        double row = 0.0;
        for (const auto &b : w.row(m)) {
            const double defect = std::max({std::abs(b(0, 1) - std::conj(b(1, 0))), std::abs(b(0, 0).imag()),
                                            std::abs(b(1, 1).imag())});
            if (defect > negativity_hermiticity_tolerance) {
                throw domain_error("matrix_negativity: non-Hermitian block at m = " + std::to_string(m));
            }
            row += trace_norm_2x2(b);
        }
        row *= dk;
        rep.per_m.emplace_back(m, row);
        total += row;
    }
    rep.eta = total - 1.0;
    return rep;
}

// sum_m int dk |W| - 1 for a real scalar Wigner function
inline double scalar_negativity(const ScalarWigner &w)
{
    if (w.imag_max() > negativity_hermiticity_tolerance) {
        throw domain_error("scalar_negativity: Wigner function is not real");
    }
    double total = 0.0;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        for (const complex v : w.row(m)) {
            total += std::abs(v.real());
        }
    }
    return total * w.kgrid().spacing() - 1.0;
}

inline std::vector<std::pair<double, double>> negativity_timeseries(const std::vector<double> &times,
                                                                    const std::vector<WignerMatrix> &snapshots)
{
    if (times.size() != snapshots.size()) {
        throw domain_error("negativity_timeseries: times and snapshots differ in length");
    }
    std::vector<std::pair<double, double>> out;
    out.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        out.emplace_back(times[i], matrix_negativity(snapshots[i]).eta);
    }
    return out;
}

// (|a>|s1> + beta |b>|s2>)/sqrt(1 + |beta|^2) with orthogonal spins
inline double cat_negativity(complex beta)
{
    const double b = std::abs(beta);
    return 2.0 * b / (1.0 + b * b);
}

} // namespace latwig

#endif
