#ifndef LATWIG_WIGNER_HPP
#define LATWIG_WIGNER_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include <latwig/errors.hpp>
#include <latwig/kgrid.hpp>
#include <latwig/state.hpp>

namespace latwig
{

// 2x2 matrix-valued Wigner function W_ab(m, k) sampled on m in [2 n_min, 2 n_max]
// (the whole support of a windowed operator) and on a KGrid in k.
class WignerMatrix
{
public:
    WignerMatrix(LatticeWindow window, KGrid grid)
        : m_window(window), m_grid(std::move(grid)),
          m_values(static_cast<std::size_t>(rows()) * m_grid.size(), SpinMatrix::Zero())
    {}

    const LatticeWindow &window() const noexcept
    {
        return m_window;
    }
    const KGrid &kgrid() const noexcept
    {
        return m_grid;
    }
    long m_min() const noexcept
    {
        return m_window.m_min();
    }
    long m_max() const noexcept
    {
        return m_window.m_max();
    }
    long rows() const noexcept
    {
        return m_max() - m_min() + 1;
    }
    bool has_m(long m) const noexcept
    {
        return m >= m_min() && m <= m_max();
    }

    SpinMatrix &operator()(long m, std::size_t j)
    {
        return m_values[offset(m, j)];
    }
    const SpinMatrix &operator()(long m, std::size_t j) const
    {
        return m_values[offset(m, j)];
    }
    // Zero outside the stored range.
    SpinMatrix at(long m, std::size_t j) const
    {
        return has_m(m) ? m_values[offset(m, j)] : SpinMatrix::Zero();
    }
    std::span<SpinMatrix> row(long m)
    {
        return {m_values.data() + offset(m, 0), m_grid.size()};
    }
    std::span<const SpinMatrix> row(long m) const
    {
        return {m_values.data() + offset(m, 0), m_grid.size()};
    }
    // Component (a, b) of row m as a plain sample vector.
    std::vector<complex> component(long m, int a, int b) const
    {
        std::vector<complex> out(m_grid.size());
        const auto r = row(m);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] = r[j](a, b);
        }
        return out;
    }
    void set_component(long m, int a, int b, std::span<const complex> samples)
    {
        auto r = row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j](a, b) = samples[j];
        }
    }

    // sum_a sum_m int dk W_aa(m, k)
    complex normalization() const
    {
        complex acc{};
        for (const auto &b : m_values) {
            acc += b.trace();
        }
        return acc * m_grid.spacing();
    }
    double hermiticity_defect() const
    {
        double worst = 0.0;
        for (const auto &b : m_values) {
            worst = std::max(worst, (b - b.adjoint()).cwiseAbs().maxCoeff());
        }
        return worst;
    }
    double diagonal_imag_max() const
    {
        double worst = 0.0;
        for (const auto &b : m_values) {
            worst = std::max({worst, std::abs(b(0, 0).imag()), std::abs(b(1, 1).imag())});
        }
        return worst;
    }
    double max_abs() const
    {
        double worst = 0.0;
        for (const auto &b : m_values) {
            worst = std::max(worst, b.cwiseAbs().maxCoeff());
        }
        return worst;
    }

    WignerMatrix &operator+=(const WignerMatrix &o)
    {
        require_same_layout(o);
        for (std::size_t i = 0; i < m_values.size(); ++i) {
            m_values[i] += o.m_values[i];
        }
        return *this;
    }
    WignerMatrix &operator*=(complex s)
    {
        for (auto &b : m_values) {
            b *= s;
        }
        return *this;
    }
    friend WignerMatrix operator+(WignerMatrix a, const WignerMatrix &b)
    {
        a += b;
        return a;
    }
    friend WignerMatrix operator*(complex s, WignerMatrix a)
    {
        a *= s;
        return a;
    }

    bool same_layout(const WignerMatrix &o) const noexcept
    {
        return m_window.n_min == o.m_window.n_min && m_window.n_max == o.m_window.n_max && m_grid == o.m_grid;
    }
    void require_same_layout(const WignerMatrix &o) const
    {
        if (!same_layout(o)) {
            throw domain_error("Wigner matrices live on different (m, k) grids");
        }
    }

private:
    std::size_t offset(long m, std::size_t j) const
    {
        return static_cast<std::size_t>(m - m_min()) * m_grid.size() + j;
    }

    LatticeWindow m_window;
    KGrid m_grid;
    std::vector<SpinMatrix> m_values;
};

// Scalar (spinless or spin-traced) Wigner function on the same grid.
class ScalarWigner
{
public:
    ScalarWigner(LatticeWindow window, KGrid grid)
        : m_window(window), m_grid(std::move(grid)),
          m_values(static_cast<std::size_t>(window.m_max() - window.m_min() + 1) * m_grid.size(), complex{})
    {}

    const LatticeWindow &window() const noexcept
    {
        return m_window;
    }
    const KGrid &kgrid() const noexcept
    {
        return m_grid;
    }
    long m_min() const noexcept
    {
        return m_window.m_min();
    }
    long m_max() const noexcept
    {
        return m_window.m_max();
    }
    complex &operator()(long m, std::size_t j)
    {
        return m_values[offset(m, j)];
    }
    complex operator()(long m, std::size_t j) const
    {
        return m_values[offset(m, j)];
    }
    std::span<const complex> row(long m) const
    {
        return {m_values.data() + offset(m, 0), m_grid.size()};
    }
    complex normalization() const
    {
        complex acc{};
        for (const auto &v : m_values) {
            acc += v;
        }
        return acc * m_grid.spacing();
    }
    double imag_max() const
    {
        double worst = 0.0;
        for (const auto &v : m_values) {
            worst = std::max(worst, std::abs(v.imag()));
        }
        return worst;
    }
    double max_abs_difference(const ScalarWigner &o) const
    {
        if (m_window.n_min != o.m_window.n_min || m_window.n_max != o.m_window.n_max || !(m_grid == o.m_grid)) {
            throw domain_error("scalar Wigner functions live on different grids");
        }
        double worst = 0.0;
        for (std::size_t i = 0; i < m_values.size(); ++i) {
            worst = std::max(worst, std::abs(m_values[i] - o.m_values[i]));
        }
        return worst;
    }

private:
    std::size_t offset(long m, std::size_t j) const
    {
        return static_cast<std::size_t>(m - m_min()) * m_grid.size() + j;
    }

    LatticeWindow m_window;
    KGrid m_grid;
    std::vector<complex> m_values;
};

inline double max_abs_difference(const WignerMatrix &a, const WignerMatrix &b)
{
    a.require_same_layout(b);
    double worst = 0.0;
    for (long m = a.m_min(); m <= a.m_max(); ++m) {
        const auto ra = a.row(m), rb = b.row(m);
        for (std::size_t j = 0; j < ra.size(); ++j) {
            worst = std::max(worst, (ra[j] - rb[j]).cwiseAbs().maxCoeff());
        }
    }
    return worst;
}

namespace detail
{

// Range of n with both n and m - n inside the window.
inline std::pair<long, long> pair_range(const LatticeWindow &w, long m)
{
    return {std::max(w.n_min, m - w.n_max), std::min(w.n_max, m - w.n_min)};
}

} // namespace detail

// W^O_ab(m, k) = (1/2pi) sum_n <n,a|O|m-n,b> exp(-i(2n - m)k) for any operator
// on the window. No state invariants are assumed.
inline WignerMatrix wigner_of_operator(const DensityOperator &op, const KGrid &grid)
{
    if (op.matrix.rows() != op.window.dim() || op.matrix.cols() != op.window.dim()) {
        throw domain_error("wigner_of_operator: operator dimension does not match window");
    }
    grid.require_exact_for_width(op.window.width());
    WignerMatrix w(op.window, grid);
    const double norm = 1.0 / two_pi;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto out = w.row(m);
        const auto [lo, hi] = detail::pair_range(op.window, m);
        for (long n = lo; n <= hi; ++n) {
            const SpinMatrix b = op.block(n, m - n) * norm;
            const long f = 2 * n - m;
            for (std::size_t j = 0; j < out.size(); ++j) {
                out[j] += b * grid.phase(f, j);
            }
        }
    }
    return w;
}

inline WignerMatrix wigner_of_density(const DensityOperator &rho, const KGrid &grid)
{
    return wigner_of_operator(rho, grid);
}

// Spinor form: (1/2pi) sum_n Psi_a(n) Psi_b^*(m-n) exp(-i(2n-m)k).
inline WignerMatrix wigner_of_pure(const PureState &psi, const KGrid &grid)
{
    grid.require_exact_for_width(psi.window.width());
    WignerMatrix w(psi.window, grid);
    const double norm = 1.0 / two_pi;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto out = w.row(m);
        const auto [lo, hi] = detail::pair_range(psi.window, m);
        for (long n = lo; n <= hi; ++n) {
            const SpinVector left(psi(n, 0), psi(n, 1));
            const SpinVector right(psi(m - n, 0), psi(m - n, 1));
            const SpinMatrix b = left * right.adjoint() * norm;
            const long f = 2 * n - m;
            for (std::size_t j = 0; j < out.size(); ++j) {
                out[j] += b * grid.phase(f, j);
            }
        }
    }
    return w;
}

// Spinless transform of a lattice operator.
inline ScalarWigner wigner_of_lattice(const LatticeOperator &op, const KGrid &grid)
{
    grid.require_exact_for_width(op.window.width());
    ScalarWigner w(op.window, grid);
    const double norm = 1.0 / two_pi;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        const auto [lo, hi] = detail::pair_range(op.window, m);
        for (long n = lo; n <= hi; ++n) {
            const complex c = op(n, m - n) * norm;
            const long f = 2 * n - m;
            for (std::size_t j = 0; j < grid.size(); ++j) {
                w(m, j) += c * grid.phase(f, j);
            }
        }
    }
    return w;
}

struct PositionMarginal {
    LatticeWindow window;
    // int dk W(2n, k), one 2x2 block per site
    std::vector<SpinMatrix> sites;
    // largest |int dk W_ab(m, k)| over odd m; zero for any operator
    double odd_residual = 0.0;

    const SpinMatrix &at(long n) const
    {
        return sites[static_cast<std::size_t>(n - window.n_min)];
    }
    std::vector<double> populations() const
    {
        std::vector<double> out;
        out.reserve(sites.size());
        for (const auto &b : sites) {
            out.push_back(b.trace().real());
        }
        return out;
    }
};

inline PositionMarginal marginal_position(const WignerMatrix &w)
{
    PositionMarginal out{w.window(), {}, 0.0};
    out.sites.reserve(static_cast<std::size_t>(w.window().width()));
    const double dk = w.kgrid().spacing();
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        SpinMatrix acc = SpinMatrix::Zero();
        for (const auto &b : w.row(m)) {
            acc += b;
        }
        acc *= dk;
        if (m % 2 == 0) {
            out.sites.push_back(acc);
        } else {
            out.odd_residual = std::max(out.odd_residual, acc.cwiseAbs().maxCoeff());
        }
    }
    return out;
}

// Population on the two edge sites read off the position marginal.
inline double wigner_boundary_population(const WignerMatrix &w)
{
    const double dk = w.kgrid().spacing();
    double p = 0.0;
    for (long m : {w.m_min(), w.m_max()}) {
        complex acc{};
        for (const auto &b : w.row(m)) {
            acc += b.trace();
        }
        p += std::abs(acc) * dk;
        if (w.m_min() == w.m_max()) {
            break;
        }
    }
    return p;
}

// sum_m W_ab(m, k_j) = (1/a) <k_j/a, a|rho|k_j/a, b>, one block per grid point.
inline std::vector<SpinMatrix> marginal_momentum(const WignerMatrix &w)
{
    std::vector<SpinMatrix> out(w.kgrid().size(), SpinMatrix::Zero());
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        const auto r = w.row(m);
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += r[j];
        }
    }
    return out;
}

// 2 pi sum_ab sum_m int dk W^C_ab W^D_ba = tr(C D)
inline complex trace_product(const WignerMatrix &wc, const WignerMatrix &wd)
{
    wc.require_same_layout(wd);
    complex acc{};
    for (long m = wc.m_min(); m <= wc.m_max(); ++m) {
        const auto rc = wc.row(m), rd = wd.row(m);
        for (std::size_t j = 0; j < rc.size(); ++j) {
            acc += (rc[j] * rd[j]).trace();
        }
    }
    return two_pi * wc.kgrid().spacing() * acc;
}

// Inverse transform. The k-integral against the phase-point operator is done
// per matrix element: <n,a|rho|m-n,b> = int dk W_ab(m, k) exp(i(2n - m)k).
inline DensityOperator reconstruct_density(const WignerMatrix &w)
{
    const LatticeWindow &win = w.window();
    const KGrid &grid = w.kgrid();
    grid.require_exact_for_width(win.width());
    DensityOperator rho(win);
    const double dk = grid.spacing();
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        const auto r = w.row(m);
        const auto [lo, hi] = detail::pair_range(win, m);
        for (long n = lo; n <= hi; ++n) {
            const long f = 2 * n - m;
            SpinMatrix acc = SpinMatrix::Zero();
            for (std::size_t j = 0; j < r.size(); ++j) {
                acc += r[j] * std::conj(grid.phase(f, j));
            }
            rho.matrix.block<2, 2>(win.index(n, 0), win.index(m - n, 0)) = acc * dk;
        }
    }
    return rho;
}

// sum_a W_aa(m, k)
inline ScalarWigner spin_trace_wigner(const WignerMatrix &w)
{
    ScalarWigner out(w.window(), w.kgrid());
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        const auto r = w.row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            out(m, j) = r[j].trace();
        }
    }
    return out;
}

// u W u^dagger applied to every (m, k) block.
inline WignerMatrix rotate_spin(const WignerMatrix &w, const SpinMatrix &u)
{
    WignerMatrix out = w;
    const SpinMatrix ud = u.adjoint();
    for (long m = out.m_min(); m <= out.m_max(); ++m) {
        for (auto &b : out.row(m)) {
            b = u * b * ud;
        }
    }
    return out;
}

} // namespace latwig

#endif
