#ifndef LATWIG_ANALYTIC_STATES_HPP
#define LATWIG_ANALYTIC_STATES_HPP

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include <latwig/errors.hpp>
#include <latwig/kgrid.hpp>
#include <latwig/special_functions.hpp>
#include <latwig/state.hpp>
#include <latwig/wigner.hpp>

// Closed-form states and their closed-form Wigner matrices. Each closed form
// here is checked in the tests against the direct transform of the explicitly
// built state.
namespace latwig
{

struct DoubleDeltaSpec {
    long n1 = 0;
    long n2 = 1;
    complex alpha{1.0, 0.0};
};

struct TwoGaussianSpec {
    long a_center = 6;
    long b_center = -6;
    double sigma = 1.5;
};

struct ProductGaussianSpec {
    long center = 0;
    double sigma = 1.0;
    SpinVector spin = SpinVector(1.0, 0.0);
};

struct WernerSpec {
    long a_site = 0;
    long b_site = 1;
    double z = 1.0;
};

struct CatSpec {
    long a_site = 0;
    long b_site = 1;
    complex beta{1.0, 0.0};
    SpinVector spin1 = SpinVector(1.0, 0.0);
    SpinVector spin2 = SpinVector(0.0, 1.0);
};

namespace detail
{

inline void require_site(const LatticeWindow &w, long n, const char *what)
{
    if (!w.contains(n)) {
        throw domain_error(std::string(what) + ": site " + std::to_string(n) + " outside window ["
                           + std::to_string(w.n_min) + ", " + std::to_string(w.n_max) + "]");
    }
}

inline void require_gaussian_fits(const LatticeWindow &w, long center, double sigma, const char *what)
{
    if (!(sigma > 0.0)) {
        throw domain_error(std::string(what) + ": sigma must be positive");
    }
    if (static_cast<double>(w.n_min) > static_cast<double>(center) - 6.0 * sigma
        || static_cast<double>(w.n_max) < static_cast<double>(center) + 6.0 * sigma) {
        throw domain_error(std::string(what) + ": window does not contain center +- 6 sigma for center "
                           + std::to_string(center));
    }
}

// (1/2pi) delta_{m, l+n} exp(-ik(l-n)) evaluated on row m.
inline complex delta_ridge(long m, long l, long n, const KGrid &grid, std::size_t j)
{
    return m == l + n ? grid.phase(l - n, j) / two_pi : complex{};
}

} // namespace detail

// (|n1>|0> + alpha |n2>|1>) / sqrt(1 + |alpha|^2)
inline PureState double_delta_state(const DoubleDeltaSpec &spec, const LatticeWindow &window)
{
    if (spec.n1 == spec.n2) {
        throw domain_error("double_delta: n1 and n2 must differ");
    }
    detail::require_site(window, spec.n1, "double_delta");
    detail::require_site(window, spec.n2, "double_delta");
    PureState psi(window);
    const double norm = 1.0 / std::sqrt(1.0 + std::norm(spec.alpha));
    psi(spec.n1, 0) = norm;
    psi(spec.n2, 1) = spec.alpha * norm;
    return psi;
}

inline WignerMatrix double_delta_wigner_closed(const DoubleDeltaSpec &spec, const LatticeWindow &window,
                                               const KGrid &grid)
{
    if (spec.n1 == spec.n2) {
        throw domain_error("double_delta: n1 and n2 must differ");
    }
    WignerMatrix w(window, grid);
    const double pref = 1.0 / (two_pi * (1.0 + std::norm(spec.alpha)));
    const long dn = spec.n1 - spec.n2;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto r = w.row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            SpinMatrix &b = r[j];
            if (m == 2 * spec.n1) {
                b(0, 0) = pref;
            }
            if (m == 2 * spec.n2) {
                b(1, 1) = pref * std::norm(spec.alpha);
            }
            if (m == spec.n1 + spec.n2) {
                const complex e = grid.phase(dn, j); // exp(-ik(n1 - n2))
                b(0, 1) = pref * std::conj(spec.alpha) * e;
                b(1, 0) = pref * spec.alpha * std::conj(e);
            }
        }
    }
    return w;
}

// Spinless superposition (|n1> + alpha |n2>) / sqrt(1 + |alpha|^2) as a lattice operator.
inline LatticeOperator spinless_double_delta_density(long n1, long n2, complex alpha, const LatticeWindow &window)
{
    detail::require_site(window, n1, "spinless_double_delta");
    detail::require_site(window, n2, "spinless_double_delta");
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(window.width());
    v[n1 - window.n_min] = 1.0;
    v[n2 - window.n_min] += alpha;
    v /= std::sqrt(1.0 + std::norm(alpha));
    return LatticeOperator(window, v * v.adjoint());
}

// delta ridges at 2 n1, 2 n2 plus the interference ridge
// 2|alpha| cos(dn k - phi) at m = n1 + n2, dn = n2 - n1, phi = arg alpha.
inline ScalarWigner spinless_double_delta_wigner(long n1, long n2, complex alpha, const LatticeWindow &window,
                                                 const KGrid &grid)
{
    if (n1 == n2) {
        throw domain_error("spinless_double_delta: n1 and n2 must differ");
    }
    ScalarWigner w(window, grid);
    const double pref = 1.0 / (two_pi * (1.0 + std::norm(alpha)));
    const double dn = static_cast<double>(n2 - n1);
    const double phi = std::arg(alpha);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double k = grid.point(j);
        if (window.contains(n1)) {
            w(2 * n1, j) += pref;
        }
        if (window.contains(n2)) {
            w(2 * n2, j) += pref * std::norm(alpha);
        }
        w(n1 + n2, j) += pref * 2.0 * std::abs(alpha) * std::cos(dn * k - phi);
    }
    return w;
}

// exp(-(n - c)^2 / (2 sigma^2)) on the window, unnormalised.
inline Eigen::VectorXd gaussian_envelope(long center, double sigma, const LatticeWindow &window)
{
    Eigen::VectorXd g(window.width());
    for (long n = window.n_min; n <= window.n_max; ++n) {
        const double d = static_cast<double>(n - center);
        g[n - window.n_min] = std::exp(-d * d / (2.0 * sigma * sigma));
    }
    return g;
}

// theta_3(0, exp(-1/sigma^2)) = sum_n exp(-(n - c)^2 / sigma^2) for integer c.
inline double gaussian_norm_squared(double sigma)
{
    return theta3(complex{0.0, 0.0}, std::exp(-1.0 / (sigma * sigma))).real();
}

// Gaussian in spin |0> centred at a plus Gaussian in spin |1> centred at b,
// normalised on the window.
inline PureState two_gaussian_state(const TwoGaussianSpec &spec, const LatticeWindow &window)
{
    detail::require_gaussian_fits(window, spec.a_center, spec.sigma, "two_gaussian");
    detail::require_gaussian_fits(window, spec.b_center, spec.sigma, "two_gaussian");
    const Eigen::VectorXd ga = gaussian_envelope(spec.a_center, spec.sigma, window);
    const Eigen::VectorXd gb = gaussian_envelope(spec.b_center, spec.sigma, window);
    PureState psi(window);
    for (long n = window.n_min; n <= window.n_max; ++n) {
        psi(n, 0) = ga[n - window.n_min];
        psi(n, 1) = gb[n - window.n_min];
    }
    psi.normalize();
    return psi;
}

namespace detail
{

// (1 / (2 pi N^2)) exp(-(l^2 + (m - r)^2) / 2s^2) exp(ikm) theta_3(k + i(m - r + l)/2s^2, e^{-1/s^2})
// which is the transform of the product of Gaussians centred at l (left) and r (right).
inline complex gaussian_pair_wigner(long m, double k, long l, long r, double sigma, double norm_sq)
{
    const double s2 = sigma * sigma;
    const double lm = static_cast<double>(l), rm = static_cast<double>(m - r);
    const double log_scale = -(lm * lm + rm * rm) / (2.0 * s2);
    const complex z(k, static_cast<double>(m - r + l) / (2.0 * s2));
    const complex th = theta3_scaled(z, std::exp(-1.0 / s2), log_scale);
    return std::polar(1.0, k * static_cast<double>(m)) * th / (two_pi * norm_sq);
}

} // namespace detail

// Scalar W_L of the normalised lattice Gaussian centred at `center`.
inline ScalarWigner gaussian_wigner_closed(long center, double sigma, const LatticeWindow &window, const KGrid &grid)
{
    ScalarWigner w(window, grid);
    const double nsq = gaussian_norm_squared(sigma);
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        for (std::size_t j = 0; j < grid.size(); ++j) {
            w(m, j) = detail::gaussian_pair_wigner(m, grid.point(j), center, center, sigma, nsq);
        }
    }
    return w;
}

// (1/2) [[W_a, W_ab], [W_ab^*, W_b]]
inline WignerMatrix two_gaussian_wigner_closed(const TwoGaussianSpec &spec, const LatticeWindow &window,
                                               const KGrid &grid)
{
    if (!(spec.sigma > 0.0)) {
        throw domain_error("two_gaussian: sigma must be positive");
    }
    WignerMatrix w(window, grid);
    const double nsq = gaussian_norm_squared(spec.sigma);
    const long a = spec.a_center, b = spec.b_center;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto r = w.row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            const double k = grid.point(j);
            const complex wa = detail::gaussian_pair_wigner(m, k, a, a, spec.sigma, nsq);
            const complex wb = detail::gaussian_pair_wigner(m, k, b, b, spec.sigma, nsq);
            const complex wab = detail::gaussian_pair_wigner(m, k, a, b, spec.sigma, nsq);
            r[j] << 0.5 * wa, 0.5 * wab, 0.5 * std::conj(wab), 0.5 * wb;
        }
    }
    return w;
}

// Normalised Gaussian (x) spin vector.
inline PureState product_gaussian_state(const ProductGaussianSpec &spec, const LatticeWindow &window)
{
    detail::require_gaussian_fits(window, spec.center, spec.sigma, "product_gaussian");
    const double sn = spec.spin.norm();
    if (!(sn > 0.0)) {
        throw domain_error("product_gaussian: zero spin vector");
    }
    const SpinVector spin = spec.spin / sn;
    const Eigen::VectorXd g = gaussian_envelope(spec.center, spec.sigma, window);
    PureState psi(window);
    for (long n = window.n_min; n <= window.n_max; ++n) {
        psi(n, 0) = g[n - window.n_min] * spin[0];
        psi(n, 1) = g[n - window.n_min] * spin[1];
    }
    psi.normalize();
    return psi;
}

// W_ab(m, k) = W_L(m, k) <a|rho_S|b>
inline WignerMatrix product_wigner(const ScalarWigner &wl, const SpinMatrix &rho_s)
{
    if ((rho_s - rho_s.adjoint()).cwiseAbs().maxCoeff() > 1e-12 || std::abs(rho_s.trace() - 1.0) > 1e-12) {
        throw domain_error("product_wigner: spin state must be Hermitian with unit trace");
    }
    WignerMatrix w(wl.window(), wl.kgrid());
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto r = w.row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            r[j] = wl(m, j) * rho_s;
        }
    }
    return w;
}

// (1 - z)/4 * I + z |psi><psi|, psi = (|a>|0> + |b>|1>)/sqrt 2. The identity acts
// on the four-dimensional span of {a, b} x {0, 1} only; that is the reading
// under which the closed-form Wigner matrix below (support m in {2a, a+b, 2b})
// and eta = z hold.
inline DensityOperator werner_density(const WernerSpec &spec, const LatticeWindow &window)
{
    if (!(spec.z >= 0.0 && spec.z <= 1.0)) {
        throw domain_error("werner: z must lie in [0, 1]");
    }
    if (spec.a_site == spec.b_site) {
        throw domain_error("werner: sites must differ");
    }
    detail::require_site(window, spec.a_site, "werner");
    detail::require_site(window, spec.b_site, "werner");
    DensityOperator rho(window);
    const double mix = (1.0 - spec.z) / 4.0;
    for (long n : {spec.a_site, spec.b_site}) {
        rho(n, 0, n, 0) += mix;
        rho(n, 1, n, 1) += mix;
    }
    const double h = spec.z / 2.0;
    rho(spec.a_site, 0, spec.a_site, 0) += h;
    rho(spec.b_site, 1, spec.b_site, 1) += h;
    rho(spec.a_site, 0, spec.b_site, 1) += h;
    rho(spec.b_site, 1, spec.a_site, 0) += h;
    return rho;
}

// [[(1+z)/4 W_aa + (1-z)/4 W_bb, z/2 W_ab], [z/2 W_ba, (1-z)/4 W_aa + (1+z)/4 W_bb]]
// with W_ln(m, k) = (1/2pi) delta_{m,l+n} exp(-ik(l - n)).
inline WignerMatrix werner_wigner(const WernerSpec &spec, const LatticeWindow &window, const KGrid &grid)
{
    if (!(spec.z >= 0.0 && spec.z <= 1.0)) {
        throw domain_error("werner: z must lie in [0, 1]");
    }
    detail::require_site(window, spec.a_site, "werner");
    detail::require_site(window, spec.b_site, "werner");
    WignerMatrix w(window, grid);
    const long a = spec.a_site, b = spec.b_site;
    const double z = spec.z;
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto r = w.row(m);
        for (std::size_t j = 0; j < r.size(); ++j) {
            const complex waa = detail::delta_ridge(m, a, a, grid, j);
            const complex wbb = detail::delta_ridge(m, b, b, grid, j);
            const complex wab = detail::delta_ridge(m, a, b, grid, j);
            const complex wba = detail::delta_ridge(m, b, a, grid, j);
            r[j] << (1.0 + z) / 4.0 * waa + (1.0 - z) / 4.0 * wbb, z / 2.0 * wab, z / 2.0 * wba,
                (1.0 - z) / 4.0 * waa + (1.0 + z) / 4.0 * wbb;
        }
    }
    return w;
}

// (|a>|s1> + beta |b>|s2>) / sqrt(1 + |beta|^2) with orthonormal s1, s2.
inline PureState cat_state(const CatSpec &spec, const LatticeWindow &window)
{
    if (std::abs(spec.spin1.norm() - 1.0) > 1e-12 || std::abs(spec.spin2.norm() - 1.0) > 1e-12
        || std::abs(spec.spin1.dot(spec.spin2)) > 1e-12) {
        throw domain_error("cat: spin vectors must be orthonormal");
    }
    if (spec.a_site == spec.b_site) {
        throw domain_error("cat: sites must differ");
    }
    detail::require_site(window, spec.a_site, "cat");
    detail::require_site(window, spec.b_site, "cat");
    PureState psi(window);
    const double norm = 1.0 / std::sqrt(1.0 + std::norm(spec.beta));
    for (int al = 0; al < 2; ++al) {
        psi(spec.a_site, al) += norm * spec.spin1[al];
        psi(spec.b_site, al) += norm * spec.beta * spec.spin2[al];
    }
    return psi;
}

} // namespace latwig

#endif
