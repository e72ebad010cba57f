#ifndef LATWIG_DYNAMICS_DISCRETE_HPP
#define LATWIG_DYNAMICS_DISCRETE_HPP

#include <cmath>
#include <complex>
#include <string>

#include <Eigen/Dense>

#include <latwig/errors.hpp>
#include <latwig/kgrid.hpp>
#include <latwig/state.hpp>
#include <latwig/wigner.hpp>

// Discrete-time walk U = (T- x |L><L| + T+ x |R><R|) (I x C), |L> = |0>, |R> = |1>,
// and the projective decoherence map.
namespace latwig
{

inline constexpr double walk_boundary_epsilon = 1e-14;

struct CoinSpec {
    double theta = 0.0;
};

// sigma_z exp(-i theta sigma_y)
inline SpinMatrix coin_matrix(const CoinSpec &coin)
{
    if (!(coin.theta >= 0.0 && coin.theta <= 0.5 * pi)) {
        throw domain_error("coin: theta must lie in [0, pi/2]");
    }
    const double c = std::cos(coin.theta), s = std::sin(coin.theta);
    SpinMatrix m;
    m << c, -s, -s, -c;
    return m;
}

namespace detail
{

// (U X) for a composite-ordered matrix X (rows are (site, spin)).
inline Eigen::MatrixXcd walk_rows(const Eigen::MatrixXcd &x, const SpinMatrix &c)
{
    const Eigen::Index d = x.rows();
    Eigen::MatrixXcd coined(d, x.cols());
    for (Eigen::Index i = 0; i < d; i += 2) {
        coined.middleRows(i, 2).noalias() = c * x.middleRows(i, 2);
    }
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(d, x.cols());
    const Eigen::Index sites = d / 2;
    for (Eigen::Index s = 0; s < sites; ++s) {
        // L moves down one site, R moves up one site
        if (s >= 1) {
            out.row(2 * s - 2) = coined.row(2 * s);
        }
        if (s + 1 < sites) {
            out.row(2 * s + 3) = coined.row(2 * s + 1);
        }
    }
    return out;
}

inline void check_walk_edges(double edge, const char *what)
{
    if (edge > walk_boundary_epsilon) {
        throw boundary_leak_error(std::string(what) + ": walker reached the window edge", edge);
    }
}

} // namespace detail

inline PureState qw_step_pure(const PureState &psi, const CoinSpec &coin)
{
    const SpinMatrix c = coin_matrix(coin);
    const LatticeWindow &w = psi.window;
    double edge = 0.0;
    for (int a = 0; a < 2; ++a) {
        edge += std::norm(psi(w.n_min, a)) + std::norm(psi(w.n_max, a));
    }
    detail::check_walk_edges(edge, "qw_step_pure");
    return PureState(w, detail::walk_rows(psi.amplitudes, c));
}

inline DensityOperator qw_step_state(const DensityOperator &rho, const CoinSpec &coin)
{
    const SpinMatrix c = coin_matrix(coin);
    detail::check_walk_edges(rho.boundary_population(), "qw_step_state");
    const Eigen::MatrixXcd ur = detail::walk_rows(rho.matrix, c);
    const Eigen::MatrixXcd urut = detail::walk_rows(ur.adjoint(), c).adjoint();
    return DensityOperator(rho.window, urut);
}

// W(m,k,t+1) = M_R W(m-2) M_R^+ + e^{-2ik} M_R W(m) M_L^+ + e^{2ik} M_L W(m) M_R^+ + M_L W(m+2) M_L^+
// with M_L = |L><L| C and M_R = |R><R| C.
inline WignerMatrix qw_step_wigner(const WignerMatrix &w, const CoinSpec &coin)
{
    detail::check_walk_edges(wigner_boundary_population(w), "qw_step_wigner");
    const SpinMatrix c = coin_matrix(coin);
    SpinMatrix ml = SpinMatrix::Zero(), mr = SpinMatrix::Zero();
    ml.row(0) = c.row(0);
    mr.row(1) = c.row(1);
    const SpinMatrix mla = ml.adjoint(), mra = mr.adjoint();
    const KGrid &grid = w.kgrid();
    WignerMatrix out(w.window(), grid);
    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto r = out.row(m);
        const auto here = w.row(m);
        for (std::size_t j = 0; j < grid.size(); ++j) {
            // e^{-2ik_j} = phase(2, j)
            const complex e2 = grid.phase(2, j);
            r[j] = mr * w.at(m - 2, j) * mra + e2 * (mr * here[j] * mla) + std::conj(e2) * (ml * here[j] * mra)
                   + ml * w.at(m + 2, j) * mla;
        }
    }
    return out;
}

enum class ProjectionBasis { spin, site };

struct ProjectiveNoiseSpec {
    double p = 0.0;
    ProjectionBasis basis = ProjectionBasis::spin;
};

// sum_i Pi_i rho Pi_i for the chosen basis
inline DensityOperator projective_dephase(const DensityOperator &rho, ProjectionBasis basis)
{
    DensityOperator out(rho.window);
    const long w = rho.window.width();
    for (long i = 0; i < w; ++i) {
        for (long j = 0; j < w; ++j) {
            if (basis == ProjectionBasis::site) {
                if (i == j) {
                    out.matrix.block<2, 2>(2 * i, 2 * j) = rho.matrix.block<2, 2>(2 * i, 2 * j);
                }
            } else {
                out.matrix(2 * i, 2 * j) = rho.matrix(2 * i, 2 * j);
                out.matrix(2 * i + 1, 2 * j + 1) = rho.matrix(2 * i + 1, 2 * j + 1);
            }
        }
    }
    return out;
}

inline void check_probability(double p)
{
    if (!(p >= 0.0 && p <= 1.0)) {
        throw domain_error("projective noise: p must lie in [0, 1]");
    }
}

// (1 - p) rho + p sum_i Pi_i rho Pi_i
inline DensityOperator projective_map(const DensityOperator &rho, const ProjectiveNoiseSpec &noise)
{
    check_probability(noise.p);
    DensityOperator out = projective_dephase(rho, noise.basis);
    out.matrix = (1.0 - noise.p) * rho.matrix + noise.p * out.matrix;
    return out;
}

// Cat (|n1>|L> + |n2>|R>)/sqrt 2 after t applications of the map: the
// interference entries carry (1 - p)^t, the diagonal ridges are untouched.
inline WignerMatrix iterated_cat_wigner(long n1, long n2, double p, int t, const LatticeWindow &window,
                                        const KGrid &grid)
{
    check_probability(p);
    if (t < 0) {
        throw domain_error("iterated_cat_wigner: t must be non-negative");
    }
    if (n1 == n2 || !window.contains(n1) || !window.contains(n2)) {
        throw domain_error("iterated_cat_wigner: sites must differ and lie in the window");
    }
    grid.require_exact_for_width(window.width());
    WignerMatrix w(window, grid);
    const double pref = 1.0 / (4.0 * pi);
    const double decay = std::pow(1.0 - p, t);
    for (std::size_t j = 0; j < grid.size(); ++j) {
        w(2 * n1, j)(0, 0) += pref;
        w(2 * n2, j)(1, 1) += pref;
        // e^{-ik(n1 - n2)} = phase(n1 - n2, j)
        const complex e = grid.phase(n1 - n2, j);
        w(n1 + n2, j)(0, 1) += pref * decay * e;
        w(n1 + n2, j)(1, 0) += pref * decay * std::conj(e);
    }
    return w;
}

} // namespace latwig

#endif
