#ifndef LATWIG_STATE_HPP
#define LATWIG_STATE_HPP

#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include <latwig/errors.hpp>
#include <latwig/kgrid.hpp>

namespace latwig
{

using SpinMatrix = Eigen::Matrix2cd;
using SpinVector = Eigen::Vector2cd;

// Finite stand-in for the infinite lattice: sites n_min..n_max with spacing a.
struct LatticeWindow {
    long n_min = 0;
    long n_max = 0;
    double a = 1.0;

    LatticeWindow() = default;
    LatticeWindow(long lo, long hi, double spacing = 1.0) : n_min(lo), n_max(hi), a(spacing)
    {
        if (hi < lo) {
            throw domain_error("LatticeWindow: n_max < n_min");
        }
        if (!(spacing > 0.0)) {
            throw domain_error("LatticeWindow: lattice spacing must be positive");
        }
    }

    long width() const noexcept
    {
        return n_max - n_min + 1;
    }
    // dimension of window (x) spin
    Eigen::Index dim() const noexcept
    {
        return static_cast<Eigen::Index>(2 * width());
    }
    bool contains(long n) const noexcept
    {
        return n >= n_min && n <= n_max;
    }
    // composite (site-major, spin-minor) index
    Eigen::Index index(long n, int alpha) const noexcept
    {
        return static_cast<Eigen::Index>(2 * (n - n_min) + alpha);
    }
    long m_min() const noexcept
    {
        return 2 * n_min;
    }
    long m_max() const noexcept
    {
        return 2 * n_max;
    }

    friend bool operator==(const LatticeWindow &, const LatticeWindow &) = default;
};

namespace pauli
{
inline SpinMatrix identity()
{
    return SpinMatrix::Identity();
}
inline SpinMatrix x()
{
    SpinMatrix m;
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}
inline SpinMatrix y()
{
    SpinMatrix m;
    m << 0.0, complex(0.0, -1.0), complex(0.0, 1.0), 0.0;
    return m;
}
inline SpinMatrix z()
{
    SpinMatrix m;
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}
} // namespace pauli

// Psi_alpha(n) on a window, stored in composite order.
struct PureState {
    LatticeWindow window;
    Eigen::VectorXcd amplitudes;

    PureState() = default;
    explicit PureState(LatticeWindow w) : window(w), amplitudes(Eigen::VectorXcd::Zero(w.dim())) {}
    PureState(LatticeWindow w, Eigen::VectorXcd amps) : window(w), amplitudes(std::move(amps))
    {
        if (amplitudes.size() != window.dim()) {
            throw domain_error("PureState: amplitude count does not match window");
        }
    }

    complex &operator()(long n, int alpha)
    {
        return amplitudes[window.index(n, alpha)];
    }
    complex operator()(long n, int alpha) const
    {
        return amplitudes[window.index(n, alpha)];
    }
    double norm() const
    {
        return amplitudes.norm();
    }
    PureState &normalize()
    {
        const double nrm = norm();
        if (!(nrm > 0.0)) {
            throw domain_error("PureState: cannot normalise the zero vector");
        }
        amplitudes /= nrm;
        return *this;
    }
};

// Dense operator on window (x) spin. Used both for density operators and for
// arbitrary observables; state invariants are only checked on demand.
struct DensityOperator {
    LatticeWindow window;
    Eigen::MatrixXcd matrix;

    DensityOperator() = default;
    explicit DensityOperator(LatticeWindow w) : window(w), matrix(Eigen::MatrixXcd::Zero(w.dim(), w.dim())) {}
    DensityOperator(LatticeWindow w, Eigen::MatrixXcd m) : window(w), matrix(std::move(m))
    {
        if (matrix.rows() != window.dim() || matrix.cols() != window.dim()) {
            throw domain_error("DensityOperator: matrix dimension does not match window");
        }
    }

    complex &operator()(long n, int alpha, long np, int beta)
    {
        return matrix(window.index(n, alpha), window.index(np, beta));
    }
    complex operator()(long n, int alpha, long np, int beta) const
    {
        return matrix(window.index(n, alpha), window.index(np, beta));
    }
    // <n,.|rho|n',.> as a 2x2 spin block
    SpinMatrix block(long n, long np) const
    {
        return matrix.block<2, 2>(window.index(n, 0), window.index(np, 0));
    }

    complex trace() const
    {
        return matrix.trace();
    }
    double purity() const
    {
        return (matrix * matrix).trace().real();
    }
    double hermiticity_defect() const
    {
        return (matrix - matrix.adjoint()).cwiseAbs().maxCoeff();
    }
    bool is_hermitian(double tol = 1e-12) const
    {
        return hermiticity_defect() <= tol;
    }
    // O(W^3); call sparingly.
    double min_eigenvalue() const
    {
        const Eigen::MatrixXcd h = 0.5 * (matrix + matrix.adjoint());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h, Eigen::EigenvaluesOnly);
        return es.eigenvalues().minCoeff();
    }
    bool is_valid_state(double tol = 1e-12, double psd_tol = 1e-10) const
    {
        return is_hermitian(tol) && std::abs(trace() - 1.0) <= tol && min_eigenvalue() >= -psd_tol;
    }

    // Total population on the two edge sites.
    double boundary_population() const
    {
        double p = 0.0;
        for (int al = 0; al < 2; ++al) {
            p += std::abs((*this)(window.n_min, al, window.n_min, al));
            if (window.n_max != window.n_min) {
                p += std::abs((*this)(window.n_max, al, window.n_max, al));
            }
        }
        return p;
    }
};

// Spinless operator on the window (W x W), e.g. the lattice factor of a state.
struct LatticeOperator {
    LatticeWindow window;
    Eigen::MatrixXcd matrix;

    LatticeOperator() = default;
    LatticeOperator(LatticeWindow w, Eigen::MatrixXcd m) : window(w), matrix(std::move(m))
    {
        if (matrix.rows() != w.width() || matrix.cols() != w.width()) {
            throw domain_error("LatticeOperator: matrix dimension does not match window");
        }
    }
    complex operator()(long n, long np) const
    {
        return matrix(n - window.n_min, np - window.n_min);
    }
};

inline DensityOperator density_from_pure(const PureState &psi)
{
    return DensityOperator(psi.window, psi.amplitudes * psi.amplitudes.adjoint());
}

inline LatticeOperator spin_trace(const DensityOperator &rho)
{
    const long w = rho.window.width();
    Eigen::MatrixXcd out(w, w);
    for (long i = 0; i < w; ++i) {
        for (long j = 0; j < w; ++j) {
            out(i, j) = rho.matrix(2 * i, 2 * j) + rho.matrix(2 * i + 1, 2 * j + 1);
        }
    }
    return LatticeOperator(rho.window, std::move(out));
}

// rho_L (x) rho_S in composite ordering.
inline DensityOperator tensor_product(const LatticeOperator &lattice, const SpinMatrix &spin)
{
    DensityOperator out(lattice.window);
    const long w = lattice.window.width();
    for (long i = 0; i < w; ++i) {
        for (long j = 0; j < w; ++j) {
            out.matrix.block<2, 2>(2 * i, 2 * j) = lattice.matrix(i, j) * spin;
        }
    }
    return out;
}

inline bool is_unitary(const SpinMatrix &u, double tol = 1e-12)
{
    return ((u * u.adjoint()) - SpinMatrix::Identity()).cwiseAbs().maxCoeff() <= tol;
}

// (I (x) u) rho (I (x) u)^dagger
inline DensityOperator apply_spin_rotation(const DensityOperator &rho, const SpinMatrix &u)
{
    if (!is_unitary(u)) {
        throw domain_error("apply_spin_rotation: spin matrix is not unitary");
    }
    DensityOperator out(rho.window);
    const long w = rho.window.width();
    const SpinMatrix ud = u.adjoint();
    for (long i = 0; i < w; ++i) {
        for (long j = 0; j < w; ++j) {
            out.matrix.block<2, 2>(2 * i, 2 * j) = u * rho.matrix.block<2, 2>(2 * i, 2 * j) * ud;
        }
    }
    return out;
}

} // namespace latwig

#endif
