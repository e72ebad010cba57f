#ifndef LATWIG_DYNAMICS_CONTINUOUS_HPP
#define LATWIG_DYNAMICS_CONTINUOUS_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include <latwig/errors.hpp>
#include <latwig/kgrid.hpp>
#include <latwig/special_functions.hpp>
#include <latwig/state.hpp>
#include <latwig/wigner.hpp>

namespace latwig
{

inline constexpr int max_polynomial_degree = 6;
inline constexpr double default_boundary_epsilon = 1e-8;

struct NoPotential {
};

// V_n = slope * a * n
struct LinearPotential {
    double slope = 0.0;
};

// V(x) = sum_p coeffs[p] x^p at x = n a
struct PolynomialPotential {
    std::vector<double> coeffs;
};

using Potential = std::variant<NoPotential, LinearPotential, PolynomialPotential>;

// H = J (T+ + T-) + V, or J (T+ + T-) + sigma_z V when spin_coupled.
struct HamiltonianSpec {
    double j_hop = 1.0;
    Potential potential = NoPotential{};
    bool spin_coupled = false;
};

struct LindbladTerm {
    SpinMatrix op;
    double gamma = 0.0;
};

struct NoiseSpec {
    std::vector<LindbladTerm> lindblad_ops;
};

template <class Snapshot>
struct EvolutionResult {
    std::vector<double> times;
    std::vector<Snapshot> snapshots;
    double boundary_leak = 0.0;
};

struct RK4Options {
    std::optional<double> dt;
    double boundary_epsilon = default_boundary_epsilon;
};

// The coefficient list of V(x), with the degree checked.
inline std::vector<double> polynomial_coefficients(const Potential &pot)
{
    if (std::holds_alternative<NoPotential>(pot)) {
        return {};
    }
    if (const auto *lin = std::get_if<LinearPotential>(&pot)) {
        return {0.0, lin->slope};
    }
    const auto &c = std::get<PolynomialPotential>(pot).coeffs;
    if (static_cast<int>(c.size()) > max_polynomial_degree + 1) {
        throw domain_error("polynomial potential: degree exceeds " + std::to_string(max_polynomial_degree));
    }
    return c;
}

// d^order V / dx^order at x
inline double potential_derivative(const std::vector<double> &coeffs, int order, double x)
{
    double acc = 0.0;
    for (int p = static_cast<int>(coeffs.size()) - 1; p >= order; --p) {
        double falling = 1.0;
        for (int q = 0; q < order; ++q) {
            falling *= static_cast<double>(p - q);
        }
        acc = acc * x + falling * coeffs[static_cast<std::size_t>(p)];
    }
    return acc;
}

inline double potential_value(const Potential &pot, double x)
{
    return potential_derivative(polynomial_coefficients(pot), 0, x);
}

namespace detail
{

// Per-row diagonal of the potential part of H in composite order.
inline Eigen::VectorXd potential_diagonal(const HamiltonianSpec &h, const LatticeWindow &w)
{
    const auto coeffs = polynomial_coefficients(h.potential);
    Eigen::VectorXd d(w.dim());
    for (long n = w.n_min; n <= w.n_max; ++n) {
        const double v = potential_derivative(coeffs, 0, static_cast<double>(n) * w.a);
        d[w.index(n, 0)] = v;
        d[w.index(n, 1)] = h.spin_coupled ? -v : v;
    }
    return d;
}

// H rho with hard walls: hopping shifts by one site (two composite rows).
inline Eigen::MatrixXcd apply_hamiltonian(const Eigen::MatrixXcd &rho, double j_hop, const Eigen::VectorXd &vdiag)
{
    const Eigen::Index d = rho.rows();
    Eigen::MatrixXcd out = vdiag.cast<complex>().asDiagonal() * rho;
    if (d > 2 && j_hop != 0.0) {
        out.bottomRows(d - 2) += j_hop * rho.topRows(d - 2);
        out.topRows(d - 2) += j_hop * rho.bottomRows(d - 2);
    }
    return out;
}

// (I x A) rho
inline Eigen::MatrixXcd apply_spin_left(const Eigen::MatrixXcd &rho, const SpinMatrix &a)
{
    Eigen::MatrixXcd out(rho.rows(), rho.cols());
    for (Eigen::Index i = 0; i < rho.rows(); i += 2) {
        out.middleRows(i, 2).noalias() = a * rho.middleRows(i, 2);
    }
    return out;
}

struct Liouvillian {
    double j_hop;
    Eigen::VectorXd vdiag;
    std::vector<LindbladTerm> terms;
    std::vector<SpinMatrix> adag_a;

    // Valid for Hermitian rho, which every RK4 stage is.
    Eigen::MatrixXcd operator()(const Eigen::MatrixXcd &rho) const
    {
        const Eigen::MatrixXcd hr = apply_hamiltonian(rho, j_hop, vdiag);
        Eigen::MatrixXcd out = complex(0.0, -1.0) * (hr - hr.adjoint());
        for (std::size_t t = 0; t < terms.size(); ++t) {
            if (terms[t].gamma == 0.0) {
                continue;
            }
            const Eigen::MatrixXcd ar = apply_spin_left(rho, terms[t].op);
            const Eigen::MatrixXcd ara = apply_spin_left(ar.adjoint(), terms[t].op).adjoint();
            const Eigen::MatrixXcd aar = apply_spin_left(rho, adag_a[t]);
            out += terms[t].gamma * (ara - 0.5 * (aar + aar.adjoint()));
        }
        return out;
    }
};

inline void check_times(const std::vector<double> &times)
{
    double prev = 0.0;
    for (double t : times) {
        if (!std::isfinite(t) || t < prev) {
            throw domain_error("evolution: snapshot times must be finite, non-negative and non-decreasing");
        }
        prev = t;
    }
}

inline double norm_estimate(const HamiltonianSpec &h, const LatticeWindow &w, const NoiseSpec &noise)
{
    const Eigen::VectorXd v = potential_diagonal(h, w);
    double est = 2.0 * std::abs(h.j_hop) + (v.size() ? v.cwiseAbs().maxCoeff() : 0.0);
    for (const auto &t : noise.lindblad_ops) {
        est += 2.0 * t.gamma * t.op.squaredNorm();
    }
    return est;
}

inline EvolutionResult<DensityOperator> density_rk4(const DensityOperator &rho0, const HamiltonianSpec &h,
                                                    const NoiseSpec &noise, const std::vector<double> &times,
                                                    const RK4Options &opt)
{
    check_times(times);
    Liouvillian lv{h.j_hop, potential_diagonal(h, rho0.window), {}, {}};
    for (const auto &t : noise.lindblad_ops) {
        if (!(t.gamma >= 0.0)) {
            throw domain_error("lindblad: couplings must be non-negative");
        }
        lv.terms.push_back(t);
        lv.adag_a.push_back(t.op.adjoint() * t.op);
    }
    const double est = norm_estimate(h, rho0.window, noise);
    const double dt_max = est > 0.0 ? 0.05 / est : 0.05;
    const double dt = opt.dt.value_or(dt_max);
    if (!(dt > 0.0)) {
        throw domain_error("rk4: dt must be positive");
    }
    // RK4 is stable on the imaginary axis up to 2 sqrt 2; the commutator
    // spectrum spans twice the norm estimate.
    if (dt * 2.0 * est > 2.5) {
        throw domain_error("rk4: dt = " + std::to_string(dt) + " exceeds the stability bound for this Hamiltonian");
    }

    EvolutionResult<DensityOperator> res;
    Eigen::MatrixXcd rho = rho0.matrix;
    double now = 0.0;
    res.boundary_leak = rho0.boundary_population();
    for (double target : times) {
        const double span = target - now;
        const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / dt - 1e-9)) : 0;
        const double h_step = steps > 0 ? span / static_cast<double>(steps) : 0.0;
        for (long s = 0; s < steps; ++s) {
            const Eigen::MatrixXcd k1 = lv(rho);
            const Eigen::MatrixXcd k2 = lv(rho + (0.5 * h_step) * k1);
            const Eigen::MatrixXcd k3 = lv(rho + (0.5 * h_step) * k2);
            const Eigen::MatrixXcd k4 = lv(rho + h_step * k3);
            rho += (h_step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            rho = 0.5 * (rho + rho.adjoint()).eval();
            const double leak = DensityOperator(rho0.window, rho).boundary_population();
            res.boundary_leak = std::max(res.boundary_leak, leak);
            if (leak > opt.boundary_epsilon) {
                throw boundary_leak_error("rk4: boundary population " + std::to_string(leak) + " at t = "
                                              + std::to_string(now + (s + 1) * h_step),
                                          leak);
            }
        }
        now = target;
        res.times.push_back(target);
        res.snapshots.emplace_back(rho0.window, rho);
    }
    return res;
}

} // namespace detail

inline EvolutionResult<DensityOperator> von_neumann_rk4(const DensityOperator &rho0, const HamiltonianSpec &h,
                                                        const std::vector<double> &times, const RK4Options &opt = {})
{
    return detail::density_rk4(rho0, h, NoiseSpec{}, times, opt);
}

inline EvolutionResult<DensityOperator> lindblad_rk4(const DensityOperator &rho0, const HamiltonianSpec &h,
                                                     const NoiseSpec &noise, const std::vector<double> &times,
                                                     const RK4Options &opt = {})
{
    return detail::density_rk4(rho0, h, noise, times, opt);
}

// dW/dt from the hopping term and the k-derivative series of a polynomial potential.
inline WignerMatrix wigner_evolution_rhs(const WignerMatrix &w, const HamiltonianSpec &h)
{
    const auto coeffs = polynomial_coefficients(h.potential);
    const int degree = static_cast<int>(coeffs.size()) - 1;
    const KGrid &grid = w.kgrid();
    const double a = w.window().a;
    const std::size_t nk = grid.size();
    WignerMatrix out(w.window(), grid);

    std::vector<double> two_j_sin(nk);
    for (std::size_t j = 0; j < nk; ++j) {
        two_j_sin[j] = 2.0 * h.j_hop * std::sin(grid.point(j));
    }

    for (long m = w.m_min(); m <= w.m_max(); ++m) {
        auto r = out.row(m);
        for (std::size_t j = 0; j < nk; ++j) {
            r[j] = two_j_sin[j] * (w.at(m + 1, j) - w.at(m - 1, j));
        }
        if (degree < 1 && !(h.spin_coupled && degree == 0)) {
            continue;
        }
        const double c = 0.5 * static_cast<double>(m) * a;
        for (int ea = 0; ea < 2; ++ea) {
            for (int eb = 0; eb < 2; ++eb) {
                const bool offdiag_coupled = h.spin_coupled && ea != eb;
                const double spin_sign = (h.spin_coupled && ea == 1) ? -1.0 : 1.0;
                const auto samples = w.component(m, ea, eb);
                const TrigPolynomial tp(samples, grid);
                std::vector<complex> acc(nk, complex{});
                // odd derivatives: V_n - V_n'; even ones: V_n + V_n'
                for (int p = offdiag_coupled ? 0 : 1; p <= degree; p += 2) {
                    double fact = 1.0;
                    for (int q = 2; q <= p; ++q) {
                        fact *= q;
                    }
                    const int s = p / 2;
                    const double vder = potential_derivative(coeffs, p, c);
                    if (vder == 0.0) {
                        continue;
                    }
                    const double sgn = (s % 2 == 0) ? 1.0 : -1.0;
                    complex coef = sgn * std::pow(a, p) / (std::pow(4.0, s) * fact) * vder * spin_sign;
                    if (offdiag_coupled) {
                        coef *= complex(0.0, -2.0);
                    }
                    const auto deriv = p == 0 ? samples : tp.derivative(p, grid);
                    for (std::size_t j = 0; j < nk; ++j) {
                        acc[j] += coef * deriv[j];
                    }
                }
                for (std::size_t j = 0; j < nk; ++j) {
                    r[j](ea, eb) += acc[j];
                }
            }
        }
    }
    return out;
}

// RK4 directly on the Wigner matrix; cost O(rows * n_k^2) per stage.
inline EvolutionResult<WignerMatrix> wigner_rk4(const WignerMatrix &w0, const HamiltonianSpec &h,
                                                const std::vector<double> &times, const RK4Options &opt = {})
{
    detail::check_times(times);
    const double est = detail::norm_estimate(h, w0.window(), NoiseSpec{});
    const double dt = opt.dt.value_or(est > 0.0 ? 0.05 / est : 0.05);
    if (!(dt > 0.0) || dt * 2.0 * est > 2.5) {
        throw domain_error("wigner_rk4: dt outside the stability bound");
    }
    EvolutionResult<WignerMatrix> res;
    WignerMatrix w = w0;
    double now = 0.0;
    res.boundary_leak = wigner_boundary_population(w0);
    for (double target : times) {
        const double span = target - now;
        const long steps = span > 0.0 ? static_cast<long>(std::ceil(span / dt - 1e-9)) : 0;
        const double hs = steps > 0 ? span / static_cast<double>(steps) : 0.0;
        for (long s = 0; s < steps; ++s) {
            const WignerMatrix k1 = wigner_evolution_rhs(w, h);
            const WignerMatrix k2 = wigner_evolution_rhs(w + complex(0.5 * hs) * k1, h);
            const WignerMatrix k3 = wigner_evolution_rhs(w + complex(0.5 * hs) * k2, h);
            const WignerMatrix k4 = wigner_evolution_rhs(w + complex(hs) * k3, h);
            w += complex(hs / 6.0) * (k1 + complex(2.0) * k2 + complex(2.0) * k3 + k4);
            const double leak = wigner_boundary_population(w);
            res.boundary_leak = std::max(res.boundary_leak, leak);
            if (leak > opt.boundary_epsilon) {
                throw boundary_leak_error("wigner_rk4: boundary population " + std::to_string(leak), leak);
            }
        }
        now = target;
        res.times.push_back(target);
        res.snapshots.push_back(w);
    }
    return res;
}

namespace detail
{

// Largest kernel order kept for Bessel arguments up to z_max. The floor of 30
// and 2 z_max cover small and moderate arguments; the cube-root margin keeps
// the discarded tail below double precision for large ones.
inline long bessel_kernel_width(double z_max)
{
    const double z = std::abs(z_max);
    const double w = std::max({30.0, std::ceil(2.0 * z), std::ceil(z + 12.0 * std::cbrt(z) + 10.0)});
    return std::min(static_cast<long>(w), static_cast<long>(max_bessel_order));
}

struct KernelPlan {
    // per grid point: Bessel argument and an optional per-l phase
    std::vector<double> arg;
    double phase_per_l = 0.0; // input row l picks up exp(i phase_per_l l)
    double phase_per_m = 0.0; // output row m picks up exp(i phase_per_m m)
    double k_shift = 0.0;     // input sampled at k + k_shift
};

// out(m, j) = e^{i phase_per_m m} sum_l J_{m-l}(arg_j) e^{i phase_per_l l} in(l, k_j + k_shift)
// for one component, over m on [m_min - L, m_max + L].
inline std::vector<std::vector<complex>> apply_kernel(const WignerMatrix &w0, int ea, int eb, const KernelPlan &plan,
                                                      long width)
{
    const KGrid &grid = w0.kgrid();
    const std::size_t nk = grid.size();
    const long rows_in = w0.rows();
    const long rows_out = rows_in + 2 * width;

    std::vector<std::vector<complex>> src(static_cast<std::size_t>(rows_in));
    for (long l = w0.m_min(); l <= w0.m_max(); ++l) {
        const auto samples = w0.component(l, ea, eb);
        auto &dst = src[static_cast<std::size_t>(l - w0.m_min())];
        if (plan.k_shift == 0.0) {
            dst = samples;
        } else {
            dst = TrigPolynomial(samples, grid).shifted(plan.k_shift, grid);
        }
    }

    std::vector<std::vector<complex>> out(static_cast<std::size_t>(rows_out), std::vector<complex>(nk, complex{}));
    std::vector<double> kern;
    for (std::size_t j = 0; j < nk; ++j) {
        const double z = plan.arg[j];
        kern = bessel_jn_sequence(static_cast<int>(width), z);
        auto bessel = [&](long order) {
            const double v = kern[static_cast<std::size_t>(std::abs(order))];
            return (order < 0 && (order % 2 != 0)) ? -v : v;
        };
        for (long l = w0.m_min(); l <= w0.m_max(); ++l) {
            complex s = src[static_cast<std::size_t>(l - w0.m_min())][j];
            if (s == complex{}) {
                continue;
            }
            if (plan.phase_per_l != 0.0) {
                s *= std::polar(1.0, plan.phase_per_l * static_cast<double>(l));
            }
            const long lo = l - width, hi = l + width;
            for (long m = lo; m <= hi; ++m) {
                out[static_cast<std::size_t>(m - (w0.m_min() - width))][j] += bessel(m - l) * s;
            }
        }
        if (plan.phase_per_m != 0.0) {
            for (long m = w0.m_min() - width; m <= w0.m_max() + width; ++m) {
                out[static_cast<std::size_t>(m - (w0.m_min() - width))][j] *=
                    std::polar(1.0, plan.phase_per_m * static_cast<double>(m));
            }
        }
    }
    return out;
}

// Copies the in-window rows back and returns the population that landed on
// sites outside the window.
inline double collect(WignerMatrix &dst, int ea, int eb, const std::vector<std::vector<complex>> &ext, long width,
                      bool count_leak)
{
    const long base = dst.m_min() - width;
    double leak = 0.0;
    const double dk = dst.kgrid().spacing();
    for (long m = base; m <= dst.m_max() + width; ++m) {
        const auto &row = ext[static_cast<std::size_t>(m - base)];
        if (dst.has_m(m)) {
            auto r = dst.row(m);
            for (std::size_t j = 0; j < r.size(); ++j) {
                r[j](ea, eb) = row[j];
            }
        } else if (count_leak && m % 2 == 0) {
            complex acc{};
            for (const auto &v : row) {
                acc += v;
            }
            leak += std::abs(acc) * dk;
        }
    }
    return leak;
}

inline void check_leak(double leak, double eps, const char *what)
{
    if (leak > eps) {
        throw boundary_leak_error(std::string(what) + ": population " + std::to_string(leak)
                                      + " propagated outside the window",
                                  leak);
    }
}

inline KernelPlan linear_plan(const KGrid &grid, double j_hop, double lambda_a, double t)
{
    KernelPlan p;
    p.k_shift = lambda_a * t;
    const double amp = -8.0 * (j_hop / lambda_a) * std::sin(0.5 * lambda_a * t);
    p.arg.resize(grid.size());
    for (std::size_t j = 0; j < grid.size(); ++j) {
        p.arg[j] = amp * std::sin(grid.point(j) + 0.5 * lambda_a * t);
    }
    return p;
}

inline long plan_width(const KernelPlan &p)
{
    double zmax = 0.0;
    for (double z : p.arg) {
        zmax = std::max(zmax, std::abs(z));
    }
    return bessel_kernel_width(zmax);
}

inline void require_lambda(double lambda_a)
{
    if (!(std::abs(lambda_a) > 0.0) || !std::isfinite(lambda_a)) {
        throw domain_error("linear propagator: lambda a must be finite and non-zero");
    }
}

} // namespace detail

// Spin-independent linear potential V_n = lambda a n:
// W(m,k,t) = sum_l J_{m-l}[-8 (J/lambda a) sin(k + lambda a t/2) sin(lambda a t/2)] W(l, k + lambda a t, 0).
inline WignerMatrix linear_potential_propagate(const WignerMatrix &w0, double j_hop, double lambda_a, double t,
                                               double boundary_epsilon = default_boundary_epsilon)
{
    detail::require_lambda(lambda_a);
    const detail::KernelPlan plan = detail::linear_plan(w0.kgrid(), j_hop, lambda_a, t);
    const long width = detail::plan_width(plan);
    WignerMatrix out(w0.window(), w0.kgrid());
    double leak = 0.0;
    for (int ea = 0; ea < 2; ++ea) {
        for (int eb = 0; eb < 2; ++eb) {
            leak += detail::collect(out, ea, eb, detail::apply_kernel(w0, ea, eb, plan, width), width, ea == eb);
        }
    }
    detail::check_leak(leak, boundary_epsilon, "linear_potential_propagate");
    return out;
}

// V = 0: W(m,k,t) = sum_l J_{m-l}(-4 J t sin k) W(l, k, 0).
inline WignerMatrix hopping_propagate(const WignerMatrix &w0, double j_hop, double t,
                                      double boundary_epsilon = default_boundary_epsilon)
{
    detail::KernelPlan plan;
    plan.arg.resize(w0.kgrid().size());
    for (std::size_t j = 0; j < plan.arg.size(); ++j) {
        plan.arg[j] = -4.0 * j_hop * t * std::sin(w0.kgrid().point(j));
    }
    const long width = detail::plan_width(plan);
    WignerMatrix out(w0.window(), w0.kgrid());
    double leak = 0.0;
    for (int ea = 0; ea < 2; ++ea) {
        for (int eb = 0; eb < 2; ++eb) {
            leak += detail::collect(out, ea, eb, detail::apply_kernel(w0, ea, eb, plan, width), width, ea == eb);
        }
    }
    detail::check_leak(leak, boundary_epsilon, "hopping_propagate");
    return out;
}

// Linear potential entering as sigma_z V. Diagonal entries follow the spinless
// kernel with lambda -> s lambda, s = (-1)^alpha. Off-diagonal entries:
// W_ab(m,k,t) = e^{-i s lambda a t m/2} sum_l e^{-i s lambda a t l/2}
//               J_{m-l}[-8 (J/lambda a) sin k sin(lambda a t/2)] W_ab(l,k,0).
inline WignerMatrix spin_linear_propagate(const WignerMatrix &w0, double j_hop, double lambda_a, double t,
                                          double boundary_epsilon = default_boundary_epsilon)
{
    detail::require_lambda(lambda_a);
    const KGrid &grid = w0.kgrid();
    WignerMatrix out(w0.window(), grid);
    double leak = 0.0;
    for (int ea = 0; ea < 2; ++ea) {
        const double s = ea == 0 ? 1.0 : -1.0;
        // diagonal
        {
            const detail::KernelPlan plan = detail::linear_plan(grid, j_hop, s * lambda_a, t);
            const long width = detail::plan_width(plan);
            leak += detail::collect(out, ea, ea, detail::apply_kernel(w0, ea, ea, plan, width), width, true);
        }
        // off-diagonal partner
        const int eb = 1 - ea;
        detail::KernelPlan plan;
        const double amp = -8.0 * (j_hop / lambda_a) * std::sin(0.5 * lambda_a * t);
        plan.phase_per_l = plan.phase_per_m = -0.5 * s * lambda_a * t;
        plan.arg.resize(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j) {
            plan.arg[j] = amp * std::sin(grid.point(j));
        }
        const long width = detail::plan_width(plan);
        detail::collect(out, ea, eb, detail::apply_kernel(w0, ea, eb, plan, width), width, false);
    }
    detail::check_leak(leak, boundary_epsilon, "spin_linear_propagate");
    return out;
}

enum class LindbladChannel { sigma_z, sigma_x };

// Spin-only dephasing (sigma_z) or flip (sigma_x) channel applied on top of
// the Wigner matrix w_h obtained from the Hamiltonian alone at time t.
inline WignerMatrix lindblad_wigner_closed(const WignerMatrix &w_h, LindbladChannel channel, double gamma, double t)
{
    if (!(gamma >= 0.0) || !(t >= 0.0)) {
        throw domain_error("lindblad_wigner_closed: gamma and t must be non-negative");
    }
    const double e = std::exp(-2.0 * gamma * t);
    WignerMatrix out = w_h;
    for (long m = out.m_min(); m <= out.m_max(); ++m) {
        for (auto &b : out.row(m)) {
            switch (channel) {
            case LindbladChannel::sigma_z:
                b(0, 1) *= e;
                b(1, 0) *= e;
                break;
            case LindbladChannel::sigma_x: {
                const SpinMatrix old = b;
                const double keep = 0.5 * (1.0 + e), swap = 0.5 * (1.0 - e);
                b(0, 0) = keep * old(0, 0) + swap * old(1, 1);
                b(1, 1) = keep * old(1, 1) + swap * old(0, 0);
                b(0, 1) = keep * old(0, 1) + swap * old(1, 0);
                b(1, 0) = keep * old(1, 0) + swap * old(0, 1);
                break;
            }
            }
        }
    }
    return out;
}

inline LindbladTerm channel_term(LindbladChannel channel, double gamma)
{
    return {channel == LindbladChannel::sigma_z ? pauli::z() : pauli::x(), gamma};
}

} // namespace latwig

#endif
