#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <latwig/analytic_states.hpp>
#include <latwig/dynamics_continuous.hpp>

#include "oracles.hpp"

using namespace latwig;

namespace
{

DensityOperator gaussian_density(const LatticeWindow &w, long center, double sigma, SpinVector spin)
{
    return density_from_pure(product_gaussian_state({center, sigma, spin}, w));
}

// random state on the inner window, zero-padded out to the outer one
DensityOperator padded_random(const LatticeWindow &outer, long pad, std::mt19937_64 &rng)
{
    const LatticeWindow inner(outer.n_min + pad, outer.n_max - pad, outer.a);
    const DensityOperator r = oracle::random_density(inner, rng);
    DensityOperator out(outer);
    out.matrix.block(2 * pad, 2 * pad, inner.dim(), inner.dim()) = r.matrix;
    return out;
}

SpinVector plus_spin()
{
    return SpinVector(1.0, 1.0) / std::sqrt(2.0);
}

} // namespace

TEST(PotentialSpec, PolynomialEvaluation)
{
    const std::vector<double> c{1.0, -2.0, 0.5, 0.25};
    EXPECT_DOUBLE_EQ(potential_derivative(c, 0, 2.0), 1.0 - 4.0 + 2.0 + 2.0);
    EXPECT_DOUBLE_EQ(potential_derivative(c, 1, 2.0), -2.0 + 2.0 + 3.0);
    EXPECT_DOUBLE_EQ(potential_derivative(c, 3, 5.0), 1.5);
    EXPECT_DOUBLE_EQ(potential_derivative(c, 4, 5.0), 0.0);
    EXPECT_DOUBLE_EQ(potential_value(LinearPotential{0.7}, 3.0), 2.1);
    EXPECT_DOUBLE_EQ(potential_value(NoPotential{}, 3.0), 0.0);
    EXPECT_THROW(polynomial_coefficients(PolynomialPotential{std::vector<double>(8, 1.0)}), domain_error);
}

TEST(VonNeumann, FrozenWithoutHamiltonian)
{
    std::mt19937_64 rng(5);
    const LatticeWindow w(-6, 6);
    const DensityOperator rho = oracle::random_density(LatticeWindow(-6, 6), rng);
    // keep the edges empty so that the boundary guard stays quiet
    DensityOperator inner(w);
    inner.matrix.block(2, 2, w.dim() - 4, w.dim() - 4) = rho.matrix.block(2, 2, w.dim() - 4, w.dim() - 4);
    inner.matrix /= inner.trace();
    const auto res = von_neumann_rk4(inner, {0.0, NoPotential{}, false}, {0.0, 1.0, 3.0});
    ASSERT_EQ(res.snapshots.size(), 3u);
    for (const auto &s : res.snapshots) {
        EXPECT_LT((s.matrix - inner.matrix).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(VonNeumann, MatchesExactEvolution)
{
    const LatticeWindow w(-20, 20);
    const DensityOperator rho0 = gaussian_density(w, 2, 1.5, plus_spin());
    for (const bool coupled : {false, true}) {
        const HamiltonianSpec h{0.8, PolynomialPotential{{0.1, 0.4, 0.05}}, coupled};
        const auto res = von_neumann_rk4(rho0, h, {0.5, 2.0}, {.dt = 2e-3});
        const auto hd = oracle::dense_hamiltonian(w, 0.8, [](double x) { return 0.1 + 0.4 * x + 0.05 * x * x; }, coupled);
        for (std::size_t i = 0; i < res.times.size(); ++i) {
            const DensityOperator exact = oracle::exact_evolution(rho0, hd, res.times[i]);
            EXPECT_LT((res.snapshots[i].matrix - exact.matrix).cwiseAbs().maxCoeff(), 1e-9);
            EXPECT_NEAR(res.snapshots[i].trace().real(), 1.0, 1e-10);
            EXPECT_NEAR(res.snapshots[i].purity(), 1.0, 1e-8);
            EXPECT_LT(res.snapshots[i].hermiticity_defect(), 1e-15);
        }
    }
}

TEST(VonNeumann, BoundaryGuard)
{
    const LatticeWindow w(-6, 6);
    const DensityOperator rho0 = gaussian_density(w, 0, 0.5, SpinVector(1.0, 0.0));
    try {
        von_neumann_rk4(rho0, {1.0, NoPotential{}, false}, {5.0});
        FAIL() << "expected boundary_leak_error";
    } catch (const boundary_leak_error &e) {
        EXPECT_GT(e.leak(), default_boundary_epsilon);
    }
    const auto res = von_neumann_rk4(rho0, {1.0, NoPotential{}, false}, {5.0}, {.boundary_epsilon = 1.0});
    EXPECT_GT(res.boundary_leak, 1e-8);
}

TEST(VonNeumann, RejectsBadSteps)
{
    const LatticeWindow w(-6, 6);
    const DensityOperator rho0 = gaussian_density(w, 0, 0.5, SpinVector(1.0, 0.0));
    EXPECT_THROW(von_neumann_rk4(rho0, {1.0, NoPotential{}, false}, {1.0}, {.dt = 1.0}), domain_error);
    EXPECT_THROW(von_neumann_rk4(rho0, {1.0, NoPotential{}, false}, {1.0}, {.dt = -0.1}), domain_error);
    EXPECT_THROW(von_neumann_rk4(rho0, {1.0, NoPotential{}, false}, {1.0, 0.5}), domain_error);
}

TEST(Lindblad, ZeroCouplingIsVonNeumann)
{
    const LatticeWindow w(-12, 12);
    const DensityOperator rho0 = gaussian_density(w, 1, 1.2, plus_spin());
    const HamiltonianSpec h{1.0, LinearPotential{0.5}, true};
    const auto a = von_neumann_rk4(rho0, h, {1.0}, {.dt = 1e-2});
    const auto b = lindblad_rk4(rho0, h, {{{pauli::z(), 0.0}, {pauli::x(), 0.0}}}, {1.0}, {.dt = 1e-2});
    EXPECT_EQ((a.snapshots[0].matrix - b.snapshots[0].matrix).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Lindblad, RightHandSideMatchesDenseOracle)
{
    std::mt19937_64 rng(9);
    const LatticeWindow w(-4, 4);
    const DensityOperator rho = oracle::random_density(w, rng);
    const SpinMatrix a1 = oracle::random_su2(rng) * 0.7;
    SpinMatrix a2;
    a2 << 0.0, 1.0, 0.0, 0.0;
    const HamiltonianSpec h{0.6, PolynomialPotential{{0.0, 0.3, -0.1}}, true};
    const NoiseSpec noise{{{a1, 0.4}, {a2, 1.3}}};
    const auto hd = oracle::dense_hamiltonian(w, 0.6, [](double x) { return 0.3 * x - 0.1 * x * x; }, true);
    const Eigen::MatrixXcd expect = oracle::dense_lindblad_rhs(rho.matrix, hd, {{a1, 0.4}, {a2, 1.3}});
    // one tiny step isolates the generator
    const double dt = 1e-6;
    const auto res = lindblad_rk4(rho, h, noise, {dt}, {.dt = dt, .boundary_epsilon = 1.0});
    const Eigen::MatrixXcd fd = (res.snapshots[0].matrix - rho.matrix) / dt;
    EXPECT_LT((fd - expect).cwiseAbs().maxCoeff(), 1e-5);
}

TEST(Lindblad, DephasingAndFlipChannels)
{
    const LatticeWindow w(-10, 10);
    const DensityOperator rho0 = gaussian_density(w, 0, 1.0, SpinVector(complex(0.6, 0.0), complex(0.0, 0.8)));
    const double gamma = 0.3;
    const std::vector<double> times{1.0, 2.5, 5.0};
    const HamiltonianSpec none{0.0, NoPotential{}, false};
    const auto rz = lindblad_rk4(rho0, none, {{{pauli::z(), gamma}}}, times, {.dt = 1e-3});
    const auto rx = lindblad_rk4(rho0, none, {{{pauli::x(), gamma}}}, times, {.dt = 1e-3});
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double e = std::exp(-2.0 * gamma * times[i]);
        const SpinMatrix b0 = rho0.block(0, 1), bz = rz.snapshots[i].block(0, 1), bx = rx.snapshots[i].block(0, 1);
        EXPECT_NEAR(std::abs(bz(0, 1) - e * b0(0, 1)), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(bz(0, 0) - b0(0, 0)), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(bx(0, 0) - (0.5 * (1 + e) * b0(0, 0) + 0.5 * (1 - e) * b0(1, 1))), 0.0, 1e-12);
        EXPECT_NEAR(std::abs(bx(1, 0) - (0.5 * (1 + e) * b0(1, 0) + 0.5 * (1 - e) * b0(0, 1))), 0.0, 1e-12);
        EXPECT_NEAR(rz.snapshots[i].trace().real(), 1.0, 1e-12);
        if (i > 0) {
            EXPECT_LT(rz.snapshots[i].purity(), rz.snapshots[i - 1].purity());
            EXPECT_LT(rx.snapshots[i].purity(), rx.snapshots[i - 1].purity());
        }
    }
}

TEST(LindbladClosed, IdentityAtZeroAndLongTimeMixture)
{
    const LatticeWindow w(-10, 10);
    const KGrid g(48);
    const WignerMatrix w0 = two_gaussian_wigner_closed({3, -2, 1.0}, w, g);
    EXPECT_EQ(max_abs_difference(lindblad_wigner_closed(w0, LindbladChannel::sigma_x, 0.0, 3.0), w0), 0.0);
    EXPECT_EQ(max_abs_difference(lindblad_wigner_closed(w0, LindbladChannel::sigma_z, 0.7, 0.0), w0), 0.0);
    const WignerMatrix inf = lindblad_wigner_closed(w0, LindbladChannel::sigma_x, 1.0, 60.0);
    for (long m = w0.m_min(); m <= w0.m_max(); ++m) {
        for (std::size_t j = 0; j < g.size(); ++j) {
            const complex avg = 0.5 * (w0(m, j)(0, 0) + w0(m, j)(1, 1));
            EXPECT_NEAR(std::abs(inf(m, j)(0, 0) - avg), 0.0, 1e-16);
            EXPECT_NEAR(std::abs(inf(m, j)(1, 1) - avg), 0.0, 1e-16);
        }
    }
    EXPECT_THROW(lindblad_wigner_closed(w0, LindbladChannel::sigma_z, -1.0, 1.0), domain_error);
}

TEST(LindbladClosed, MatchesRk4WithHoppingActive)
{
    const LatticeWindow w(-16, 16);
    const KGrid g(72);
    const DensityOperator rho0 = gaussian_density(w, 0, 1.5, SpinVector(complex(0.6, 0.0), complex(0.0, 0.8)));
    const HamiltonianSpec h{1.0, NoPotential{}, false};
    const std::vector<double> times{0.5, 1.5};
    const auto pure = von_neumann_rk4(rho0, h, times, {.dt = 2e-3});
    for (const auto ch : {LindbladChannel::sigma_z, LindbladChannel::sigma_x}) {
        const auto noisy = lindblad_rk4(rho0, h, {{channel_term(ch, 0.3)}}, times, {.dt = 2e-3});
        for (std::size_t i = 0; i < times.size(); ++i) {
            const WignerMatrix closed =
                lindblad_wigner_closed(wigner_of_density(pure.snapshots[i], g), ch, 0.3, times[i]);
            EXPECT_LT(max_abs_difference(closed, wigner_of_density(noisy.snapshots[i], g)), 1e-10);
        }
    }
}

TEST(WignerRhs, MatchesTransformOfDenseGenerator)
{
    std::mt19937_64 rng(77);
    const LatticeWindow w(-6, 6, 0.8);
    const KGrid g(28);
    const DensityOperator rho = padded_random(w, 1, rng);
    const WignerMatrix w0 = wigner_of_density(rho, g);
    struct Case {
        Potential pot;
        std::function<double(double)> v;
    };
    const std::vector<Case> cases{
        {NoPotential{}, [](double) { return 0.0; }},
        {LinearPotential{0.9}, [](double x) { return 0.9 * x; }},
        {PolynomialPotential{{0.4, -0.3, 0.2}}, [](double x) { return 0.4 - 0.3 * x + 0.2 * x * x; }},
        {PolynomialPotential{{0.0, 0.1, 0.0, 0.05, 0.0, 0.0, -0.001}},
         [](double x) { return 0.1 * x + 0.05 * x * x * x - 0.001 * std::pow(x, 6); }},
    };
    for (const auto &c : cases) {
        for (const bool coupled : {false, true}) {
            const HamiltonianSpec h{1.3, c.pot, coupled};
            const auto hd = oracle::dense_hamiltonian(w, 1.3, c.v, coupled);
            const DensityOperator gen(w, complex(0.0, -1.0) * (hd * rho.matrix - rho.matrix * hd));
            const double scale = std::max(1.0, gen.matrix.cwiseAbs().maxCoeff());
            EXPECT_LT(max_abs_difference(wigner_evolution_rhs(w0, h), wigner_of_operator(gen, g)), 1e-12 * scale)
                << "coupled=" << coupled;
        }
    }
}

TEST(WignerRhs, FreeEvolutionKeepsMomentumMarginal)
{
    std::mt19937_64 rng(2);
    const LatticeWindow w(-6, 6);
    const KGrid g(27);
    const WignerMatrix rhs = wigner_evolution_rhs(wigner_of_density(padded_random(w, 1, rng), g),
                                                  {1.0, NoPotential{}, false});
    for (const auto &b : marginal_momentum(rhs)) {
        EXPECT_LT(b.cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(WignerRhs, QuadraticPotentialAgainstFiniteDifference)
{
    const LatticeWindow w(-12, 12);
    const KGrid g(52);
    const DensityOperator rho0 = gaussian_density(w, 1, 1.5, plus_spin());
    const HamiltonianSpec h{1.0, PolynomialPotential{{0.0, 0.2, 0.1}}, false};
    const double dt = 1e-4;
    const auto res = von_neumann_rk4(rho0, h, {dt}, {.dt = dt});
    const WignerMatrix fd = complex(1.0 / dt) * (wigner_of_density(res.snapshots[0], g) + complex(-1.0) * wigner_of_density(rho0, g));
    EXPECT_LT(max_abs_difference(fd, wigner_evolution_rhs(wigner_of_density(rho0, g), h)), 1e-4);
}

TEST(WignerRk4, AgreesWithDensityPath)
{
    const LatticeWindow w(-18, 18);
    const KGrid g(76);
    const DensityOperator rho0 = gaussian_density(w, 0, 1.2, plus_spin());
    const HamiltonianSpec h{1.0, PolynomialPotential{{0.0, 0.3, 0.02}}, true};
    const auto a = wigner_rk4(wigner_of_density(rho0, g), h, {0.4}, {.dt = 1e-2});
    const auto b = von_neumann_rk4(rho0, h, {0.4}, {.dt = 1e-2});
    EXPECT_LT(max_abs_difference(a.snapshots[0], wigner_of_density(b.snapshots[0], g)), 1e-12);
    EXPECT_NEAR(a.snapshots[0].normalization().real(), 1.0, 1e-12);
}

TEST(LinearPropagator, IdentityAtZeroTime)
{
    const LatticeWindow w(-20, 20);
    const KGrid g(96);
    const WignerMatrix w0 = wigner_of_density(gaussian_density(w, 3, 2.0, plus_spin()), g);
    EXPECT_LT(max_abs_difference(linear_potential_propagate(w0, 1.0, 1.0, 0.0), w0), 1e-15);
    EXPECT_LT(max_abs_difference(spin_linear_propagate(w0, 1.0, 1.0, 0.0), w0), 1e-15);
    EXPECT_LT(max_abs_difference(hopping_propagate(w0, 1.0, 0.0), w0), 1e-15);
    EXPECT_THROW(linear_potential_propagate(w0, 1.0, 0.0, 1.0), domain_error);
}

TEST(LinearPropagator, MatchesExactEvolution)
{
    const LatticeWindow w(-30, 30, 0.5);
    const KGrid g(128);
    const DensityOperator rho0 = gaussian_density(w, 3, 2.0, SpinVector(complex(0.8, 0.0), complex(0.0, -0.6)));
    const WignerMatrix w0 = wigner_of_density(rho0, g);
    for (const double lambda : {1.0, -0.7, 2.6}) {
        const double lambda_a = lambda * w.a;
        const auto hd = oracle::dense_hamiltonian(w, 1.0, [&](double x) { return lambda * x; }, false);
        for (const double t : {0.4, 2.0, 3.7}) {
            const WignerMatrix exact = wigner_of_density(oracle::exact_evolution(rho0, hd, t), g);
            EXPECT_LT(max_abs_difference(linear_potential_propagate(w0, 1.0, lambda_a, t), exact), 1e-12)
                << lambda << " " << t;
        }
    }
}

TEST(LinearPropagator, BlochPeriodAndMomentumDrift)
{
    const LatticeWindow w(-40, 40);
    const KGrid g(164);
    const WignerMatrix w0 = wigner_of_density(gaussian_density(w, 3, 2.0, SpinVector(1.0, 0.0)), g);
    for (const double lambda_a : {1.0, 0.5}) {
        EXPECT_LT(max_abs_difference(linear_potential_propagate(w0, 1.0, lambda_a, two_pi / lambda_a), w0), 1e-8);
    }
    const double t = 1.3, lambda_a = 1.0;
    const auto m0 = marginal_momentum(w0);
    const auto mt = marginal_momentum(linear_potential_propagate(w0, 1.0, lambda_a, t));
    std::vector<complex> s0(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) {
        s0[j] = m0[j](0, 0);
    }
    const auto shifted = TrigPolynomial(s0, g).shifted(lambda_a * t, g);
    for (std::size_t j = 0; j < g.size(); ++j) {
        EXPECT_NEAR(std::abs(mt[j](0, 0) - shifted[j]), 0.0, 1e-8);
    }
}

TEST(LinearPropagator, LeakIsReported)
{
    const LatticeWindow w(-8, 8);
    const KGrid g(40);
    const WignerMatrix w0 = wigner_of_density(gaussian_density(w, 0, 1.0, SpinVector(1.0, 0.0)), g);
    EXPECT_THROW(linear_potential_propagate(w0, 1.0, 0.2, 4.0), boundary_leak_error);
    EXPECT_THROW(hopping_propagate(w0, 1.0, 5.0), boundary_leak_error);
}

TEST(HoppingPropagator, MatchesExactEvolution)
{
    const LatticeWindow w(-30, 30);
    const KGrid g(128);
    const DensityOperator rho0 = gaussian_density(w, -2, 1.5, plus_spin());
    const auto hd = oracle::dense_hamiltonian(w, 0.9, [](double) { return 0.0; }, false);
    for (const double t : {0.5, 2.0, 4.0}) {
        EXPECT_LT(max_abs_difference(hopping_propagate(wigner_of_density(rho0, g), 0.9, t),
                                     wigner_of_density(oracle::exact_evolution(rho0, hd, t), g)),
                  1e-12);
    }
}

TEST(SpinPropagator, MatchesExactEvolutionAllEntries)
{
    const LatticeWindow w(-30, 30);
    const KGrid g(128);
    const DensityOperator rho0 = gaussian_density(w, 3, 2.0, plus_spin());
    const WignerMatrix w0 = wigner_of_density(rho0, g);
    for (const double lambda : {1.0, -0.6}) {
        const auto hd = oracle::dense_hamiltonian(w, 1.0, [&](double x) { return lambda * x; }, true);
        for (const double t : {0.3, 1.0, 2.0}) {
            const WignerMatrix exact = wigner_of_density(oracle::exact_evolution(rho0, hd, t), g);
            EXPECT_LT(max_abs_difference(spin_linear_propagate(w0, 1.0, lambda, t), exact), 1e-12)
                << lambda << " " << t;
        }
    }
}

TEST(SpinPropagator, MirrorSymmetryBetweenDiagonalEntries)
{
    const LatticeWindow w(-30, 30);
    const KGrid g(128);
    const WignerMatrix w0 = wigner_of_density(gaussian_density(w, 3, 2.0, plus_spin()), g);
    for (const double t : {0.7, 2.2}) {
        const WignerMatrix up = spin_linear_propagate(w0, 1.0, 1.0, t);
        const WignerMatrix down = spin_linear_propagate(w0, 1.0, -1.0, t);
        double diff = 0.0;
        for (long m = w0.m_min(); m <= w0.m_max(); ++m) {
            for (std::size_t j = 0; j < g.size(); ++j) {
                diff = std::max(diff, std::abs(up(m, j)(1, 1) - down(m, j)(0, 0)));
            }
        }
        EXPECT_LT(diff, 1e-10);
    }
}

TEST(SpinPropagator, DiagonalRidgesSeparate)
{
    const LatticeWindow w(-30, 30);
    const KGrid g(128);
    const WignerMatrix wt = spin_linear_propagate(wigner_of_density(gaussian_density(w, 3, 2.0, plus_spin()), g), 1.0, 1.0, 1.0);
    double mean0 = 0.0, mean1 = 0.0, p0 = 0.0, p1 = 0.0;
    const PositionMarginal pm = marginal_position(wt);
    for (long n = w.n_min; n <= w.n_max; ++n) {
        p0 += pm.at(n)(0, 0).real();
        p1 += pm.at(n)(1, 1).real();
        mean0 += 2.0 * n * pm.at(n)(0, 0).real();
        mean1 += 2.0 * n * pm.at(n)(1, 1).real();
    }
    EXPECT_GT(std::abs(mean0 / p0 - mean1 / p1), 0.5);
}
