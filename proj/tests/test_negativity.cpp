#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include <latwig/analytic_states.hpp>
#include <latwig/dynamics_continuous.hpp>
#include <latwig/dynamics_discrete.hpp>
#include <latwig/negativity.hpp>

#include "oracles.hpp"

using namespace latwig;

TEST(TraceNorm, TwoByTwoAgainstEigenSolver)
{
    std::mt19937_64 rng(4);
    std::normal_distribution<double> nd;
    for (int i = 0; i < 200; ++i) {
        SpinMatrix a;
        a << nd(rng), complex(nd(rng), nd(rng)), 0.0, nd(rng);
        a(1, 0) = std::conj(a(0, 1));
        Eigen::SelfAdjointEigenSolver<SpinMatrix> es(a);
        EXPECT_NEAR(trace_norm_2x2(a), es.eigenvalues().cwiseAbs().sum(), 1e-13);
    }
}

TEST(MatrixNegativity, CatFamily)
{
    const LatticeWindow w(-6, 6);
    const KGrid g(32);
    for (const double b : {0.0, 0.5, 1.0, 2.0}) {
        for (const double phase : {0.0, 1.3}) {
            const complex beta = std::polar(b, phase);
            const PureState psi = cat_state({-2, 3, beta}, w);
            const NegativityReport rep = matrix_negativity(wigner_of_pure(psi, g));
            EXPECT_NEAR(rep.eta, cat_negativity(beta), 1e-10) << b;
            double sum = 0.0;
            for (const auto &[m, v] : rep.per_m) {
                sum += v;
            }
            EXPECT_NEAR(sum - 1.0, rep.eta, 1e-14);
        }
    }
    EXPECT_DOUBLE_EQ(cat_negativity(1.0), 1.0);
}

TEST(MatrixNegativity, WernerFamily)
{
    const LatticeWindow w(-5, 5);
    const KGrid g(24);
    for (const double z : {0.0, 0.25, 0.3, 0.5, 0.75, 1.0}) {
        EXPECT_NEAR(matrix_negativity(werner_wigner({-1, 2, z}, w, g)).eta, z, 1e-10);
        EXPECT_NEAR(matrix_negativity(wigner_of_density(werner_density({-1, 2, z}, w), g)).eta, z, 1e-10);
    }
}

TEST(MatrixNegativity, DecoheredCat)
{
    const LatticeWindow w(-5, 5);
    const KGrid g(24);
    const std::pair<double, int> cases[] = {{0.2, 1}, {0.2, 5}, {0.5, 3}, {0.9, 10}};
    for (const auto &[p, t] : cases) {
        EXPECT_NEAR(matrix_negativity(iterated_cat_wigner(-1, 3, p, t, w, g)).eta, std::pow(1.0 - p, t), 1e-12);
    }
}

TEST(MatrixNegativity, RotationInvariance)
{
    std::mt19937_64 rng(99);
    const LatticeWindow w(-12, 12);
    const KGrid g(64);
    const WignerMatrix wm = two_gaussian_wigner_closed({4, -3, 1.2}, w, g);
    const double eta = matrix_negativity(wm).eta;
    EXPECT_GT(eta, 0.0);
    for (int i = 0; i < 20; ++i) {
        EXPECT_NEAR(matrix_negativity(rotate_spin(wm, oracle::random_su2(rng))).eta, eta, 1e-10);
    }
}

TEST(MatrixNegativity, ProductStateReducesToScalar)
{
    const LatticeWindow w(-12, 12);
    const KGrid g(64);
    const ScalarWigner wl = spinless_double_delta_wigner(-2, 3, 1.0, w, g);
    const SpinVector s = SpinVector(0.6, complex(0.0, 0.8));
    const SpinMatrix rho_s = s * s.adjoint();
    EXPECT_NEAR(matrix_negativity(product_wigner(wl, rho_s)).eta, scalar_negativity(wl), 1e-13);
    // nonnegative lattice factor, pure spin: zero
    const ScalarWigner delta = spinless_double_delta_wigner(-2, 3, 0.0, w, g);
    EXPECT_NEAR(matrix_negativity(product_wigner(delta, rho_s)).eta, 0.0, 1e-14);
}

TEST(MatrixNegativity, RejectsNonHermitian)
{
    const LatticeWindow w(-2, 2);
    WignerMatrix wm(w, KGrid(12));
    wm(0, 0)(0, 1) = 0.3;
    EXPECT_THROW(matrix_negativity(wm), domain_error);
}

TEST(ScalarNegativity, SingleDeltaAndSpinTracedCat)
{
    const LatticeWindow w(-6, 6);
    const KGrid g(32);
    PureState psi(w);
    psi(1, 0) = 1.0;
    EXPECT_NEAR(scalar_negativity(spin_trace_wigner(wigner_of_pure(psi, g))), 0.0, 1e-14);
    EXPECT_NEAR(scalar_negativity(spin_trace_wigner(wigner_of_pure(cat_state({-2, 3, 1.0}, w), g))), 0.0, 1e-14);
}

TEST(ScalarNegativity, SpinlessDoubleDeltaApproachesTwoOverPi)
{
    // the interference ridge contributes (1/2pi) int |cos(dn k)| dk = 2/pi
    const LatticeWindow w(-6, 6);
    double prev_err = 1.0;
    for (const std::size_t nk : {64u, 256u, 1024u, 4096u}) {
        const KGrid g(nk);
        const double eta = scalar_negativity(spinless_double_delta_wigner(-2, 3, 1.0, w, g));
        const double err = std::abs(eta - 2.0 / pi);
        EXPECT_LE(err, prev_err);
        prev_err = err;
    }
    EXPECT_LT(prev_err, 1e-6);
    // on a given grid: the two ridges give exactly 1, the interference row its Riemann sum
    const KGrid g(64);
    double ridge = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) {
        ridge += std::abs(std::cos(5.0 * g.point(j)));
    }
    ridge *= g.spacing() / (2.0 * pi);
    EXPECT_NEAR(scalar_negativity(spinless_double_delta_wigner(-2, 3, 1.0, w, g)), ridge, 1e-14);
}

TEST(ScalarNegativity, RejectsComplexInput)
{
    const LatticeWindow w(-2, 2);
    ScalarWigner s(w, KGrid(12));
    s(0, 0) = complex(0.0, 1e-6);
    EXPECT_THROW(scalar_negativity(s), domain_error);
}

TEST(Timeseries, ProjectiveAndLindbladCats)
{
    const LatticeWindow w(-6, 6);
    const KGrid g(32);
    std::vector<double> times;
    std::vector<WignerMatrix> zero, half;
    for (int t = 0; t <= 5; ++t) {
        times.push_back(t);
        zero.push_back(iterated_cat_wigner(-1, 2, 0.0, t, w, g));
        half.push_back(iterated_cat_wigner(-1, 2, 0.5, t, w, g));
    }
    const auto z = negativity_timeseries(times, zero), h = negativity_timeseries(times, half);
    for (std::size_t i = 0; i < times.size(); ++i) {
        EXPECT_NEAR(z[i].second, 1.0, 1e-12);
        EXPECT_NEAR(h[i].second, std::pow(0.5, static_cast<double>(i)), 1e-12);
        if (i > 0) {
            EXPECT_LE(h[i].second, h[i - 1].second);
        }
    }

    const WignerMatrix cat = wigner_of_pure(cat_state({-1, 2, 1.0}, w), g);
    for (const double t : {0.0, 0.5, 2.0}) {
        EXPECT_NEAR(matrix_negativity(lindblad_wigner_closed(cat, LindbladChannel::sigma_z, 0.4, t)).eta,
                    std::exp(-0.8 * t), 1e-12);
    }
    EXPECT_THROW(negativity_timeseries({0.0}, {}), domain_error);
}
