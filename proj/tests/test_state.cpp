#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include <latwig/analytic_states.hpp>
#include <latwig/state.hpp>
#include <latwig/state_io.hpp>

#include "oracles.hpp"

using namespace latwig;

namespace
{

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXcd &m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (m + m.adjoint()));
    return es.eigenvalues();
}

} // namespace

TEST(LatticeWindow, Basics)
{
    const LatticeWindow w(-3, 4, 0.5);
    EXPECT_EQ(w.width(), 8);
    EXPECT_EQ(w.dim(), 16);
    EXPECT_EQ(w.index(-3, 0), 0);
    EXPECT_EQ(w.index(-3, 1), 1);
    EXPECT_EQ(w.index(4, 1), 15);
    EXPECT_EQ(w.m_min(), -6);
    EXPECT_EQ(w.m_max(), 8);
    EXPECT_THROW(LatticeWindow(2, 1), domain_error);
    EXPECT_THROW(LatticeWindow(0, 1, 0.0), domain_error);
}

TEST(DensityFromPure, DeltaState)
{
    const LatticeWindow w(-2, 2);
    PureState psi(w);
    psi(0, 0) = 1.0;
    const DensityOperator rho = density_from_pure(psi);
    EXPECT_EQ(rho(0, 0, 0, 0), complex(1.0, 0.0));
    EXPECT_EQ((rho.matrix.cwiseAbs().array() > 0.0).count(), 1);
}

TEST(DensityFromPure, EqualSuperpositionHasFourEntries)
{
    const LatticeWindow w(-2, 2);
    PureState psi(w);
    psi(-1, 0) = 1.0 / std::sqrt(2.0);
    psi(2, 1) = 1.0 / std::sqrt(2.0);
    const DensityOperator rho = density_from_pure(psi);
    EXPECT_EQ((rho.matrix.cwiseAbs().array() > 1e-15).count(), 4);
    EXPECT_NEAR(std::abs(rho(-1, 0, 2, 1)), 0.5, 1e-15);
    EXPECT_NEAR(std::abs(rho(2, 1, -1, 0)), 0.5, 1e-15);
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-15);
}

TEST(DensityFromPure, TwoGaussianHasUnitTrace)
{
    const LatticeWindow w(-24, 24);
    const DensityOperator rho = density_from_pure(two_gaussian_state({6, -6, 1.5}, w));
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
    EXPECT_TRUE(rho.is_valid_state());
    EXPECT_NEAR(rho.purity(), 1.0, 1e-12);
}

TEST(DensityFromPure, RandomStatesHaveUnitTrace)
{
    std::mt19937_64 rng(7);
    const LatticeWindow w(-5, 5);
    for (int i = 0; i < 20; ++i) {
        const DensityOperator rho = density_from_pure(oracle::random_pure(w, rng));
        EXPECT_NEAR(rho.trace().real(), 1.0, 1e-14);
        EXPECT_LT(rho.hermiticity_defect(), 1e-15);
    }
}

TEST(SpinTrace, ProductStateGivesLatticeFactor)
{
    std::mt19937_64 rng(3);
    const LatticeWindow w(-3, 3);
    const DensityOperator full = oracle::random_density(LatticeWindow(-3, 3), rng);
    const LatticeOperator rho_l = spin_trace(full); // any lattice state will do
    SpinMatrix rho_s;
    rho_s << 0.7, complex(0.1, 0.2), complex(0.1, -0.2), 0.3;
    const LatticeOperator back = spin_trace(tensor_product(rho_l, rho_s));
    EXPECT_LT((back.matrix - rho_l.matrix).cwiseAbs().maxCoeff(), 1e-15);
    const LatticeOperator mixed = spin_trace(tensor_product(rho_l, 0.5 * pauli::identity()));
    EXPECT_LT((mixed.matrix - rho_l.matrix).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(SpinTrace, CatHasNoLatticeCoherence)
{
    const LatticeWindow w(-4, 4);
    const LatticeOperator l = spin_trace(density_from_pure(double_delta_state({-2, 3, 1.0}, w)));
    for (long n = w.n_min; n <= w.n_max; ++n) {
        for (long np = w.n_min; np <= w.n_max; ++np) {
            const double expected = (n == np && (n == -2 || n == 3)) ? 0.5 : 0.0;
            EXPECT_NEAR(std::abs(l(n, np)), expected, 1e-15);
        }
    }
}

TEST(SpinRotation, IdentityAndFlip)
{
    std::mt19937_64 rng(11);
    const LatticeWindow w(-2, 2);
    const DensityOperator rho = oracle::random_density(w, rng);
    EXPECT_LT((apply_spin_rotation(rho, pauli::identity()).matrix - rho.matrix).cwiseAbs().maxCoeff(), 1e-15);

    PureState up(w);
    up(1, 0) = 1.0;
    const DensityOperator flipped = apply_spin_rotation(density_from_pure(up), pauli::x());
    EXPECT_NEAR(flipped(1, 1, 1, 1).real(), 1.0, 1e-15);
    EXPECT_NEAR(std::abs(flipped(1, 0, 1, 0)), 0.0, 1e-15);
}

TEST(SpinRotation, PreservesSpectrumAndTrace)
{
    std::mt19937_64 rng(5);
    const LatticeWindow w(-3, 3);
    for (int i = 0; i < 10; ++i) {
        const DensityOperator rho = oracle::random_density(w, rng);
        const SpinMatrix u = oracle::random_su2(rng);
        const DensityOperator out = apply_spin_rotation(rho, u);
        EXPECT_NEAR(out.trace().real(), 1.0, 1e-13);
        EXPECT_LT((sorted_eigenvalues(out.matrix) - sorted_eigenvalues(rho.matrix)).cwiseAbs().maxCoeff(), 1e-10);
        EXPECT_NEAR(spin_trace(out).matrix.trace().real(), 1.0, 1e-13);
    }
}

TEST(SpinRotation, RejectsNonUnitary)
{
    const DensityOperator rho(LatticeWindow(0, 1));
    EXPECT_THROW(apply_spin_rotation(rho, 2.0 * pauli::identity()), domain_error);
}

TEST(DensityOperator, ChecksOnDemand)
{
    const LatticeWindow w(0, 2);
    DensityOperator rho(w);
    rho(0, 0, 0, 0) = 1.5;
    rho(1, 0, 1, 0) = -0.5;
    EXPECT_TRUE(rho.is_hermitian());
    EXPECT_FALSE(rho.is_valid_state());
    EXPECT_LT(rho.min_eigenvalue(), -0.4);
    EXPECT_NEAR(rho.boundary_population(), 1.5, 1e-15);
}

TEST(StateJson, RoundTripPreservesData)
{
    std::mt19937_64 rng(9);
    const LatticeWindow w(-2, 3, 0.25);
    const PureState psi = oracle::random_pure(w, rng);
    const PureState psi2 = pure_state_from_json(nlohmann::json::parse(to_json(psi).dump()));
    EXPECT_EQ(psi2.window, w);
    EXPECT_EQ(psi2.amplitudes, psi.amplitudes);

    const DensityOperator rho = density_from_pure(psi);
    const DensityOperator rho2 = density_operator_from_json(nlohmann::json::parse(to_json(rho).dump()));
    EXPECT_EQ(rho2.matrix, rho.matrix);
    EXPECT_THROW(pure_state_from_json(to_json(rho)), config_error);
}

TEST(StateJson, GoldenDocumentLayout)
{
    const LatticeWindow w(0, 1, 1.0);
    PureState psi(w);
    psi(1, 1) = complex(0.0, 1.0);
    EXPECT_EQ(to_json(psi).dump(),
              R"({"data":[[0.0,0.0],[0.0,0.0],[0.0,0.0],[0.0,1.0]],"kind":"pure_state","window":{"a":1.0,"n_max":1,"n_min":0}})");
}
