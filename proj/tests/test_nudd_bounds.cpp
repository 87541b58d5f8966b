#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ddbound/nudd_bounds.hpp"
#include "ddbound/qdd_bounds.hpp"
#include "oracles.hpp"

using namespace ddbound;

namespace {
double rel_err(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }
} // namespace

TEST(NuddGamma, ExactIntegers) {
    EXPECT_EQ(nudd_gamma(1), 3u);
    EXPECT_EQ(nudd_gamma(10), 1048575u);
    EXPECT_EQ(nudd_gamma(31), (std::uint64_t{1} << 62) - 1);
    EXPECT_THROW(nudd_gamma(0), InvalidArgument);
    EXPECT_THROW(nudd_gamma(32), InvalidArgument);
}

TEST(NuddCouplingsTest, Validation) {
    EXPECT_THROW(make_couplings(1, 0.0, 1.0), InvalidArgument);
    EXPECT_THROW(make_couplings(1, 1.0, -1.0), InvalidArgument);
    const auto c = make_couplings(2, 2.0, 0.5);
    EXPECT_EQ(c.gamma(), 15u);
    EXPECT_EQ(c.eta(), 0.25);
    EXPECT_EQ(c.epsilon(3.0), 6.0);
}

TEST(SErrorSum, ZeroCases) {
    EXPECT_EQ(s_error_sum(0.0, 1.0, 0.3, 3), 0.0);
    EXPECT_EQ(s_error_sum(2.0, 1.0, 0.0, 1), 0.0);
}

TEST(SErrorSum, SumWithIdentityIsTopEigenmode) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.01, 2.0);
    for (int k = 0; k < 100; ++k) {
        const int m = 1 + k % 4;
        const double j0 = u(rng), j1 = u(rng) / nudd_gamma(m), t = u(rng);
        const double want = std::exp((j0 + nudd_gamma(m) * j1) * t);
        EXPECT_LE(rel_err(s_identity(t, j0, j1, m) + s_error_sum(t, j0, j1, m), want), 1e-12);
    }
}

TEST(SErrorSum, MatchesRk4) {
    for (int m = 1; m <= 4; ++m) {
        const double g = static_cast<double>(nudd_gamma(m));
        const double j0 = 0.7, j1 = 0.9 / g, t = 5.0 / (j0 + g * j1);
        const auto s = oracle::rk4_nudd(j0, j1, g, t, 20000);
        EXPECT_LE(rel_err(s_single_error(t, j0, j1, m), s[1]), 1e-9);
        EXPECT_LE(rel_err(s_error_sum(t, j0, j1, m), g * s[1]), 1e-9);
        EXPECT_LE(rel_err(s_identity(t, j0, j1, m), s[0]), 1e-9);
    }
}

TEST(TaylorCoeff, Anchors) {
    EXPECT_EQ(nudd_taylor_coeff(0, 1.3, 0.2, 2), 0.0);
    EXPECT_NEAR(nudd_taylor_coeff(1, 1.3, 0.2, 2), 15 * 0.2, 1e-14);
    EXPECT_NEAR(nudd_g(1, 0.01, 10), nudd_gamma(10) * 0.01, 1e-9);
}

TEST(TaylorCoeff, ContourOracle) {
    for (int m : {1, 2, 3}) {
        const double g = static_cast<double>(nudd_gamma(m));
        const double j0 = 0.8, j1 = 0.6 / g;
        auto sk = [&](std::complex<double> t) {
            return g / (g + 1.0) * std::exp(j0 * t) * (std::exp(g * j1 * t) - std::exp(-j1 * t));
        };
        for (int k = 0; k <= 6; ++k) {
            const double want = oracle::taylor_coefficient(sk, k, 1.0);
            const double got = nudd_taylor_coeff(k, j0, j1, m);
            if (k == 0) EXPECT_NEAR(got, 0.0, 1e-14);
            else EXPECT_LE(rel_err(got, want), 1e-10) << m << " " << k;
        }
    }
}

TEST(TaylorCoeff, NonNegative) {
    for (int m : {1, 3, 10})
        for (double j1 : {0.0, 0.5, 5.0})
            for (int k = 0; k <= 30; ++k) EXPECT_GE(nudd_taylor_coeff(k, 1.0, j1, m), 0.0);
}

TEST(NuddDelta, LeadingOrderAndMonotone) {
    for (int m : {1, 2, 10}) {
        const double eta = 0.5;
        const double eps = 1e-3 * nudd_epsilon_scale(eta, m);
        for (int d : {1, 5, 20}) {
            EXPECT_NEAR(nudd_delta(d, eps, eta, m) / nudd_g_term(d + 1, eps, eta, m), 1.0, 1e-2);
            EXPECT_LE(nudd_delta(d + 1, eps, eta, m), nudd_delta(d, eps, eta, m));
        }
        double prev = 0.0;
        for (double e : log_grid(1e-4, 1.0, 20)) {
            const double v = nudd_delta(3, e * nudd_epsilon_scale(eta, m), eta, m);
            EXPECT_GT(v, prev);
            prev = v;
        }
    }
}

TEST(NuddDelta, FromZeroIsClosedForm) {
    const double eps = 0.4, eta = 0.3;
    EXPECT_LE(rel_err(nudd_delta(0, eps, eta, 2), s_error_sum(eps, 1.0, eta, 2)), 1e-13);
}

TEST(NuddDistanceBoundTest, Properties) {
    EXPECT_EQ(nudd_distance_bound(3, 0.0, 1.0, 2).distance_bound, 0.0);
    for (double eps : {1e-3, 1e-2, 0.1}) {
        const auto r = nudd_distance_bound(2, eps, 0.5, 1);
        EXPECT_GE(r.distance_bound, r.delta);
        EXPECT_EQ(r.distance_bound, r.delta * r.delta + r.delta);
    }
}

TEST(NuddDistanceBoundTest, LooserThanQddAtMatchedOrder) {
    // m = 1, all orders 2: both bounds scale as eps^3; the collapsed NUDD bound is larger.
    for (double eps : log_grid(1e-4, 1e-1, 7)) {
        const auto q = distance_bound(2, 2, eps, {0.2, 0.5, 1.0});
        const auto n = nudd_distance_bound(2, eps, 1.0, 1);
        EXPECT_GT(n.distance_bound, q.distance_bound);
    }
    const double sq = std::log(distance_bound(2, 2, 1e-3, EtaVector::isotropic(1.0)).distance_bound /
                               distance_bound(2, 2, 1e-4, EtaVector::isotropic(1.0)).distance_bound) /
                      std::log(10.0);
    const double sn =
        std::log(nudd_distance_bound(2, 1e-3, 1.0, 1).distance_bound / nudd_distance_bound(2, 1e-4, 1.0, 1).distance_bound) /
        std::log(10.0);
    EXPECT_NEAR(sq, 3.0, 0.05);
    EXPECT_NEAR(sn, 3.0, 0.05);
}

TEST(NuddMinOrder, SmallestRequested) {
    EXPECT_EQ(nudd_min_order({3, 5, 4, 7}), 3);
    EXPECT_EQ(nudd_min_order({1, 1}), 1);
    EXPECT_THROW(nudd_min_order({}), InvalidArgument);
}

TEST(Figure5, GridAndSlopes) {
    const auto sweep = figure5_sweep(5);
    ASSERT_EQ(sweep.epsilons.size(), 4u);
    const auto rows = nudd_sweep(sweep);
    ASSERT_EQ(rows.size(), 4u * 4u * 5u);
    for (const auto& r : rows) EXPECT_TRUE(r.converged);
    for (double eta : sweep.etas)
        for (int d : sweep.d_mins) {
            const double s = nudd_epsilon_scale(eta, 10);
            const double a = nudd_delta(d, 1e-4 * s, eta, 10), b = nudd_delta(d, 1e-3 * s, eta, 10);
            EXPECT_NEAR(std::log10(b / a), d + 1, 0.1) << "eta=" << eta << " d=" << d;
        }
}
