#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ddbound/simulator.hpp"

using namespace ddbound;

namespace {

Matrix random_unitary(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) a(r, c) = Complex(g(rng), g(rng));
    Eigen::HouseholderQR<Matrix> qr(a);
    return qr.householderQ() * Matrix::Identity(n, n);
}

Matrix density(int n, std::uint64_t seed) {
    const Matrix u = random_unitary(n, seed);
    std::mt19937_64 rng(seed + 1);
    std::uniform_real_distribution<double> p(0.0, 1.0);
    Eigen::VectorXd w(n);
    for (int k = 0; k < n; ++k) w(k) = p(rng);
    w /= w.sum();
    return u * w.cast<Complex>().asDiagonal() * u.adjoint();
}

// Single-qubit model with scalar couplings b_mu.
HamiltonianModel scalar_model(double b0, double bx, double by, double bz) {
    std::vector<Matrix> c;
    for (double b : {b0, bx, by, bz}) c.push_back(Matrix::Constant(1, 1, b));
    return assemble_model(1, std::move(c));
}

} // namespace

TEST(Pauli, ProductTable) {
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            const auto p = pauli_product_1(a, b);
            EXPECT_TRUE(pauli(a) * pauli(b) == p.phase * pauli(static_cast<int>(p.label)));
        }
    for (std::size_t a = 0; a < 16; ++a)
        for (std::size_t b = 0; b < 16; ++b) {
            const auto p = pauli_product(a, b, 2);
            const Matrix lhs = pauli_string_matrix(a, 2) * pauli_string_matrix(b, 2);
            EXPECT_LE((lhs - p.phase * pauli_string_matrix(p.label, 2)).norm(), 1e-15);
        }
    EXPECT_EQ(pauli_string(6, 2), "XY");
}

TEST(RandomBath, NormAndDeterminism) {
    for (int dim : {1, 2, 8, 32}) {
        const Matrix b = random_bath(dim, 0.37, 42);
        EXPECT_LE((b - b.adjoint()).norm(), 0.0);
        EXPECT_NEAR(spectral_norm(b), 0.37, 0.37 * 1e-12);
        EXPECT_TRUE(b == random_bath(dim, 0.37, 42));
        EXPECT_FALSE(b == random_bath(dim, 0.37, 43));
    }
    EXPECT_TRUE(random_bath(4, 0.0, 1).isZero(0.0));
    const Matrix s = random_bath(1, 2.5, 9);
    EXPECT_EQ(std::abs(s(0, 0).real()), 2.5);
    EXPECT_EQ(s(0, 0).imag(), 0.0);
}

TEST(BathSpecTest, Validation) {
    EXPECT_THROW(build_model(BathSpec{1, 3, 0, {1, 1, 1, 1}}), InvalidArgument);
    EXPECT_THROW(build_model(BathSpec{1, 128, 0, {1, 1, 1, 1}}), InvalidArgument);
    EXPECT_NO_THROW(validate_bath(BathSpec{2, 64, 0, std::vector<double>(16, 1.0)}));
    EXPECT_THROW(build_model(BathSpec{1, 2, 0, {1, 1}}), InvalidArgument);
    EXPECT_THROW(build_model(BathSpec{3, 2, 0, std::vector<double>(64, 1.0)}), InvalidArgument);
}

TEST(Model, HermitianAndStructured) {
    const auto m = build_model(BathSpec::qdd(4, 5, 1.0, {0.3, 0.6, 0.9}));
    EXPECT_LE((m.total - m.total.adjoint()).norm(), 1e-14);
    Matrix sum = Matrix::Zero(8, 8);
    for (int a = 0; a < 4; ++a) sum += kron(pauli(a), m.couplings[static_cast<std::size_t>(a)]);
    EXPECT_LE((sum - m.total).norm(), 1e-14);
    EXPECT_NEAR(spectral_norm(m.couplings[2]), 0.6, 1e-12);
}

TEST(Evolve, EmptyScheduleIsPlainExponential) {
    const auto m = build_model(BathSpec::qdd(2, 1, 1.0, {0.5, 0.5, 0.5}));
    const Matrix u = evolve(qdd_schedule(0, 0), m, 0.7);
    Eigen::ComplexEigenSolver<Matrix> es(Complex(0, -0.7) * m.total);
    const Matrix ref = es.eigenvectors() * es.eigenvalues().array().exp().matrix().asDiagonal() *
                       es.eigenvectors().inverse();
    EXPECT_LE((u - ref).norm(), 1e-12);
}

TEST(Evolve, PulsesMatchExplicitProduct) {
    const auto m = build_model(BathSpec::qdd(2, 3, 1.0, {0.4, 0.2, 0.8}));
    const double t = 0.9;
    const auto s = qdd_schedule(1, 1);
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.total);
    auto step = [&](double tau) {
        Vector ph(es.eigenvalues().size());
        for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -es.eigenvalues()(k) * t * tau);
        return Matrix(es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint());
    };
    Matrix ref = Matrix::Identity(4, 4);
    double now = 0.0;
    for (const auto& e : s.events) {
        ref = step(e.time - now) * ref;
        now = e.time;
        ref = kron(pauli(e.axis == Axis::x ? 1 : 3), Matrix::Identity(2, 2)) * ref;
    }
    ref = step(1.0 - now) * ref;
    EXPECT_LE((evolve(s, m, t) - ref).norm(), 1e-13);
}

TEST(Evolve, UnitaryForEveryConfiguration) {
    for (auto orders : std::vector<std::vector<int>>{{2, 2}, {3, 3}, {1, 4}}) {
        for (int dim : {2, 8, 32}) {
            const auto m = build_model(BathSpec::qdd(dim, 17, 1.0, {1, 2, 3}));
            const Matrix u = evolve(qdd_schedule(orders[0], orders[1]), m, 1.0);
            EXPECT_LE(unitarity_residual(u), 1e-12);
        }
    }
    const auto m2 = build_model(BathSpec::nudd(2, 8, 3, 1.0, 0.5));
    EXPECT_LE(unitarity_residual(evolve(nudd_schedule({1, 1, 1, 1}, 2), m2, 1.0)), 1e-12);
}

TEST(Evolve, PureBathLeavesSystemAlone) {
    const auto m = build_model(BathSpec::qdd(4, 2, 1.0, {0, 0, 0}));
    const Matrix u = evolve(qdd_schedule(2, 2), m, 0.8);
    const auto ops = extract_channel_ops(u, 1);
    for (int a = 1; a < 4; ++a) EXPECT_LE(spectral_norm(ops[static_cast<std::size_t>(a)]), 1e-14);
}

TEST(Evolve, Validation) {
    const auto m = build_model(BathSpec::qdd(2, 2, 1.0, {1, 1, 1}));
    EXPECT_THROW(evolve(qdd_schedule(1, 1), m, 0.0), InvalidArgument);
    EXPECT_THROW(evolve(nudd_schedule({1, 1, 1, 1}, 2), m, 1.0), InvalidArgument);
    auto bad = qdd_schedule(1, 1);
    std::swap(bad.events.front(), bad.events.back());
    EXPECT_THROW(evolve(bad, m, 1.0), InvalidArgument);
}

TEST(ChannelOps, IdentityAndReconstruction) {
    const auto ops = extract_channel_ops(Matrix::Identity(8, 8), 1);
    EXPECT_TRUE(ops[0].isIdentity(0.0));
    for (int a = 1; a < 4; ++a) EXPECT_TRUE(ops[static_cast<std::size_t>(a)].isZero(0.0));
    for (int m : {1, 2}) {
        const Matrix u = random_unitary(4 << m, 77 + m);
        const auto a = extract_channel_ops(u, m);
        EXPECT_LE((reconstruct(a, m) - u).norm(), 1e-12);
        const auto res = channel_residuals(a, m);
        EXPECT_LE(res.completeness, 1e-12);
        EXPECT_LE(res.cross, 1e-12);
        EXPECT_LE(spectral_norm(a[0]), 1.0 + 1e-10);
    }
}

TEST(ChannelOps, CrossRelationsExplicitForm) {
    const Matrix u = random_unitary(16, 5);
    const auto a = extract_channel_ops(u, 1);
    const Complex i(0, 1);
    const Matrix rx = a[1].adjoint() * a[0] + a[0].adjoint() * a[1] + i * a[2].adjoint() * a[3] - i * a[3].adjoint() * a[2];
    const Matrix ry = a[2].adjoint() * a[0] + a[0].adjoint() * a[2] + i * a[3].adjoint() * a[1] - i * a[1].adjoint() * a[3];
    const Matrix rz = a[3].adjoint() * a[0] + a[0].adjoint() * a[3] + i * a[1].adjoint() * a[2] - i * a[2].adjoint() * a[1];
    EXPECT_LE(spectral_norm(rx), 1e-12);
    EXPECT_LE(spectral_norm(ry), 1e-12);
    EXPECT_LE(spectral_norm(rz), 1e-12);
    Matrix sum = Matrix::Zero(8, 8);
    for (const auto& m : a) sum += m.adjoint() * m;
    EXPECT_LE(spectral_norm(sum - Matrix::Identity(8, 8)), 1e-12);
}

TEST(TraceDistance, Basics) {
    Matrix zero = Matrix::Zero(2, 2), one = Matrix::Zero(2, 2);
    zero(0, 0) = 1.0;
    one(1, 1) = 1.0;
    EXPECT_NEAR(trace_distance(zero, one), 1.0, 1e-15);
    const Matrix rho = density(4, 3);
    EXPECT_NEAR(trace_distance(rho, rho), 0.0, 1e-15);
    Matrix bad = rho;
    bad(0, 0) += 0.1;
    EXPECT_THROW(trace_distance(bad, rho), InvalidArgument);
    Matrix neg = Matrix::Zero(2, 2);
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    EXPECT_THROW(trace_distance(neg, zero), InvalidArgument);
    Matrix nonherm = zero;
    nonherm(0, 1) = 0.1;
    EXPECT_THROW(trace_distance(nonherm, zero), InvalidArgument);
}

TEST(TraceDistance, PureStatesMatchOverlapFormula) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const Vector a = random_state(4, s), b = random_state(4, s + 100);
        const double want = std::sqrt(1.0 - std::norm(a.dot(b)));
        EXPECT_NEAR(trace_distance(a * a.adjoint(), b * b.adjoint()), want, 1e-12);
    }
}

TEST(ClosedForm, ScalarDephasingWithoutPulses) {
    for (double bz : {0.1, 0.7, 1.3}) {
        const auto m = scalar_model(0.4, 0.0, 0.0, bz);
        for (double t : {0.05, 0.5, 2.0}) {
            const Matrix u = evolve(qdd_schedule(0, 0), m, t);
            Vector plus = Vector::Constant(2, 1.0 / std::sqrt(2.0));
            const Matrix rho = u * plus * plus.adjoint() * u.adjoint();
            EXPECT_NEAR(trace_distance(rho, plus * plus.adjoint()), std::abs(std::sin(bz * t)), 1e-12);
        }
    }
}

TEST(ClosedForm, OuterPulsesRefocusCommutingDephasing) {
    for (int n2 : {1, 2, 5})
        for (int n1 : {0, 1, 3}) {
            ExperimentConfig cfg;
            cfg.orders = {n1, n2};
            cfg.bath_dim = 1;
            cfg.epsilon = 0.9;
            cfg.eta = {0.0, 0.0, 1.7};
            cfg.seed = 11;
            const auto r = run_experiment(cfg);
            EXPECT_LE(r.distance_actual, 1e-12) << n1 << "," << n2;
        }
}

TEST(CorrelationInequality, RandomOperators) {
    std::mt19937_64 rng(13);
    std::normal_distribution<double> g;
    for (int k = 0; k < 50; ++k) {
        const int n = 2 + k % 7;
        Matrix q(n, n), qp(n, n);
        for (int r = 0; r < n; ++r)
            for (int c = 0; c < n; ++c) {
                q(r, c) = Complex(g(rng), g(rng));
                qp(r, c) = Complex(g(rng), g(rng));
            }
        const Matrix rho = density(n, 1000 + k);
        EXPECT_LE(std::abs((q * rho * qp).trace()), spectral_norm(q) * spectral_norm(qp) * (1 + 1e-12));
    }
}

TEST(Experiment, NoErrorCouplingsGiveZeroDistance) {
    ExperimentConfig cfg;
    cfg.eta = {0, 0, 0};
    cfg.bath_dim = 4;
    const auto r = run_experiment(cfg);
    EXPECT_LE(r.distance_actual, 1e-13);
    EXPECT_EQ(r.distance_bound, 0.0);
    EXPECT_GE(r.margin, -1e-13);
}

TEST(Experiment, QddBoundDominance) {
    for (std::uint64_t s = 0; s < 20; ++s) {
        ExperimentConfig cfg;
        cfg.orders = {2, 2};
        cfg.bath_dim = 8;
        cfg.epsilon = 0.1;
        cfg.eta = EtaVector::isotropic(1.0);
        cfg.seed = derive_seed(99, s);
        const auto r = run_experiment(cfg);
        EXPECT_GE(r.margin, -1e-12);
        EXPECT_LE(r.distance_actual, r.distance_bound);
        for (int a = 0; a < 3; ++a)
            EXPECT_LE(r.channel_norms[static_cast<std::size_t>(a + 1)], r.channel_bounds[static_cast<std::size_t>(a)]);
        EXPECT_LE(r.unitarity_residual, 1e-12);
        EXPECT_LE(r.channel_residuals.completeness, 1e-10);
        EXPECT_LE(r.channel_residuals.cross, 1e-10);
        EXPECT_LE(r.system_distance, r.distance_actual + 1e-14);
    }
}

TEST(Experiment, NuddBoundDominance) {
    for (std::uint64_t s = 0; s < 10; ++s) {
        ExperimentConfig cfg;
        cfg.kind = SequenceKind::nudd;
        cfg.orders = {1, 1, 1, 1};
        cfg.qubits = 2;
        cfg.bath_dim = 4;
        cfg.epsilon = 0.05;
        cfg.nudd_eta = 0.5;
        cfg.seed = s;
        const auto r = run_experiment(cfg);
        EXPECT_EQ(r.d_min, 1);
        EXPECT_GE(r.margin, -1e-12);
        EXPECT_LE(r.error_norm_sum, r.error_sum_bound);
        EXPECT_LE(r.channel_residuals.cross, 1e-10);
    }
}

TEST(Experiment, DeterministicInSeed) {
    ExperimentConfig cfg;
    cfg.bath_dim = 8;
    cfg.seed = 1234;
    const auto a = run_experiment(cfg);
    const auto b = run_experiment(cfg);
    EXPECT_EQ(a.distance_actual, b.distance_actual);
    EXPECT_EQ(a.channel_norms, b.channel_norms);
    cfg.seed = 1235;
    EXPECT_NE(run_experiment(cfg).distance_actual, a.distance_actual);
}

TEST(Experiment, PureBathStateAlsoBounded) {
    ExperimentConfig cfg;
    cfg.bath_state = BathState::random_pure;
    cfg.system_state = SystemState::plus;
    cfg.bath_dim = 8;
    cfg.orders = {1, 1};
    cfg.epsilon = 0.3;
    const auto r = run_experiment(cfg);
    EXPECT_GE(r.margin, -1e-12);
}

TEST(Scaling, QddTwoTwoAllChannels) {
    ExperimentConfig cfg;
    cfg.orders = {2, 2};
    cfg.bath_dim = 4;
    cfg.seed = 21;
    const auto fit = fit_scaling(cfg, log_grid(1e-3, 1e-2, 6));
    for (int a = 1; a <= 3; ++a) {
        EXPECT_FALSE(fit.underflow[static_cast<std::size_t>(a)]);
        EXPECT_GE(fit.slopes[static_cast<std::size_t>(a)], 2.7);
    }
}

TEST(Scaling, SimulatorSlopeNotBelowCertifiedOrder) {
    // QDD(1, 4): z is certified through length 2, x and y saturate at length 2.
    ExperimentConfig cfg;
    cfg.orders = {1, 4};
    cfg.bath_dim = 4;
    cfg.seed = 8;
    const auto fit = fit_scaling(cfg, log_grid(1e-3, 1e-2, 6));
    EXPECT_GE(fit.slopes[3], 2.7);
    EXPECT_GE(fit.slopes[1], 1.7);
    EXPECT_LE(fit.slopes[1], 2.3);
}

TEST(Scaling, UnderflowFlagged) {
    ExperimentConfig cfg;
    cfg.orders = {2, 2};
    cfg.eta = {0, 0, 0};
    const auto fit = fit_scaling(cfg, {1e-3, 1e-2});
    EXPECT_TRUE(fit.underflow[1]);
    EXPECT_TRUE(std::isnan(fit.slopes[1]));
    EXPECT_FALSE(fit.underflow[0]);
}

TEST(ParallelFor, OrderIndependentAndPropagatesErrors) {
    std::vector<int> out(100, -1);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i * i); }, 4);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
    EXPECT_THROW(parallel_for(10, [](std::size_t i) {
        if (i == 3) throw NumericalFailure("boom");
    }, 3), NumericalFailure);
}
