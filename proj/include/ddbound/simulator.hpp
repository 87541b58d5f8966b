// Exact evolution of m qubits coupled to a finite bath under a pulse schedule
//
// Index layout of the joint space is (system, bath) with the system index
// most significant and qubit 0 its most significant bit. The bath
// Hamiltonian B_0 is carried on label 0; J_0 = 1 fixes the time unit, so
// T = eps.

#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "ddbound/errors.hpp"
#include "ddbound/nudd_bounds.hpp"
#include "ddbound/pauli.hpp"
#include "ddbound/qdd_bounds.hpp"
#include "ddbound/sequences.hpp"

namespace ddbound {

inline constexpr int max_sim_qubits = 2;
inline constexpr int max_bath_dim = 64;
inline constexpr int max_total_dim = 256;

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent stream for sub-task `index` of a run seeded with `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

inline double spectral_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(a);
    return svd.singularValues()(0);
}

// Largest |eigenvalue| of a Hermitian matrix.
inline double hermitian_norm(const Matrix& h) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

inline bool is_power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

// GUE draw rescaled to spectral norm J.
inline Matrix random_bath(int dim, double j, std::uint64_t seed) {
    require(dim >= 1, "bath dimension must be >= 1");
    require(std::isfinite(j) && j >= 0.0, "coupling norm must be finite and >= 0");
    if (j == 0.0) return Matrix::Zero(dim, dim);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Matrix a(dim, dim);
    for (Eigen::Index c = 0; c < dim; ++c)
        for (Eigen::Index r = 0; r < dim; ++r) a(r, c) = Complex(gauss(rng), gauss(rng));
    Matrix h = (a + a.adjoint()) * 0.5;
    const double n = hermitian_norm(h);
    if (n == 0.0) throw NumericalFailure("random_bath: degenerate draw");
    return h * (j / n);
}

struct BathSpec {
    int qubits = 1;
    int dim = 2;
    std::uint64_t seed = 0;
    std::vector<double> norms; // J per Pauli label, size 4^m

    static BathSpec qdd(int dim, std::uint64_t seed, double j0, const EtaVector& eta) {
        return {1, dim, seed, {j0, j0 * eta.x, j0 * eta.y, j0 * eta.z}};
    }
    // Collapsed profile: every non-identity label has norm J1.
    static BathSpec nudd(int m, int dim, std::uint64_t seed, double j0, double j1) {
        BathSpec b{m, dim, seed, std::vector<double>(pauli_label_count(m), j1)};
        b.norms[0] = j0;
        return b;
    }
};

inline void validate_bath(const BathSpec& b) {
    require(b.qubits >= 1 && b.qubits <= max_sim_qubits, "simulator supports 1 or 2 system qubits");
    require(is_power_of_two(b.dim) && b.dim <= max_bath_dim, "bath dimension must be a power of 2 in 1..64");
    require((b.dim << b.qubits) <= max_total_dim, "total dimension must be <= 256");
    require(b.norms.size() == pauli_label_count(b.qubits),
            "expected " + std::to_string(pauli_label_count(b.qubits)) + " coupling norms");
}

struct HamiltonianModel {
    int qubits = 1;
    int bath_dim = 1;
    std::vector<Matrix> couplings; // B_mu per Pauli label
    Matrix total;                  // sum_mu sigma_mu (x) B_mu

    int system_dim() const { return 1 << qubits; }
    int dim() const { return system_dim() * bath_dim; }
};

inline HamiltonianModel assemble_model(int qubits, std::vector<Matrix> couplings) {
    require(couplings.size() == pauli_label_count(qubits), "one coupling per Pauli label required");
    HamiltonianModel m;
    m.qubits = qubits;
    m.bath_dim = static_cast<int>(couplings.front().rows());
    m.total = Matrix::Zero(m.dim(), m.dim());
    for (std::size_t mu = 0; mu < couplings.size(); ++mu) {
        require(couplings[mu].rows() == m.bath_dim && couplings[mu].cols() == m.bath_dim,
                "coupling matrices must share the bath dimension");
        m.total += kron(pauli_string_matrix(mu, qubits), couplings[mu]);
    }
    m.couplings = std::move(couplings);
    return m;
}

inline HamiltonianModel build_model(const BathSpec& bath) {
    validate_bath(bath);
    std::vector<Matrix> b;
    for (std::size_t mu = 0; mu < bath.norms.size(); ++mu)
        b.push_back(random_bath(bath.dim, bath.norms[mu], derive_seed(bath.seed, mu)));
    return assemble_model(bath.qubits, std::move(b));
}

namespace detail {

// Left-multiplies u by a Pauli pulse (global phase dropped) on `qubit`.
inline void apply_pulse(Matrix& u, Axis axis, int qubit, int qubits, int bath_dim) {
    const int bit = qubits - 1 - qubit;
    const Eigen::Index sys = Eigen::Index{1} << qubits;
    for (Eigen::Index s = 0; s < sys; ++s) {
        const bool set = (s >> bit) & 1;
        if (axis == Axis::z) {
            if (set) u.middleRows(s * bath_dim, bath_dim) *= -1.0;
        } else if (!set) {
            const Eigen::Index t = s | (Eigen::Index{1} << bit);
            u.middleRows(s * bath_dim, bath_dim).swap(u.middleRows(t * bath_dim, bath_dim));
        }
    }
}

} // namespace detail

// U(T) = P_k e^{-i H tau_k} ... P_1 e^{-i H tau_1}, one eigendecomposition of H.
inline Matrix evolve(const PulseSchedule& schedule, const HamiltonianModel& model, double duration) {
    require(std::isfinite(duration) && duration > 0.0, "evolution time T must be > 0");
    require(schedule.qubit_count <= model.qubits, "schedule addresses more qubits than the model has");
    for (std::size_t k = 1; k < schedule.events.size(); ++k)
        require(schedule.events[k - 1].time <= schedule.events[k].time, "schedule times must be sorted");

    Eigen::SelfAdjointEigenSolver<Matrix> es(model.total);
    if (es.info() != Eigen::Success) throw NumericalFailure("eigendecomposition of the Hamiltonian failed");
    const Matrix& v = es.eigenvectors();
    const Eigen::VectorXd& e = es.eigenvalues();

    Matrix u = Matrix::Identity(model.dim(), model.dim());
    auto propagate = [&](double tau) {
        if (tau <= 0.0) return;
        Vector phases(e.size());
        for (Eigen::Index k = 0; k < e.size(); ++k) phases(k) = std::polar(1.0, -e(k) * duration * tau);
        u = v * (phases.asDiagonal() * (v.adjoint() * u));
    };
    double now = 0.0;
    for (const auto& ev : schedule.events) {
        propagate(ev.time - now);
        now = std::max(now, ev.time);
        detail::apply_pulse(u, ev.axis, ev.qubit, model.qubits, model.bath_dim);
    }
    propagate(1.0 - now);
    return u;
}

// Largest |eigenvalue| of U^dagger U - 1.
inline double unitarity_residual(const Matrix& u) {
    return hermitian_norm(u.adjoint() * u - Matrix::Identity(u.cols(), u.cols()));
}

// A_mu = 2^-m tr_S[sigma_mu U], one per Pauli label.
inline std::vector<Matrix> extract_channel_ops(const Matrix& u, int qubits) {
    require(qubits >= 1, "qubit count must be >= 1");
    const Eigen::Index sys = Eigen::Index{1} << qubits;
    require(u.rows() == u.cols() && u.rows() % sys == 0, "U dimension is not a multiple of 2^m");
    const Eigen::Index db = u.rows() / sys;
    std::vector<Matrix> out;
    for (std::size_t mu = 0; mu < pauli_label_count(qubits); ++mu) {
        const Matrix s = pauli_string_matrix(mu, qubits);
        Matrix a = Matrix::Zero(db, db);
        for (Eigen::Index c = 0; c < sys; ++c)
            for (Eigen::Index r = 0; r < sys; ++r)
                if (s(r, c) != Complex(0.0)) a += std::conj(s(r, c)) * u.block(r * db, c * db, db, db);
        out.push_back(a / static_cast<double>(sys));
    }
    return out;
}

inline Matrix reconstruct(const std::vector<Matrix>& ops, int qubits) {
    const Eigen::Index db = ops.front().rows();
    const Eigen::Index sys = Eigen::Index{1} << qubits;
    Matrix u = Matrix::Zero(sys * db, sys * db);
    for (std::size_t mu = 0; mu < ops.size(); ++mu) u += kron(pauli_string_matrix(mu, qubits), ops[mu]);
    return u;
}

struct UnitarityResiduals {
    double completeness = 0.0; // || sum A^dagger A - 1 ||
    double cross = 0.0;        // max over non-identity nu of the sigma_nu coefficient of U^dagger U
};

// Expands U^dagger U = sum_nu sigma_nu (x) R_nu and checks R_0 = 1, R_nu = 0.
inline UnitarityResiduals channel_residuals(const std::vector<Matrix>& ops, int qubits) {
    const std::size_t n = ops.size();
    const Eigen::Index db = ops.front().rows();
    std::vector<Matrix> r(n, Matrix::Zero(db, db));
    for (std::size_t a = 0; a < n; ++a) {
        const Matrix ad = ops[a].adjoint();
        for (std::size_t b = 0; b < n; ++b) {
            const auto p = pauli_product(a, b, qubits);
            r[p.label] += p.phase * (ad * ops[b]);
        }
    }
    UnitarityResiduals out;
    out.completeness = spectral_norm(r[0] - Matrix::Identity(db, db));
    for (std::size_t nu = 1; nu < n; ++nu) out.cross = std::max(out.cross, spectral_norm(r[nu]));
    return out;
}

inline void require_density(const Matrix& rho, double tol, const char* name) {
    const std::string who(name);
    require(rho.rows() == rho.cols() && rho.rows() > 0, who + " must be a non-empty square matrix");
    require((rho - rho.adjoint()).cwiseAbs().maxCoeff() <= tol, who + " is not Hermitian");
    require(std::abs(rho.trace() - Complex(1.0)) <= tol, who + " does not have unit trace");
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
    require(es.eigenvalues().minCoeff() >= -tol, who + " is not positive semidefinite");
}

// D = 1/2 sum |eig(rho1 - rho2)|
inline double trace_distance(const Matrix& rho1, const Matrix& rho2, double tol = 1e-10) {
    require_density(rho1, tol, "rho1");
    require_density(rho2, tol, "rho2");
    require(rho1.rows() == rho2.rows(), "density matrices differ in dimension");
    const Matrix diff = rho1 - rho2;
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (diff + diff.adjoint()), Eigen::EigenvaluesOnly);
    return std::min(1.0, 0.5 * es.eigenvalues().cwiseAbs().sum());
}

inline Matrix partial_trace_bath(const Matrix& rho, int system_dim) {
    const Eigen::Index db = rho.rows() / system_dim;
    Matrix out(system_dim, system_dim);
    for (Eigen::Index r = 0; r < system_dim; ++r)
        for (Eigen::Index c = 0; c < system_dim; ++c) out(r, c) = rho.block(r * db, c * db, db, db).trace();
    return out;
}

// Haar-random pure state of dimension n.
inline Vector random_state(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss;
    Vector v(n);
    for (Eigen::Index k = 0; k < n; ++k) v(k) = Complex(gauss(rng), gauss(rng));
    return v.normalized();
}

enum class SequenceKind { qdd, nudd };
enum class SystemState { random, plus, zero };
enum class BathState { maximally_mixed, random_pure };

struct ExperimentConfig {
    SequenceKind kind = SequenceKind::qdd;
    std::vector<int> orders{2, 2}; // level 1 first; QDD is {N1, N2}
    int qubits = 1;
    double epsilon = 0.1;
    EtaVector eta{1.0, 1.0, 1.0}; // QDD
    double nudd_eta = 1.0;        // NUDD: J1 / J0
    int bath_dim = 2;
    std::uint64_t seed = 0;
    SystemState system_state = SystemState::random;
    BathState bath_state = BathState::maximally_mixed;
    TieRule tie = TieRule::inner_first;
    OrderMode mode = OrderMode::analytic;

    BathSpec bath() const {
        return kind == SequenceKind::qdd ? BathSpec::qdd(bath_dim, derive_seed(seed, 0), 1.0, eta)
                                         : BathSpec::nudd(qubits, bath_dim, derive_seed(seed, 0), 1.0, nudd_eta);
    }
};

struct SimResult {
    std::vector<double> channel_norms; // ||A_mu|| per Pauli label
    std::array<double, 3> channel_bounds{};     // QDD: L_x, L_y, L_z
    std::array<double, 3> channel_margins{};    // QDD: L - ||A||
    double error_norm_sum = 0.0;                // sum of non-identity ||A_mu||
    double error_sum_bound = 0.0;               // NUDD: Delta_{d_min}
    double distance_actual = 0.0;               // joint system-bath state
    double system_distance = 0.0;               // reduced qubit state
    double distance_bound = 0.0;
    double margin = 0.0;                        // min over every checked bound of bound - actual
    double unitarity_residual = 0.0;
    UnitarityResiduals channel_residuals;
    int d_min = 0;
};

inline Matrix system_initial_state(const ExperimentConfig& cfg) {
    const Eigen::Index n = Eigen::Index{1} << cfg.qubits;
    Vector psi = Vector::Zero(n);
    switch (cfg.system_state) {
    case SystemState::zero: psi(0) = 1.0; break;
    case SystemState::plus: psi.setConstant(1.0 / std::sqrt(static_cast<double>(n))); break;
    default: psi = random_state(n, derive_seed(cfg.seed, 1)); break;
    }
    return psi * psi.adjoint();
}

inline Matrix bath_initial_state(const ExperimentConfig& cfg) {
    if (cfg.bath_state == BathState::maximally_mixed)
        return Matrix::Identity(cfg.bath_dim, cfg.bath_dim) / static_cast<double>(cfg.bath_dim);
    const Vector phi = random_state(cfg.bath_dim, derive_seed(cfg.seed, 2));
    return phi * phi.adjoint();
}

inline PulseSchedule experiment_schedule(const ExperimentConfig& cfg) {
    if (cfg.kind == SequenceKind::qdd) {
        require(cfg.orders.size() == 2 && cfg.qubits == 1, "QDD experiments take two orders on one qubit");
        return qdd_schedule(cfg.orders[0], cfg.orders[1], cfg.tie);
    }
    return nudd_schedule(cfg.orders, cfg.qubits, cfg.tie);
}

inline SimResult run_experiment(const ExperimentConfig& cfg) {
    require(std::isfinite(cfg.epsilon) && cfg.epsilon > 0.0, "epsilon must be > 0");
    const auto schedule = experiment_schedule(cfg);
    const auto model = build_model(cfg.bath());
    const Matrix u = evolve(schedule, model, cfg.epsilon);

    SimResult res;
    res.unitarity_residual = unitarity_residual(u);
    const auto ops = extract_channel_ops(u, cfg.qubits);
    res.channel_residuals = channel_residuals(ops, cfg.qubits);
    for (std::size_t mu = 0; mu < ops.size(); ++mu) {
        res.channel_norms.push_back(spectral_norm(ops[mu]));
        if (mu > 0) res.error_norm_sum += res.channel_norms.back();
    }

    const Matrix rho0 = kron(system_initial_state(cfg), bath_initial_state(cfg));
    const Matrix rho = u * rho0 * u.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> b0(model.couplings[0]);
    Vector ph(b0.eigenvalues().size());
    for (Eigen::Index k = 0; k < ph.size(); ++k) ph(k) = std::polar(1.0, -b0.eigenvalues()(k) * cfg.epsilon);
    const Matrix ub = b0.eigenvectors() * ph.asDiagonal() * b0.eigenvectors().adjoint();
    const Matrix u_ref = kron(Matrix::Identity(model.system_dim(), model.system_dim()), ub);
    const Matrix rho_ref = u_ref * rho0 * u_ref.adjoint();
    res.distance_actual = trace_distance(rho, rho_ref);
    res.system_distance = trace_distance(partial_trace_bath(rho, model.system_dim()),
                                         partial_trace_bath(rho_ref, model.system_dim()));

    if (cfg.kind == SequenceKind::qdd) {
        const auto rep = distance_bound(cfg.orders[0], cfg.orders[1], cfg.epsilon, cfg.eta, cfg.mode);
        res.distance_bound = rep.distance_bound;
        res.channel_bounds = {rep.channel_bounds.x, rep.channel_bounds.y, rep.channel_bounds.z};
        res.d_min = rep.orders.min();
        res.margin = res.distance_bound - res.distance_actual;
        for (int a = 0; a < 3; ++a) {
            res.channel_margins[static_cast<std::size_t>(a)] =
                res.channel_bounds[static_cast<std::size_t>(a)] - res.channel_norms[static_cast<std::size_t>(a + 1)];
            res.margin = std::min(res.margin, res.channel_margins[static_cast<std::size_t>(a)]);
        }
    } else {
        res.d_min = nudd_min_order(cfg.orders);
        const auto rep = nudd_distance_bound(res.d_min, cfg.epsilon, cfg.nudd_eta, cfg.qubits);
        res.distance_bound = rep.distance_bound;
        res.error_sum_bound = rep.delta;
        res.margin = std::min(res.distance_bound - res.distance_actual, res.error_sum_bound - res.error_norm_sum);
    }
    return res;
}

// Worker count: DDBOUND_THREADS if set, else hardware concurrency.
inline unsigned worker_count() {
    if (const char* env = std::getenv("DDBOUND_THREADS")) {
        const long n = std::strtol(env, nullptr, 10);
        if (n >= 1) return static_cast<unsigned>(n);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Runs fn(i) for i in [0, n); results land by index, so output order never
// depends on scheduling. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, Fn&& fn, unsigned workers = worker_count()) {
    workers = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, workers), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    next = n;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

inline constexpr double underflow_floor = 1e-14;

struct ScalingFit {
    std::vector<double> epsilons;
    std::vector<std::vector<double>> norms; // [label][epsilon]
    std::vector<double> slopes;             // per label; NaN when unresolved
    std::vector<bool> underflow;            // fewer than two points above the floor
};

inline double least_squares_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sx += x[k];
        sy += y[k];
        sxx += x[k] * x[k];
        sxy += x[k] * y[k];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Log-log slope of ||A_mu(eps)|| for a fixed bath; eps grid >= 2 points.
inline ScalingFit fit_scaling(const ExperimentConfig& base, const std::vector<double>& epsilons) {
    require(epsilons.size() >= 2, "scaling fit needs at least two epsilon values");
    const auto schedule = experiment_schedule(base);
    const auto model = build_model(base.bath());
    ScalingFit fit;
    fit.epsilons = epsilons;
    fit.norms.assign(pauli_label_count(base.qubits), {});
    for (double eps : epsilons) {
        require(eps > 0.0, "epsilon values must be > 0");
        const auto ops = extract_channel_ops(evolve(schedule, model, eps), base.qubits);
        for (std::size_t mu = 0; mu < ops.size(); ++mu) fit.norms[mu].push_back(spectral_norm(ops[mu]));
    }
    for (const auto& series : fit.norms) {
        std::vector<double> lx, ly;
        for (std::size_t k = 0; k < series.size(); ++k) {
            if (series[k] < underflow_floor) continue;
            lx.push_back(std::log(epsilons[k]));
            ly.push_back(std::log(series[k]));
        }
        const bool under = lx.size() < 2;
        fit.underflow.push_back(under);
        fit.slopes.push_back(under ? NAN : least_squares_slope(lx, ly));
    }
    return fit;
}

} // namespace ddbound
