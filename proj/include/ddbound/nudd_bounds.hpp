// Collapsed bounding series and distance bound for m-qubit NUDD
//
// All non-identity couplings are replaced by J1 = max_mu ||B_mu||, which
// closes the bounding ODEs on (S_0, S_1):
//     S_0' = J0 S_0 + gamma J1 S_1
//     S_1' = J1 S_0 + (J0 + (gamma - 1) J1) S_1,      gamma = 4^m - 1,
// with eigenvalues J0 + gamma J1 and J0 - J1.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "ddbound/errors.hpp"
#include "ddbound/series.hpp"

namespace ddbound {

inline constexpr int max_nudd_qubits = 31;

// 4^m - 1 non-identity Pauli labels, exact for m <= 31.
inline std::uint64_t nudd_gamma(int m) {
    require(m >= 1 && m <= max_nudd_qubits, "NUDD qubit count must lie in 1..31");
    return (std::uint64_t{1} << (2 * m)) - 1;
}

struct NuddCouplings {
    int m = 1;
    double j0 = 1.0;
    double j1 = 0.0;

    std::uint64_t gamma() const { return nudd_gamma(m); }
    double eta() const { return j1 / j0; }
    double epsilon(double duration) const { return j0 * duration; }
};

inline NuddCouplings make_couplings(int m, double j0, double j1) {
    nudd_gamma(m);
    require(std::isfinite(j0) && j0 > 0.0, "J0 must be finite and > 0");
    require(std::isfinite(j1) && j1 >= 0.0, "J1 must be finite and >= 0");
    return {m, j0, j1};
}

// S_K(T) = gamma e^{J0 T} (e^{gamma J1 T} - e^{-J1 T}) / (gamma + 1), the bound on
// the sum of all error-channel norms.
inline double s_error_sum(double duration, double j0, double j1, int m) {
    require(duration >= 0.0, "duration must be >= 0");
    const double g = static_cast<double>(nudd_gamma(m));
    return g / (g + 1.0) * std::exp((j0 - j1) * duration) * std::expm1((g + 1.0) * j1 * duration);
}

// S_1 = S_K / gamma, the bound on a single error channel.
inline double s_single_error(double duration, double j0, double j1, int m) {
    return s_error_sum(duration, j0, j1, m) / static_cast<double>(nudd_gamma(m));
}

// S_0(T) = e^{J0 T} (e^{gamma J1 T} + gamma e^{-J1 T}) / (gamma + 1), the identity-channel bound.
inline double s_identity(double duration, double j0, double j1, int m) {
    require(duration >= 0.0, "duration must be >= 0");
    const double g = static_cast<double>(nudd_gamma(m));
    return std::exp(j0 * duration) * (std::exp(g * j1 * duration) + g * std::exp(-j1 * duration)) / (g + 1.0);
}

namespace detail {

// S_K in exponential-mixture form over a dimensionless variable.
inline std::array<ExpTerm, 2> error_sum_terms(double rate0, double rate1, int m) {
    const double g = static_cast<double>(nudd_gamma(m));
    const double w = g / (g + 1.0);
    return {ExpTerm{w, rate0 + g * rate1}, ExpTerm{-w, rate0 - rate1}};
}

} // namespace detail

// p_k = gamma/(gamma+1) [(J0 + gamma J1)^k - (J0 - J1)^k] / k!
inline double nudd_taylor_coeff(int k, double j0, double j1, int m) {
    require(k >= 0, "Taylor index must be >= 0");
    const auto terms = detail::error_sum_terms(j0, j1, m);
    return exp_mixture_coefficient(terms, k, 1.0);
}

// g_l(eta, m) = (1 - 4^-m) [(1 - eta + 4^m eta)^l - (1 - eta)^l] / l!
inline double nudd_g(int l, double eta, int m) {
    require(l >= 0, "order l must be >= 0");
    return exp_mixture_coefficient(detail::error_sum_terms(1.0, eta, m), l, 1.0);
}

// g_l(eta, m) eps^l
inline double nudd_g_term(int l, double eps, double eta, int m) {
    return exp_mixture_coefficient(detail::error_sum_terms(1.0, eta, m), l, eps);
}

// Delta_d = sum_{l > d} g_l(eta, m) eps^l
inline double nudd_delta(int d_min, double eps, double eta, int m, double rel_tol = default_rel_tol) {
    require(d_min >= 0, "d_min must be >= 0");
    require(std::isfinite(eta) && eta >= 0.0, "eta must be finite and >= 0");
    require(std::isfinite(eps) && eps >= 0.0, "epsilon must be finite and >= 0");
    const double g = static_cast<double>(nudd_gamma(m));
    if (eps == 0.0 || eta == 0.0) return 0.0;
    const auto terms = detail::error_sum_terms(1.0, eta, m);
    return exp_mixture_tail(terms, d_min, eps, rel_tol, tail_term_cap(d_min, eps * (1.0 + g * eta)));
}

struct NuddBoundReport {
    int m = 1;
    int d_min = 0;
    double epsilon = 0.0;
    double eta = 0.0;
    double delta = 0.0;
    double distance_bound = 0.0; // Delta^2 + Delta
    double leading_term = 0.0;   // g_{d+1}(eta, m) eps^{d+1}
};

inline NuddBoundReport nudd_distance_bound(int d_min, double eps, double eta, int m,
                                           double rel_tol = default_rel_tol) {
    NuddBoundReport r;
    r.m = m;
    r.d_min = d_min;
    r.epsilon = eps;
    r.eta = eta;
    r.delta = nudd_delta(d_min, eps, eta, m, rel_tol);
    r.distance_bound = r.delta * r.delta + r.delta;
    r.leading_term = nudd_g_term(d_min + 1, eps, eta, m);
    return r;
}

// Decoupling order of a nested sequence: the smallest requested level order.
inline int nudd_min_order(const std::vector<int>& orders) {
    require(!orders.empty(), "orders must not be empty");
    return *std::min_element(orders.begin(), orders.end());
}

struct NuddFigureRow {
    double epsilon = 0.0;
    int m = 1;
    int d_min = 0;
    double eta = 0.0;
    double delta = 0.0;
    double distance_bound = 0.0;
    double leading_term = 0.0;
    bool converged = true;
};

struct NuddSweep {
    int m = 10;
    std::vector<int> d_mins;
    std::vector<double> etas;
    // Per-eta epsilon grids, or a single shared grid.
    std::vector<std::vector<double>> epsilons;
};

inline std::vector<NuddFigureRow> nudd_sweep(const NuddSweep& sweep) {
    std::vector<NuddFigureRow> rows;
    for (std::size_t e = 0; e < sweep.etas.size(); ++e) {
        const auto& grid = sweep.epsilons.size() == 1 ? sweep.epsilons.front() : sweep.epsilons.at(e);
        for (int d : sweep.d_mins) {
            for (double eps : grid) {
                NuddFigureRow row;
                row.epsilon = eps;
                row.m = sweep.m;
                row.d_min = d;
                row.eta = sweep.etas[e];
                try {
                    const auto rep = nudd_distance_bound(d, eps, sweep.etas[e], sweep.m);
                    row.delta = rep.delta;
                    row.distance_bound = rep.distance_bound;
                    row.leading_term = rep.leading_term;
                } catch (const NonConvergence&) {
                    row.converged = false;
                    row.delta = row.distance_bound = row.leading_term = NAN;
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

// Epsilon scale below which the NUDD tail is in its power-law regime.
inline double nudd_epsilon_scale(double eta, int m) {
    return std::min(1.0, 1.0 / (static_cast<double>(nudd_gamma(m)) * eta));
}

// m = 10, d_min in {5, 10, 20, 40}, eta in {1e-4, 1e-2, 1, 1e2}; each eta
// gets `points` log-spaced eps values on s * [1e-4, 1], s = nudd_epsilon_scale.
inline NuddSweep figure5_sweep(int points) {
    NuddSweep s{10, {5, 10, 20, 40}, {1e-4, 1e-2, 1.0, 1e2}, {}};
    for (double eta : s.etas) {
        const double scale = nudd_epsilon_scale(eta, s.m);
        s.epsilons.push_back(log_grid(1e-4 * scale, scale, points));
    }
    return s;
}

} // namespace ddbound
