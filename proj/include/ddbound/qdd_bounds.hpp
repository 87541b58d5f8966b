// Analytic performance bounds for QDD_{N1,N2}
//
// The Dyson series of a single qubit coupled to a bounded bath splits by the
// parity triple (p_x, p_y, p_z) of the letter counts. Case j = p_z + 2 p_y + 4 p_x
// is bounded by
//     S_j(eps, eta) = e^eps * prod_{a in x,y,z} (cosh or sinh)(eta_a eps),
// sinh where p_a = 1. Channels collect two cases each: x <- {3, 4},
// y <- {2, 5}, z <- {1, 6}.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "ddbound/errors.hpp"
#include "ddbound/series.hpp"

namespace ddbound {

struct EtaVector {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    double sum() const { return x + y + z; }

    static EtaVector isotropic(double eta) { return {eta, eta, eta}; }
};

inline void validate_eta(const EtaVector& eta) {
    for (int a = 0; a < 3; ++a) {
        require(std::isfinite(eta[a]) && eta[a] >= 0.0, "eta components must be finite and >= 0");
    }
}

enum class OrderMode {
    analytic,         // proven orders; the only mode whose bounds are rigorous
    numeric_footnote, // odd-N1 z order min{2 N1 + 1, N2}, observed numerically
};

inline std::string to_string(OrderMode mode) {
    return mode == OrderMode::analytic ? "analytic" : "numeric-footnote";
}

struct DecouplingOrders {
    int x = 0;
    int y = 0;
    int z = 0;

    int operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
    int min() const { return std::min({x, y, z}); }
    bool operator==(const DecouplingOrders&) const = default;
};

// Per-channel decoupling orders of QDD_{N1,N2}.
inline DecouplingOrders decoupling_orders(int n1, int n2, OrderMode mode = OrderMode::analytic) {
    require(n1 >= 0 && n2 >= 0, "QDD orders must be >= 0");
    const bool n1_odd = n1 % 2 == 1;
    const bool n2_odd = n2 % 2 == 1;
    DecouplingOrders d;
    d.x = n1;
    if (!n1_odd) {
        d.y = n2_odd ? std::max(n1 + 1, n2) : std::max(n1, n2);
        d.z = n2;
    } else {
        d.y = n2_odd ? n1 + 1 : n1;
        d.z = mode == OrderMode::analytic ? std::min(n1 + 1, n2) : std::min(2 * n1 + 1, n2);
    }
    return d;
}

struct Parity {
    int x;
    int y;
    int z;
};

inline Parity parity_of_case(int j) { return {(j >> 2) & 1, (j >> 1) & 1, j & 1}; }

// The two bounding-function cases feeding channel axis (0 = x, 1 = y, 2 = z).
inline std::array<int, 2> channel_cases(int axis) {
    static constexpr std::array<std::array<int, 2>, 3> cases{{{3, 4}, {2, 5}, {1, 6}}};
    return cases[static_cast<std::size_t>(axis)];
}

namespace detail {

inline void check_case(int j) { require(j >= 0 && j <= 7, "bounding case j must lie in 0..7"); }

// S_j = (1/8) sum_{s in {+-1}^3} s_x^{p_x} s_y^{p_y} s_z^{p_z} exp((1 + s.eta) eps)
inline std::array<ExpTerm, 8> case_terms(int j, const EtaVector& eta) {
    const Parity p = parity_of_case(j);
    std::array<ExpTerm, 8> out{};
    std::size_t k = 0;
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) {
                const int sign = (p.x ? sx : 1) * (p.y ? sy : 1) * (p.z ? sz : 1);
                out[k++] = {sign / 8.0, 1.0 + sx * eta.x + sy * eta.y + sz * eta.z};
            }
    return out;
}

// Each sinh factor starts at eps^1, so g_l^{(j)} = 0 for l below the count of
// odd parities. The mixture would return rounding noise there instead.
inline int lowest_order(int j) {
    const Parity p = parity_of_case(j);
    return p.x + p.y + p.z;
}

// A sinh factor with eta_a = 0 makes S_j vanish identically.
inline bool case_vanishes(int j, const EtaVector& eta) {
    const Parity p = parity_of_case(j);
    return (p.x && eta.x == 0.0) || (p.y && eta.y == 0.0) || (p.z && eta.z == 0.0);
}

inline double log_cosh(double x) {
    x = std::abs(x);
    return x + std::log1p(std::exp(-2.0 * x)) - std::log(2.0);
}

inline double log_sinh(double x) { return x + std::log(-std::expm1(-2.0 * x)) - std::log(2.0); }

} // namespace detail

inline double bounding_function(int j, double eps, const EtaVector& eta) {
    detail::check_case(j);
    const Parity p = parity_of_case(j);
    auto factor = [eps](int odd, double e) { return odd ? std::sinh(e * eps) : std::cosh(e * eps); };
    return std::exp(eps) * factor(p.x, eta.x) * factor(p.y, eta.y) * factor(p.z, eta.z);
}

// log S_j, finite where S_j itself overflows. -inf when S_j = 0.
inline double log_bounding_function(int j, double eps, const EtaVector& eta) {
    detail::check_case(j);
    const Parity p = parity_of_case(j);
    double out = eps;
    for (int a = 0; a < 3; ++a) {
        const int odd = a == 0 ? p.x : (a == 1 ? p.y : p.z);
        const double x = eta[a] * eps;
        if (odd) {
            if (x == 0.0) return -INFINITY;
            out += detail::log_sinh(x);
        } else {
            out += detail::log_cosh(x);
        }
    }
    return out;
}

namespace detail {

// eps^l coefficient of e^eps times the cosh/sinh factors, as a Cauchy product
// of their series. Every term is >= 0, so nothing cancels.
inline double series_product(int j, int l, double eps, const EtaVector& eta) {
    const Parity p = parity_of_case(j);
    const auto n = static_cast<std::size_t>(l) + 1;
    std::vector<double> acc(n), factor(n), next(n);
    double t = 1.0;
    for (std::size_t k = 0; k < n; ++k) {
        acc[k] = t;
        t *= eps / static_cast<double>(k + 1);
    }
    const int odd[3] = {p.x, p.y, p.z};
    for (int a = 0; a < 3; ++a) {
        t = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            factor[k] = static_cast<int>(k % 2) == odd[a] ? t : 0.0;
            t *= eta[a] * eps / static_cast<double>(k + 1);
        }
        for (std::size_t k = 0; k < n; ++k) {
            double sum = 0.0;
            for (std::size_t i = 0; i <= k; ++i) sum += acc[i] * factor[k - i];
            next[k] = sum;
        }
        acc.swap(next);
    }
    return acc.back();
}

} // namespace detail

// g_l^{(j)}(eta): the eps^l Taylor coefficient of S_j.
inline double g_poly(int j, int l, const EtaVector& eta) {
    detail::check_case(j);
    require(l >= 0, "g_poly: order l must be >= 0");
    if (l < detail::lowest_order(j)) return 0.0;
    return detail::series_product(j, l, 1.0, eta);
}

// g_l^{(j)}(eta) eps^l, formed without separate powers of eps.
inline double g_term(int j, int l, double eps, const EtaVector& eta) {
    detail::check_case(j);
    require(l >= 0, "g_term: order l must be >= 0");
    if (l < detail::lowest_order(j)) return 0.0;
    return detail::series_product(j, l, eps, eta);
}

// Delta_d^{(j)} = sum_{n > d} g_n^{(j)}(eta) eps^n.
inline double delta_tail(int j, int d, double eps, const EtaVector& eta, double rel_tol = default_rel_tol) {
    detail::check_case(j);
    validate_eta(eta);
    require(d >= 0, "delta_tail: cutoff order must be >= 0");
    require(rel_tol > 0.0 && rel_tol <= 1e-6, "rel_tol must lie in (0, 1e-6]");
    require(std::isfinite(eps) && eps >= 0.0, "epsilon must be finite and >= 0");
    if (eps == 0.0 || detail::case_vanishes(j, eta)) return 0.0;
    const auto terms = detail::case_terms(j, eta);
    d = std::max(d, detail::lowest_order(j) - 1);
    return exp_mixture_tail(terms, d, eps, rel_tol, tail_term_cap(d, eps * (1.0 + eta.sum())));
}

struct ChannelBounds {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    double operator[](int axis) const { return axis == 0 ? x : (axis == 1 ? y : z); }
};

struct BoundReport {
    double epsilon = 0.0;
    EtaVector eta;
    OrderMode mode = OrderMode::analytic;
    DecouplingOrders orders;
    // Delta tails by case j = 1..6 (index 0 and 7 unused).
    std::array<double, 8> deltas{};
    ChannelBounds channel_bounds;
    double distance_bound = 0.0;         // expanded six-Delta form
    double distance_from_channels = 0.0; // same bound composed from L_x, L_y, L_z
    double leading_term = 0.0;
};

// L_x = Delta^{(3)} + Delta^{(4)}, L_y = Delta^{(2)} + Delta^{(5)}, L_z = Delta^{(1)} + Delta^{(6)},
// each cut at the channel's decoupling order.
inline ChannelBounds channel_bounds(int n1, int n2, double eps, const EtaVector& eta,
                                    OrderMode mode = OrderMode::analytic, double rel_tol = default_rel_tol) {
    const DecouplingOrders d = decoupling_orders(n1, n2, mode);
    ChannelBounds out;
    double* slots[3] = {&out.x, &out.y, &out.z};
    for (int a = 0; a < 3; ++a) {
        const auto [j1, j2] = channel_cases(a);
        *slots[a] = delta_tail(j1, d[a], eps, eta, rel_tol) + delta_tail(j2, d[a], eps, eta, rel_tol);
    }
    return out;
}

// Trace-norm distance bound between the protected and the uncoupled qubit state.
inline BoundReport distance_bound(int n1, int n2, double eps, const EtaVector& eta,
                                  OrderMode mode = OrderMode::analytic, double rel_tol = default_rel_tol) {
    BoundReport r;
    r.epsilon = eps;
    r.eta = eta;
    r.mode = mode;
    r.orders = decoupling_orders(n1, n2, mode);
    const auto& d = r.orders;

    auto& D = r.deltas;
    D[3] = delta_tail(3, d.x, eps, eta, rel_tol);
    D[4] = delta_tail(4, d.x, eps, eta, rel_tol);
    D[2] = delta_tail(2, d.y, eps, eta, rel_tol);
    D[5] = delta_tail(5, d.y, eps, eta, rel_tol);
    D[1] = delta_tail(1, d.z, eps, eta, rel_tol);
    D[6] = delta_tail(6, d.z, eps, eta, rel_tol);

    r.channel_bounds = {D[3] + D[4], D[2] + D[5], D[1] + D[6]};

    const double linear = D[3] + D[4] + D[2] + D[5] + D[1] + D[6];
    const double squares = D[3] * D[3] + D[4] * D[4] + D[2] * D[2] + D[5] * D[5] + D[1] * D[1] + D[6] * D[6];
    const double same_channel = 2.0 * D[3] * D[4] + 2.0 * D[2] * D[5] + 2.0 * D[1] * D[6];
    const double mixed = D[3] * D[2] + D[3] * D[5] + D[4] * D[2] + D[4] * D[5]   // x-y
                         + D[2] * D[1] + D[2] * D[6] + D[5] * D[1] + D[5] * D[6] // y-z
                         + D[3] * D[1] + D[3] * D[6] + D[4] * D[1] + D[4] * D[6]; // x-z
    r.distance_bound = linear + squares + same_channel + mixed;

    const auto& L = r.channel_bounds;
    r.distance_from_channels =
        L.x + L.y + L.z + L.x * L.x + L.y * L.y + L.z * L.z + L.x * L.y + L.y * L.z + L.x * L.z;

    r.leading_term = g_term(3, d.x + 1, eps, eta) + g_term(4, d.x + 1, eps, eta) +
                     g_term(2, d.y + 1, eps, eta) + g_term(5, d.y + 1, eps, eta) +
                     g_term(1, d.z + 1, eps, eta) + g_term(6, d.z + 1, eps, eta);
    return r;
}

// One curve point of the L_alpha(eps) figures.
struct FigureRow {
    double epsilon = 0.0;
    int n1 = 0;
    int n2 = 0;
    EtaVector eta;
    DecouplingOrders orders;
    ChannelBounds bounds;
    double distance_bound = 0.0;
    double leading_term = 0.0;
    bool converged = true;
};

struct FigureSweep {
    std::vector<double> epsilons;
    std::vector<std::pair<int, int>> sequences; // (N1, N2)
    std::vector<EtaVector> etas;
    OrderMode mode = OrderMode::analytic;
};

inline const std::vector<double>& figure_eta_values() {
    static const std::vector<double> v{1e-4, 1e-2, 1.0, 1e2};
    return v;
}

// Isotropic eta, N1 = N2 = N in {2, 6, 16, 34}.
inline FigureSweep figure2_sweep(std::vector<double> epsilons) {
    FigureSweep s{std::move(epsilons), {}, {}, OrderMode::analytic};
    for (int n : {2, 6, 16, 34}) s.sequences.emplace_back(n, n);
    for (double e : figure_eta_values()) s.etas.push_back(EtaVector::isotropic(e));
    return s;
}

// eta_x = eta_y varied, eta_z = 1e-2, N2 = 10, N1 in {2, 10, 18, 34}.
inline FigureSweep figure3_sweep(std::vector<double> epsilons) {
    FigureSweep s{std::move(epsilons), {}, {}, OrderMode::analytic};
    for (int n1 : {2, 10, 18, 34}) s.sequences.emplace_back(n1, 10);
    for (double e : figure_eta_values()) s.etas.push_back({e, e, 1e-2});
    return s;
}

// As figure 3 with odd N2 = 9 and N1 in {3, 10, 19, 34}.
inline FigureSweep figure4_sweep(std::vector<double> epsilons) {
    FigureSweep s{std::move(epsilons), {}, {}, OrderMode::analytic};
    for (int n1 : {3, 10, 19, 34}) s.sequences.emplace_back(n1, 9);
    for (double e : figure_eta_values()) s.etas.push_back({e, e, 1e-2});
    return s;
}

// Rows ordered eta-major, then sequence, then epsilon. A cell whose tail does
// not converge is kept with converged = false and NaN values.
inline std::vector<FigureRow> figure_sweep(const FigureSweep& sweep) {
    std::vector<FigureRow> rows;
    for (const auto& eta : sweep.etas) {
        for (const auto& [n1, n2] : sweep.sequences) {
            for (double eps : sweep.epsilons) {
                FigureRow row;
                row.epsilon = eps;
                row.n1 = n1;
                row.n2 = n2;
                row.eta = eta;
                row.orders = decoupling_orders(n1, n2, sweep.mode);
                try {
                    const auto rep = distance_bound(n1, n2, eps, eta, sweep.mode);
                    row.bounds = rep.channel_bounds;
                    row.distance_bound = rep.distance_bound;
                    row.leading_term = rep.leading_term;
                } catch (const NonConvergence&) {
                    row.converged = false;
                    row.bounds = {NAN, NAN, NAN};
                    row.distance_bound = NAN;
                    row.leading_term = NAN;
                }
                rows.push_back(row);
            }
        }
    }
    return rows;
}

} // namespace ddbound
