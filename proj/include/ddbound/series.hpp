// Taylor tails of weighted exponential mixtures
//
// Every bounding function in this library has the form
//     S(eps) = sum_k w_k exp(r_k eps),
// so its n-th Taylor term is sum_k w_k (r_k eps)^n / n!. Tails are summed
// term by term from n = d+1, each (r_k eps)^n / n! carried as a running
// product so nothing is formed as closed-form minus partial sum.

#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "ddbound/errors.hpp"

namespace ddbound {

struct ExpTerm {
    double weight;
    double rate;
};

inline constexpr double default_rel_tol = 1e-15;

// Term cap: n <= d + 1 + max(200, 20 * ceil(scale)), scale ~ eps * (total rate).
inline int tail_term_cap(int d, double scale) {
    const double extra = std::max(200.0, 20.0 * std::ceil(std::max(0.0, scale)));
    return d + 1 + static_cast<int>(std::min(extra, 1e8));
}

// sum_k w_k (r_k eps)^n / n!
inline double exp_mixture_coefficient(std::span<const ExpTerm> terms, int n, double eps) {
    double total = 0.0;
    for (const auto& t : terms) {
        double p = 1.0;
        for (int k = 1; k <= n; ++k) p *= t.rate * eps / k;
        total += t.weight * p;
    }
    return total;
}

// sum_{n > d} sum_k w_k (r_k eps)^n / n!
//
// Stops once the remaining tail, bounded by a geometric series on
// sum_k |w_k (r_k eps)^n / n!|, is below rel_tol times the running sum.
// Throws NonConvergence when the cap is reached or a term overflows.
inline double exp_mixture_tail(std::span<const ExpTerm> terms, int d, double eps, double rel_tol, int cap) {
    require(d >= 0, "tail cutoff order must be >= 0");
    require(rel_tol > 0.0 && rel_tol <= 1e-6, "rel_tol must lie in (0, 1e-6]");
    require(eps >= 0.0 && std::isfinite(eps), "epsilon must be finite and >= 0");
    if (eps == 0.0) return 0.0;

    std::vector<double> run(terms.size(), 1.0);
    double max_rate = 0.0;
    for (const auto& t : terms) max_rate = std::max(max_rate, std::abs(t.rate));

    double sum = 0.0;
    for (int n = 1; n <= cap; ++n) {
        double term = 0.0;
        double magnitude = 0.0;
        for (std::size_t k = 0; k < terms.size(); ++k) {
            run[k] *= terms[k].rate * eps / n;
            term += terms[k].weight * run[k];
            magnitude += std::abs(terms[k].weight * run[k]);
        }
        if (!std::isfinite(magnitude)) {
            throw NonConvergence("Taylor tail overflowed at n = " + std::to_string(n) +
                                 " (eps = " + std::to_string(eps) + ")");
        }
        if (n <= d) continue;
        sum += term;
        const double q = max_rate * eps / (n + 1);
        if (magnitude == 0.0) {
            if (q < 1.0) return std::max(0.0, sum);
            continue;
        }
        if (q < 1.0 && magnitude * q / (1.0 - q) <= rel_tol * std::abs(sum)) return std::max(0.0, sum);
    }
    throw NonConvergence("Taylor tail did not converge within " + std::to_string(cap) + " terms (d = " +
                         std::to_string(d) + ", eps = " + std::to_string(eps) + ")");
}

// n log-spaced points from lo to hi inclusive.
inline std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> out;
    if (n <= 0) return out;
    if (n == 1) return {lo};
    const double a = std::log10(lo);
    const double b = std::log10(hi);
    for (int i = 0; i < n; ++i) out.push_back(std::pow(10.0, a + (b - a) * i / (n - 1)));
    return out;
}

} // namespace ddbound
