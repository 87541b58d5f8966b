// Independent reference computations used only by the tests
//
// Nothing here calls into the library under test.

#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

namespace oracle {

struct Pulse {
    double time;
    char axis;
    int qubit;
    int level;
};

inline double udd_lambda(int j, int order) {
    if (j == 0) return 0.0;
    const double s = std::sin(j * std::numbers::pi / (2.0 * order + 2.0));
    return s * s;
}

// Every pulse of a nested sequence by explicit multi-index enumeration: a
// pulse at level l is addressed by the sub-interval index j_i in 1..N_i+1 of
// each outer level i > l and its own index k in 1..N'_l.
inline std::vector<Pulse> enumerate_nested(const std::vector<int>& orders) {
    const int levels = static_cast<int>(orders.size());
    std::vector<Pulse> out;
    for (int l = 1; l <= levels; ++l) {
        const int outer = levels - l;
        std::vector<int> idx(static_cast<std::size_t>(outer), 1);
        for (;;) {
            double a = 0.0, b = 1.0;
            for (int t = 0; t < outer; ++t) {
                const int level = levels - t;
                const int n = orders[static_cast<std::size_t>(level - 1)];
                const int j = idx[static_cast<std::size_t>(t)];
                const double na = a + (b - a) * udd_lambda(j - 1, n);
                const double nb = a + (b - a) * udd_lambda(j, n);
                a = na;
                b = nb;
            }
            const int n = orders[static_cast<std::size_t>(l - 1)];
            const int count = n + n % 2;
            for (int k = 1; k <= count; ++k)
                out.push_back({a + (b - a) * udd_lambda(k, n), l % 2 == 0 ? 'x' : 'z', (l - 1) / 2, l});
            // odometer over the outer indices
            int t = outer - 1;
            while (t >= 0) {
                const int level = levels - t;
                if (++idx[static_cast<std::size_t>(t)] <= orders[static_cast<std::size_t>(level - 1)] + 1) break;
                idx[static_cast<std::size_t>(t)] = 1;
                --t;
            }
            if (t < 0) break;
        }
    }
    return out;
}

// l-th Taylor coefficient of an entire function at 0 by the trapezoid rule
// on the circle |z| = r (Cauchy integral formula).
inline double taylor_coefficient(const std::function<std::complex<double>(std::complex<double>)>& f, int l,
                                 double r, int points = 256) {
    std::complex<double> acc = 0.0;
    for (int k = 0; k < points; ++k) {
        const std::complex<double> w = std::polar(1.0, 2.0 * std::numbers::pi * k / points);
        acc += f(r * w) * std::pow(w, -l);
    }
    return (acc / static_cast<double>(points)).real() / std::pow(r, l);
}

// S_j of complex argument: e^z prod_alpha (cosh or sinh)(eta_alpha z), sinh
// where the parity bit of j is set (j = p_z + 2 p_y + 4 p_x).
inline std::complex<double> bounding_s(int j, std::complex<double> z, const std::array<double, 3>& eta) {
    const int bits[3] = {(j >> 2) & 1, (j >> 1) & 1, j & 1};
    std::complex<double> v = std::exp(z);
    for (int a = 0; a < 3; ++a) v *= bits[a] ? std::sinh(eta[a] * z) : std::cosh(eta[a] * z);
    return v;
}

// Classical RK4 for (S_0, S_1)' = M (S_0, S_1) with the collapsed NUDD
// generator, from (1, 0).
inline std::array<double, 2> rk4_nudd(double j0, double j1, double gamma, double duration, int steps) {
    auto rhs = [&](const std::array<double, 2>& s) {
        return std::array<double, 2>{j0 * s[0] + gamma * j1 * s[1], j1 * s[0] + (j0 + (gamma - 1.0) * j1) * s[1]};
    };
    std::array<double, 2> s{1.0, 0.0};
    const double h = duration / steps;
    for (int n = 0; n < steps; ++n) {
        const auto k1 = rhs(s);
        const auto k2 = rhs({s[0] + 0.5 * h * k1[0], s[1] + 0.5 * h * k1[1]});
        const auto k3 = rhs({s[0] + 0.5 * h * k2[0], s[1] + 0.5 * h * k2[1]});
        const auto k4 = rhs({s[0] + h * k3[0], s[1] + h * k3[1]});
        for (int i = 0; i < 2; ++i) s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return s;
}

// Words of length n over {0,x,y,z} with parity (px, py, pz): character sum
// over the sign group, (1/8) sum_s s^p (1 + s_x + s_y + s_z)^n.
inline double parity_class_count(int n, int px, int py, int pz) {
    double total = 0.0;
    for (int sx : {1, -1})
        for (int sy : {1, -1})
            for (int sz : {1, -1}) {
                const double sign = (px ? sx : 1) * (py ? sy : 1) * (pz ? sz : 1);
                total += sign * std::pow(1.0 + sx + sy + sz, n);
            }
    return total / 8.0;
}

} // namespace oracle
