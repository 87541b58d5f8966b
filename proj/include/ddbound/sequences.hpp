// UDD, QDD and NUDD pulse schedules and toggling-frame switching functions
//
// Nesting levels are numbered 1 (innermost) to 2m (outermost). Odd levels
// carry z pulses, even levels x pulses; levels 2j-1 and 2j act on qubit j-1
// (zero-indexed). Times are dimensionless, s = t/T in (0, 1].

#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "ddbound/arithmetic.hpp"
#include "ddbound/errors.hpp"

namespace ddbound {

enum class Axis { x, z };

// Ordering of pulses that fire at the same instant.
enum class TieRule {
    inner_first, // lower level first: the inner sequence completes, then the outer pulse
    outer_first,
};

inline char axis_char(Axis axis) { return axis == Axis::x ? 'x' : 'z'; }

inline Axis level_axis(int level) { return level % 2 == 0 ? Axis::x : Axis::z; }
inline int level_qubit(int level) { return (level - 1) / 2; }

// N' = N + N mod 2: odd orders get one extra pulse so the sequence closes on identity.
inline int effective_order(int order) { return order + order % 2; }

template <class Real>
struct BasicPulseEvent {
    Real time;
    Axis axis;
    int qubit;
    int level;
};

using PulseEvent = BasicPulseEvent<double>;

inline void validate_orders(const std::vector<int>& orders, int qubits) {
    require(qubits >= 1, "qubit count must be >= 1");
    require(orders.size() == 2 * static_cast<std::size_t>(qubits),
            "expected " + std::to_string(2 * qubits) + " orders for " + std::to_string(qubits) +
                " qubit(s), got " + std::to_string(orders.size()));
    for (int n : orders) require(n >= 0, "pulse orders must be >= 0, got " + std::to_string(n));
}

template <class Real>
std::vector<Real> udd_offsets_as(int order) {
    require(order >= 0, "udd order must be >= 0");
    std::vector<Real> out;
    out.reserve(static_cast<std::size_t>(effective_order(order)));
    for (int j = 1; j <= effective_order(order); ++j) out.push_back(udd_fraction<Real>(j, order));
    return out;
}

// lambda_j = sin^2(j pi / (2N+2)) for j = 1..N'.
inline std::vector<double> udd_offsets(int order) { return udd_offsets_as<double>(order); }

namespace detail {

template <class Real>
struct LevelFractions {
    int order;
    std::vector<Real> lambda; // lambda[0] = 0 ... lambda[N+1] = 1
};

template <class Real>
void emit_level(const std::vector<LevelFractions<Real>>& levels, int level, const Real& begin,
                const Real& end, std::vector<BasicPulseEvent<Real>>& out) {
    const auto& lv = levels[static_cast<std::size_t>(level - 1)];
    // Closed form begin + (end - begin) * lambda_k; lambda == 1 maps to `end`
    // exactly so coincident inner/outer pulses tie bit-for-bit.
    auto at = [&](int k) -> Real {
        const Real& lam = lv.lambda[static_cast<std::size_t>(k)];
        if (k == 0) return begin;
        if (lam == Real(1)) return end;
        return begin + (end - begin) * lam;
    };
    const Axis axis = level_axis(level);
    const int qubit = level_qubit(level);
    for (int k = 1; k <= effective_order(lv.order); ++k) out.push_back({at(k), axis, qubit, level});
    if (level > 1) {
        for (int k = 1; k <= lv.order + 1; ++k) emit_level(levels, level - 1, at(k - 1), at(k), out);
    }
}

} // namespace detail

// All pulse events of the nested sequence, sorted by time with the tie rule.
template <class Real>
std::vector<BasicPulseEvent<Real>> nested_events(const std::vector<int>& orders, int qubits,
                                                 TieRule tie = TieRule::inner_first) {
    validate_orders(orders, qubits);
    std::vector<detail::LevelFractions<Real>> levels;
    for (int n : orders) {
        detail::LevelFractions<Real> lv{n, {Real(0)}};
        for (int j = 1; j <= n + 1; ++j) lv.lambda.push_back(udd_fraction<Real>(j, n));
        levels.push_back(std::move(lv));
    }
    std::vector<BasicPulseEvent<Real>> events;
    detail::emit_level(levels, static_cast<int>(orders.size()), Real(0), Real(1), events);
    std::stable_sort(events.begin(), events.end(), [tie](const auto& a, const auto& b) {
        if (a.time != b.time) return a.time < b.time;
        return tie == TieRule::inner_first ? a.level < b.level : a.level > b.level;
    });
    return events;
}

struct PulseSchedule {
    std::vector<PulseEvent> events;
    std::vector<int> orders;           // N_i, level 1 first
    std::vector<int> effective_orders; // N'_i
    int qubit_count = 1;
    TieRule tie_rule = TieRule::inner_first;

    std::size_t count_level(int level) const {
        return static_cast<std::size_t>(
            std::count_if(events.begin(), events.end(), [level](const PulseEvent& e) { return e.level == level; }));
    }
    std::size_t count_axis(Axis axis) const {
        return static_cast<std::size_t>(
            std::count_if(events.begin(), events.end(), [axis](const PulseEvent& e) { return e.axis == axis; }));
    }
};

inline PulseSchedule nudd_schedule(const std::vector<int>& orders, int qubits, TieRule tie = TieRule::inner_first) {
    PulseSchedule s;
    s.events = nested_events<double>(orders, qubits, tie);
    s.orders = orders;
    for (int n : orders) s.effective_orders.push_back(effective_order(n));
    s.qubit_count = qubits;
    s.tie_rule = tie;
    return s;
}

// QDD_{N1,N2}: inner UDD_{N1} of z pulses nested in outer UDD_{N2} of x pulses.
inline PulseSchedule qdd_schedule(int n1, int n2, TieRule tie = TieRule::inner_first) {
    return nudd_schedule({n1, n2}, 1, tie);
}

// Piecewise-constant +-1 function on [0, 1].
template <class Real>
struct BasicSwitchingProfile {
    std::vector<Real> breakpoints{Real(0), Real(1)};
    std::vector<int> signs{1};
    int final_sign = 1; // sign after the last pulse at s = 1, if any

    static BasicSwitchingProfile constant() { return {}; }

    // Starts at +1 and flips at each time in `flips` (sorted, in (0, 1]).
    static BasicSwitchingProfile from_flips(const std::vector<Real>& flips) {
        BasicSwitchingProfile p;
        p.breakpoints = {Real(0)};
        p.signs.clear();
        int current = 1;
        int terminal = 0;
        for (const Real& t : flips) {
            if (t >= Real(1)) {
                ++terminal;
                continue;
            }
            if (t > p.breakpoints.back()) {
                p.signs.push_back(current);
                p.breakpoints.push_back(t);
            }
            current = -current;
        }
        p.signs.push_back(current);
        p.breakpoints.push_back(Real(1));
        p.final_sign = terminal % 2 == 0 ? current : -current;
        return p;
    }

    std::size_t interval_count() const { return signs.size(); }

    int value_at(const Real& s) const {
        auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), s);
        auto idx = static_cast<std::size_t>(std::distance(breakpoints.begin(), it));
        if (idx == 0) return signs.front();
        return signs[std::min(idx - 1, signs.size() - 1)];
    }

    // Sign changes on [0, 1] plus a terminal flip at s = 1.
    std::size_t flip_count() const {
        std::size_t n = 0;
        for (std::size_t i = 1; i < signs.size(); ++i) n += signs[i] != signs[i - 1];
        return n + (final_sign != signs.back());
    }

    // Exact integral over [0, 1].
    Real integral() const {
        Real total(0);
        for (std::size_t i = 0; i < signs.size(); ++i)
            total += Real(signs[i]) * (breakpoints[i + 1] - breakpoints[i]);
        return total;
    }
};

using SwitchingProfile = BasicSwitchingProfile<double>;

// Sorted union of breakpoints; both inputs share the endpoints 0 and 1.
template <class Real>
std::vector<Real> merge_breakpoints(const std::vector<Real>& a, const std::vector<Real>& b) {
    std::vector<Real> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Signs of `p` on each interval of `grid`, which must refine p's breakpoints.
template <class Real>
std::vector<int> resample(const BasicSwitchingProfile<Real>& p, const std::vector<Real>& grid) {
    std::vector<int> out;
    out.reserve(grid.size() - 1);
    std::size_t k = 0;
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        while (k + 1 < p.signs.size() && p.breakpoints[k + 1] <= grid[i]) ++k;
        out.push_back(p.signs[k]);
    }
    return out;
}

template <class Real>
BasicSwitchingProfile<Real> product(const BasicSwitchingProfile<Real>& a, const BasicSwitchingProfile<Real>& b) {
    BasicSwitchingProfile<Real> out;
    out.breakpoints = merge_breakpoints(a.breakpoints, b.breakpoints);
    const auto sa = resample(a, out.breakpoints);
    const auto sb = resample(b, out.breakpoints);
    out.signs.resize(sa.size());
    for (std::size_t i = 0; i < sa.size(); ++i) out.signs[i] = sa[i] * sb[i];
    out.final_sign = a.final_sign * b.final_sign;
    return out;
}

// Single-qubit switching functions, indexed 0 = identity, 1 = x, 2 = y, 3 = z.
template <class Real>
using QubitSwitching = std::array<BasicSwitchingProfile<Real>, 4>;

// Per-qubit switching functions induced by a list of events: sigma_x
// couplings flip at that qubit's z pulses, sigma_z couplings at its x
// pulses, and f_y = f_x f_z.
template <class Real>
std::vector<QubitSwitching<Real>> switching_from_events(const std::vector<BasicPulseEvent<Real>>& events, int qubits) {
    std::vector<QubitSwitching<Real>> out(static_cast<std::size_t>(qubits));
    for (int q = 0; q < qubits; ++q) {
        std::vector<Real> z_times;
        std::vector<Real> x_times;
        for (const auto& e : events) {
            if (e.qubit != q) continue;
            (e.axis == Axis::z ? z_times : x_times).push_back(e.time);
        }
        auto& sw = out[static_cast<std::size_t>(q)];
        sw[0] = BasicSwitchingProfile<Real>::constant();
        sw[1] = BasicSwitchingProfile<Real>::from_flips(z_times);
        sw[3] = BasicSwitchingProfile<Real>::from_flips(x_times);
        sw[2] = product(sw[1], sw[3]);
    }
    return out;
}

// f_0, f_x, f_y, f_z of QDD_{N1,N2}.
template <class Real>
QubitSwitching<Real> switching_qdd_as(int n1, int n2) {
    return switching_from_events(nested_events<Real>({n1, n2}, 1), 1).front();
}

inline QubitSwitching<double> switching_qdd(int n1, int n2) { return switching_qdd_as<double>(n1, n2); }

// Switching functions of an m-qubit nested sequence. channel() gives
// f_mu = prod_j f_{j, mu_j} for a Pauli label mu with base-4 digits
// (qubit 0 most significant, digits 0..3 = I, X, Y, Z).
struct NuddSwitching {
    int qubits = 1;
    std::vector<QubitSwitching<double>> per_qubit;

    SwitchingProfile channel(std::size_t label) const {
        SwitchingProfile out = SwitchingProfile::constant();
        for (int q = qubits - 1; q >= 0; --q) {
            const auto digit = label % 4;
            label /= 4;
            out = product(out, per_qubit[static_cast<std::size_t>(q)][digit]);
        }
        return out;
    }
};

inline NuddSwitching switching_nudd(const PulseSchedule& schedule) {
    return {schedule.qubit_count, switching_from_events(schedule.events, schedule.qubit_count)};
}

} // namespace ddbound
