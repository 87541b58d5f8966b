// Exact nested switching-function integrals and decoupling-order certification
//
// A word (a_1, ..., a_n) over {0, x, y, z} indexes one Dyson term. Its
// coefficient is the time-ordered integral
//     f = int_0^1 ds_n f_{a_n}(s_n) int_0^{s_n} ... int_0^{s_2} ds_1 f_{a_1}(s_1),
// so letters[0] is the earliest (innermost) factor. Integrals are built as
// piecewise polynomials on the union of all switching breakpoints, one
// antiderivative per letter, in Rational (exact) or Extended arithmetic.

#pragma once

#include <array>
#include <cstddef>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ddbound/arithmetic.hpp"
#include "ddbound/errors.hpp"
#include "ddbound/qdd_bounds.hpp"
#include "ddbound/sequences.hpp"

namespace ddbound {

enum class Letter : unsigned char { identity = 0, x = 1, y = 2, z = 3 };
enum class Channel : unsigned char { identity = 0, x = 1, y = 2, z = 3 };

using Word = std::vector<Letter>;

inline char letter_char(Letter l) { return "0xyz"[static_cast<int>(l)]; }
inline std::string channel_name(Channel c) {
    static const char* names[] = {"identity", "x", "y", "z"};
    return names[static_cast<int>(c)];
}

inline std::string to_string(const Word& w) {
    std::string s;
    for (Letter l : w) s += letter_char(l);
    return s;
}

inline Word parse_word(const std::string& text) {
    Word w;
    for (char c : text) {
        switch (c) {
        case '0': w.push_back(Letter::identity); break;
        case 'x': w.push_back(Letter::x); break;
        case 'y': w.push_back(Letter::y); break;
        case 'z': w.push_back(Letter::z); break;
        default: throw InvalidArgument(std::string("word letters must be 0, x, y or z; got '") + c + "'");
        }
    }
    return w;
}

// Parity triple of a word; letter 0 leaves all parities unchanged.
inline Parity word_parity(const Word& w) {
    Parity p{0, 0, 0};
    for (Letter l : w) {
        if (l == Letter::x) p.x ^= 1;
        if (l == Letter::y) p.y ^= 1;
        if (l == Letter::z) p.z ^= 1;
    }
    return p;
}

// Error channel of a parity case j = p_z + 2 p_y + 4 p_x.
inline Channel case_channel(int j) {
    static constexpr Channel table[8] = {Channel::identity, Channel::z, Channel::y, Channel::x,
                                         Channel::x,        Channel::y, Channel::z, Channel::identity};
    return table[j & 7];
}

inline Channel word_channel(const Word& w) {
    const Parity p = word_parity(w);
    return case_channel(p.z + 2 * p.y + 4 * p.x);
}

// Piecewise polynomial on a shared breakpoint grid; piece i is stored in the
// local variable u = s - grid[i], coefficients in ascending powers.
template <class Real>
class PiecewisePoly {
public:
    using Grid = std::shared_ptr<const std::vector<Real>>;

    static PiecewisePoly constant(Grid grid, const Real& value) {
        PiecewisePoly p;
        p.grid_ = std::move(grid);
        p.pieces_.assign(p.grid_->size() - 1, std::vector<Real>{value});
        return p;
    }

    const std::vector<Real>& grid() const { return *grid_; }
    std::size_t piece_count() const { return pieces_.size(); }
    const std::vector<Real>& piece(std::size_t i) const { return pieces_[i]; }

    std::size_t degree() const {
        std::size_t d = 0;
        for (const auto& c : pieces_) d = std::max(d, c.size() - 1);
        return d;
    }

    // G(s) = int_0^s sign(u) p(u) du with sign constant on each piece.
    PiecewisePoly integrate_signed(std::span<const int> signs) const {
        PiecewisePoly out;
        out.grid_ = grid_;
        out.pieces_.resize(pieces_.size());
        Real carry(0);
        const auto& g = *grid_;
        for (std::size_t i = 0; i < pieces_.size(); ++i) {
            const auto& c = pieces_[i];
            auto& q = out.pieces_[i];
            q.assign(c.size() + 1, Real(0));
            q[0] = carry;
            for (std::size_t k = 0; k < c.size(); ++k) {
                q[k + 1] = c[k] / Real(static_cast<long>(k + 1));
                if (signs[i] < 0) q[k + 1] = -q[k + 1];
            }
            carry = evaluate_piece(q, g[i + 1] - g[i]);
        }
        return out;
    }

    Real operator()(const Real& s) const {
        const auto& g = *grid_;
        std::size_t i = 0;
        while (i + 1 < pieces_.size() && g[i + 1] <= s) ++i;
        return evaluate_piece(pieces_[i], s - g[i]);
    }

    Real value_at_end() const {
        const auto& g = *grid_;
        return evaluate_piece(pieces_.back(), g.back() - g[g.size() - 2]);
    }

private:
    static Real evaluate_piece(const std::vector<Real>& c, const Real& u) {
        Real acc(0);
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * u + c[k];
        return acc;
    }

    Grid grid_;
    std::vector<std::vector<Real>> pieces_;
};

inline constexpr int default_max_depth = 6;

// Word integrals for one set of single-qubit switching functions.
template <class Real>
class WordIntegrator {
public:
    explicit WordIntegrator(const QubitSwitching<Real>& profiles, int max_depth = default_max_depth)
        : max_depth_(max_depth) {
        std::vector<Real> grid = profiles[0].breakpoints;
        for (int a = 1; a < 4; ++a) grid = merge_breakpoints(grid, profiles[static_cast<std::size_t>(a)].breakpoints);
        grid_ = std::make_shared<const std::vector<Real>>(std::move(grid));
        for (int a = 0; a < 4; ++a) signs_[static_cast<std::size_t>(a)] = resample(profiles[static_cast<std::size_t>(a)], *grid_);
    }

    int max_depth() const { return max_depth_; }
    const std::vector<Real>& grid() const { return *grid_; }

    Real integrate(const Word& word) const {
        require(!word.empty(), "word must have length >= 1");
        require(static_cast<int>(word.size()) <= max_depth_,
                "word length " + std::to_string(word.size()) + " exceeds max depth " + std::to_string(max_depth_));
        auto p = PiecewisePoly<Real>::constant(grid_, Real(1));
        for (Letter l : word) p = p.integrate_signed(signs_[static_cast<std::size_t>(l)]);
        return p.value_at_end();
    }

    // Visits every word of length 1..n_max as visit(word, integral). Words
    // sharing a prefix share its partial antiderivatives.
    template <class Visit>
    void for_each_word(int n_max, Visit&& visit) const {
        require(n_max <= max_depth_,
                "n_max " + std::to_string(n_max) + " exceeds max depth " + std::to_string(max_depth_));
        Word word;
        auto root = PiecewisePoly<Real>::constant(grid_, Real(1));
        descend(root, word, n_max, visit);
    }

private:
    template <class Visit>
    void descend(const PiecewisePoly<Real>& partial, Word& word, int n_max, Visit& visit) const {
        if (static_cast<int>(word.size()) == n_max) return;
        for (int a = 0; a < 4; ++a) {
            word.push_back(static_cast<Letter>(a));
            const auto next = partial.integrate_signed(signs_[static_cast<std::size_t>(a)]);
            visit(static_cast<const Word&>(word), next.value_at_end());
            descend(next, word, n_max, visit);
            word.pop_back();
        }
    }

    int max_depth_;
    typename PiecewisePoly<Real>::Grid grid_;
    std::array<std::vector<int>, 4> signs_;
};

template <class Real>
Real word_integral(const Word& word, const QubitSwitching<Real>& profiles, int max_depth = default_max_depth) {
    return WordIntegrator<Real>(profiles, max_depth).integrate(word);
}

enum class Backend { automatic, exact, extended };

inline std::string to_string(Backend b) {
    switch (b) {
    case Backend::exact: return "exact-rational";
    case Backend::extended: return "extended-precision";
    default: return "automatic";
    }
}

// |integral| at or below this counts as zero in the extended backend.
inline constexpr double extended_zero_threshold = 1e-25;

enum class EntryStatus {
    vanishes,     // every word of this length on the channel integrates to zero
    violation,    // a word that must vanish does not
    saturated,    // n = d + 1 and a nonzero witness exists
    inconclusive, // n = d + 1 but every word vanished
    beyond,       // n > d + 1, informational
};

inline std::string to_string(EntryStatus s) {
    switch (s) {
    case EntryStatus::vanishes: return "vanishes";
    case EntryStatus::violation: return "violation";
    case EntryStatus::saturated: return "saturated";
    case EntryStatus::inconclusive: return "inconclusive";
    default: return "beyond-order";
    }
}

struct OrderEntry {
    Channel channel = Channel::x;
    int length = 0;
    int order = 0;
    std::size_t words = 0;
    double max_abs = 0.0;
    std::string max_abs_text; // exact fraction or 50-digit decimal
    Word witness;             // argmax |integral|
    EntryStatus status = EntryStatus::vanishes;
};

struct OrderCertificate {
    int n1 = 0;
    int n2 = 0;
    int n_max = 0;
    Backend backend = Backend::exact;
    DecouplingOrders orders;
    std::vector<OrderEntry> entries; // channel-major (x, y, z), then length
    std::size_t violations = 0;

    bool passed() const { return violations == 0; }
};

namespace detail {

template <class Real>
OrderCertificate certify(int n1, int n2, int n_max, Backend backend, const DecouplingOrders& claimed, int max_depth) {
    OrderCertificate cert;
    cert.n1 = n1;
    cert.n2 = n2;
    cert.n_max = n_max;
    cert.backend = backend;
    cert.orders = claimed;

    struct Acc {
        std::size_t words = 0;
        Real max_abs{0};
        Word witness;
    };
    // acc[channel][length]
    std::array<std::vector<Acc>, 4> acc;
    for (auto& a : acc) a.resize(static_cast<std::size_t>(n_max) + 1);

    const WordIntegrator<Real> integrator(switching_qdd_as<Real>(n1, n2), max_depth);
    integrator.for_each_word(n_max, [&](const Word& w, const Real& value) {
        auto& a = acc[static_cast<std::size_t>(word_channel(w))][w.size()];
        ++a.words;
        const Real mag = abs_value(value);
        if (a.witness.empty() || mag > a.max_abs) {
            a.max_abs = mag;
            a.witness = w;
        }
    });

    for (int c = 1; c <= 3; ++c) {
        const int d = cert.orders[c - 1];
        for (int n = 1; n <= n_max; ++n) {
            const auto& a = acc[static_cast<std::size_t>(c)][static_cast<std::size_t>(n)];
            OrderEntry e;
            e.channel = static_cast<Channel>(c);
            e.length = n;
            e.order = d;
            e.words = a.words;
            e.max_abs = to_double(a.max_abs);
            std::ostringstream text;
            if constexpr (is_exact_v<Real>) {
                text << a.max_abs;
            } else {
                text << std::setprecision(30) << a.max_abs;
            }
            e.max_abs_text = text.str();
            e.witness = a.witness;
            const bool zero = is_exact_v<Real> ? a.max_abs == Real(0) : e.max_abs <= extended_zero_threshold;
            if (n <= d) {
                e.status = zero ? EntryStatus::vanishes : EntryStatus::violation;
            } else if (n == d + 1) {
                e.status = zero ? EntryStatus::inconclusive : EntryStatus::saturated;
            } else {
                e.status = EntryStatus::beyond;
            }
            if (zero) e.witness.clear();
            cert.violations += e.status == EntryStatus::violation;
            cert.entries.push_back(std::move(e));
        }
    }
    return cert;
}

} // namespace detail

// Checks that every word of length n <= min(n_max, d_alpha) on channel alpha
// integrates to zero for QDD_{N1,N2}, and records a nonzero witness at
// n = d_alpha + 1 when n_max reaches it. The automatic backend is exact when
// all pulse offsets are rational (orders 0, 1, 2) and extended otherwise.
inline OrderCertificate verify_claimed_orders(int n1, int n2, int n_max, const DecouplingOrders& claimed,
                                              Backend backend = Backend::automatic,
                                              int max_depth = default_max_depth) {
    require(n1 >= 0 && n2 >= 0, "QDD orders must be >= 0");
    require(n_max >= 1, "n_max must be >= 1");
    require(n_max <= max_depth,
            "n_max " + std::to_string(n_max) + " exceeds max depth " + std::to_string(max_depth));
    if (backend == Backend::automatic) {
        backend = has_rational_offsets(n1) && has_rational_offsets(n2) ? Backend::exact : Backend::extended;
    }
    if (backend == Backend::exact) {
        require(has_rational_offsets(n1) && has_rational_offsets(n2),
                "exact backend needs rational pulse offsets (orders 0, 1, 2)");
        return detail::certify<Rational>(n1, n2, n_max, backend, claimed, max_depth);
    }
    return detail::certify<Extended>(n1, n2, n_max, backend, claimed, max_depth);
}

// Certifies the tabulated decoupling orders.
inline OrderCertificate verify_orders(int n1, int n2, int n_max, Backend backend = Backend::automatic,
                                      OrderMode mode = OrderMode::analytic, int max_depth = default_max_depth) {
    return verify_claimed_orders(n1, n2, n_max, decoupling_orders(n1, n2, mode), backend, max_depth);
}

} // namespace ddbound
