// Scalar types and sin^2 of rational multiples of pi

#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <type_traits>
#include <utility>

#include <boost/math/constants/constants.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <boost/multiprecision/cpp_int.hpp>

#include "ddbound/errors.hpp"

namespace ddbound {

using Rational = boost::multiprecision::cpp_rational;
using Extended = boost::multiprecision::cpp_bin_float_50;

// sin^2(p*pi/q) as an exact fraction, when it is rational.
//
// By Niven's theorem the only rational values of sin^2 at rational multiples
// of pi are 0, 1/4, 1/2, 3/4 and 1, reached exactly when the reduced
// denominator of p/q (mod 1) is 1, 6, 4, 3 or 2.
inline std::optional<std::pair<int, int>> rational_sin_squared(std::int64_t p, std::int64_t q) {
    require(q > 0, "rational_sin_squared: denominator must be positive");
    p %= q;
    if (p < 0) p += q;
    if (p == 0) return std::pair{0, 1};
    const std::int64_t g = std::gcd(p, q);
    switch (q / g) {
    case 2: return std::pair{1, 1};
    case 3: return std::pair{3, 4};
    case 4: return std::pair{1, 2};
    case 6: return std::pair{1, 4};
    default: return std::nullopt;
    }
}

template <class Real>
inline constexpr bool is_exact_v = std::is_same_v<Real, Rational>;

// sin^2(j*pi/(2N+2)), the UDD offset of pulse j in an order-N sequence.
// Exact whenever the value is rational; Rational callers get an
// InvalidArgument for irrational offsets.
template <class Real>
Real udd_fraction(int j, int order) {
    const std::int64_t den = 2 * static_cast<std::int64_t>(order) + 2;
    if (auto exact = rational_sin_squared(j, den)) {
        return Real(exact->first) / Real(exact->second);
    }
    if constexpr (is_exact_v<Real>) {
        throw InvalidArgument("udd_fraction: sin^2 offset is irrational for order " +
                              std::to_string(order));
    } else if constexpr (std::is_floating_point_v<Real>) {
        const Real s = std::sin(std::numbers::pi_v<Real> * static_cast<Real>(j) / static_cast<Real>(den));
        return s * s;
    } else {
        using std::sin;
        const Real angle = boost::math::constants::pi<Real>() * Real(j) / Real(den);
        const Real s = sin(angle);
        return s * s;
    }
}

// True when every offset of a UDD sequence of this order is rational
// (orders 0, 1 and 2).
inline bool has_rational_offsets(int order) {
    for (int j = 1; j <= order + 1; ++j) {
        if (!rational_sin_squared(j, 2 * static_cast<std::int64_t>(order) + 2)) return false;
    }
    return true;
}

template <class Real>
double to_double(const Real& value) {
    if constexpr (std::is_floating_point_v<Real>) {
        return static_cast<double>(value);
    } else {
        return value.template convert_to<double>();
    }
}

template <class Real>
Real abs_value(const Real& value) {
    return value < Real(0) ? Real(-value) : value;
}

} // namespace ddbound
