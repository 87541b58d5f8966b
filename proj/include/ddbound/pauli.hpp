// Pauli matrices, m-qubit Pauli strings and their product table

#pragma once

#include <complex>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "ddbound/errors.hpp"

namespace ddbound {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

// 0 = I, 1 = X, 2 = Y, 3 = Z.
inline Matrix pauli(int a) {
    require(a >= 0 && a <= 3, "Pauli index must lie in 0..3");
    const Complex i(0.0, 1.0);
    Matrix s(2, 2);
    switch (a) {
    case 0: s << 1, 0, 0, 1; break;
    case 1: s << 0, 1, 1, 0; break;
    case 2: s << 0, -i, i, 0; break;
    default: s << 1, 0, 0, -1; break;
    }
    return s;
}

inline Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c)
            out.block(r * b.rows(), c * b.cols(), b.rows(), b.cols()) = a(r, c) * b;
    return out;
}

inline std::size_t pauli_label_count(int m) { return std::size_t{1} << (2 * m); }

// Digit of qubit q in a base-4 label (qubit 0 most significant).
inline int pauli_digit(std::size_t label, int m, int q) {
    return static_cast<int>((label >> (2 * (m - 1 - q))) & 3u);
}

inline std::string pauli_string(std::size_t label, int m) {
    std::string s;
    for (int q = 0; q < m; ++q) s += "IXYZ"[pauli_digit(label, m, q)];
    return s;
}

// sigma_{mu_0} (x) sigma_{mu_1} (x) ... on 2^m dimensions.
inline Matrix pauli_string_matrix(std::size_t label, int m) {
    Matrix out = Matrix::Identity(1, 1);
    for (int q = 0; q < m; ++q) out = kron(out, pauli(pauli_digit(label, m, q)));
    return out;
}

struct PauliProduct {
    Complex phase;
    std::size_t label;
};

// sigma_a sigma_b = phase * sigma_c for single-qubit indices.
inline PauliProduct pauli_product_1(int a, int b) {
    const Complex i(0.0, 1.0);
    if (a == 0) return {1.0, static_cast<std::size_t>(b)};
    if (b == 0 || a == b) return {1.0, static_cast<std::size_t>(a == b ? 0 : a)};
    const int c = 6 - a - b;
    // cyclic (1,2), (2,3), (3,1) give +i
    const bool cyclic = (b - a + 3) % 3 == 1;
    return {cyclic ? i : -i, static_cast<std::size_t>(c)};
}

inline PauliProduct pauli_product(std::size_t a, std::size_t b, int m) {
    PauliProduct out{1.0, 0};
    for (int q = 0; q < m; ++q) {
        const auto p = pauli_product_1(pauli_digit(a, m, q), pauli_digit(b, m, q));
        out.phase *= p.phase;
        out.label = out.label * 4 + p.label;
    }
    return out;
}

} // namespace ddbound
