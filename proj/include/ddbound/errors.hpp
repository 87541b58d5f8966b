// Exception types shared by all ddbound modules

#pragma once

#include <stdexcept>
#include <string>

namespace ddbound {

// Rejected input: bad orders, out-of-range parameters, malformed density matrices.
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A Taylor tail hit its term cap or overflowed before reaching the tolerance.
struct NonConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Linear-algebra failure (eigensolver did not converge, non-finite matrix).
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) throw InvalidArgument(message);
}

} // namespace ddbound
