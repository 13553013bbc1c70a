#pragma once

#include <stdexcept>
#include <string>

namespace dynplan {

// Violated precondition inside the library (dimension mismatch and the like).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

// Bad scenario file or inconsistent agent description.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// NaN/Inf in a belief, or a degenerate reduction.
struct NumericAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw ContractViolation(what);
}

} // namespace dynplan
