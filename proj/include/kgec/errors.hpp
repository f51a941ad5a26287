#pragma once

#include <stdexcept>
#include <string>

namespace kgec {

// Malformed input file (bad line, wrong field count). Message carries the
// file path and 1-based line number.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration (odd RotatE dimension, empty grids, bad densities).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Structural violation of a dataset contract (inclusion, leakage).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (dimension mismatch, negative
// Fisher entries).
struct ContractViolation : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace kgec
