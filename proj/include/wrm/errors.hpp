#pragma once

#include <stdexcept>
#include <string>

namespace wrm {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad user-supplied value: negative dt, sigma out of range, malformed flag.
struct ConfigError : Error {
    using Error::Error;
};

// Quantity not defined for the requested parameters (divergent moments etc.).
struct DomainError : Error {
    using Error::Error;
};

// Edge-list parsing failure; carries the 1-based line number.
struct LoadError : Error {
    LoadError(const std::string& what, long line)
        : Error(what + " (line " + std::to_string(line) + ")"), line(line) {}
    long line;
};

// Operation requires a connected network.
struct DisconnectedError : Error {
    using Error::Error;
};

// Problem size exceeds the documented hard cap.
struct CapError : Error {
    using Error::Error;
};

// Overflow, NaN, or a detected integration blow-up.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace wrm
