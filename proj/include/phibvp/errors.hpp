#pragma once

#include <stdexcept>
#include <string>

namespace phibvp {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid problem data or parameters (bad exponents, unordered envelopes,
/// mesh mismatches, malformed input files).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// A mathematical operation was evaluated outside its domain
/// (log of a non-positive value, a pole sampled, a point outside [a,b]).
class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(msg) {}
};

/// A numerical procedure could not complete: divergence test failed,
/// root bracket not found, iteration cap exceeded.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace phibvp
