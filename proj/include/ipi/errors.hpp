#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace ipi {

/// Bad input: out-of-range indices, malformed instances, invalid options.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Factorization failure or non-finite arithmetic where none is expected.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request that would exceed a configured memory or size cap.
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operation not defined for the given problem (e.g. grid export of a non-grid MDP).
class UnsupportedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed binary matrix file. `offset()` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

} // namespace ipi
