#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scs {

/// Invalid arguments: bad dimensions, out-of-range sizes, malformed flags.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The measured-domain Gram matrix stayed singular after jitter.
class SingularGramError : public std::runtime_error {
public:
    SingularGramError(const std::string& what, double condition)
        : std::runtime_error(what + " (condition " + std::to_string(condition) + ")"),
          condition_(condition) {}

    double condition() const noexcept { return condition_; }

private:
    double condition_;
};

/// A Monte Carlo estimate could not be formed, e.g. too many excluded draws.
class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A ratio whose denominator vanishes (for instance E|eta_K|^2 = 0).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Eigen-decomposition or factorization produced unusable values.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed file content. `offset` is the byte position where parsing failed.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

/// Reassembly found a pixel that no patch covers.
class CoverageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message) {
    if (!condition) throw ArgumentError(message);
}

}  // namespace detail
}  // namespace scs
