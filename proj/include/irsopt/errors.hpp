#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace irsopt {

// Bad caller input: non-finite entries, dimension mismatch, invalid config values.
class invalid_input : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Numerical breakdown inside a kernel (e.g. Cholesky pivot loss).
class numeric_error : public std::runtime_error {
public:
    numeric_error(const std::string& msg, std::size_t pivot)
        : std::runtime_error(msg), pivot_index(pivot) {}
    std::size_t pivot_index;
};

// Requested a configuration outside the supported regime (e.g. M < K).
class unsupported_configuration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A problem that requires a feasible starting point was given an infeasible one.
class infeasible_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace irsopt
