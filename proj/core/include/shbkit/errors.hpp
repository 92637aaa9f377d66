#pragma once

#include <stdexcept>
#include <string>

namespace shbkit {

// Invalid inputs: bad parameters, malformed config/CSV, violated preconditions.
// CLI maps this to exit status 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical failures: non-convergence, step-control breakdown, diverging
// integrals. CLI maps this to exit status 2.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace shbkit
