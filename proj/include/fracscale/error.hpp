#pragma once

#include <stdexcept>
#include <string>

namespace fracscale {

// Argument outside the mathematical domain of a function (pole, invalid
// parameter combination).
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// An iterative method (series, quadrature, bisection) did not reach its
// tolerance within the configured budget.
class convergence_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input data or configuration.
class input_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Contour/tree topology that a construction cannot handle (loops in a
// Witkin tree, tied apexes, ambiguous containment).
class topology_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace fracscale
