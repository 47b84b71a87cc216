#pragma once

#include <stdexcept>
#include <string>

namespace wp {

// Bad runtime arguments (unknown symbol, mismatched sizes, out-of-range query).
struct input_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed specification documents or configuration (partial tables, k < 2, ...).
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An exact computation whose cost guard was exceeded; the message names the
// Monte Carlo alternative where one exists.
struct feasibility_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Hard resource caps (tree node budget and the like).
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operation invoked on an object in the wrong state (e.g. core extraction
// before the message passing run reached a fixed point).
struct state_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Rejection sampling exhausted its attempt budget.
struct conditioning_error : std::runtime_error {
    conditioning_error(const std::string& what, double acceptance_rate)
        : std::runtime_error(what), acceptance_rate(acceptance_rate) {}
    double acceptance_rate;
};

// Iterative numerics failed to converge within their step cap.
struct numerical_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wp
