#pragma once

#include <stdexcept>
#include <string>

namespace taylorpn {

// Evaluation outside the kernel domain ball.
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Conditioning on an index whose kernel coefficient is zero and whose noise is zero.
struct SingularModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A linear solve on a Gram or innovation matrix failed even after jitter.
struct IllConditioned : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// All residual derivatives vanish; the likelihood is unbounded in log(sigma).
struct DegenerateData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A closed-form estimate sits on (or too close to) a singular boundary.
struct Unstable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An iterative scheme exhausted its sweep budget.
struct NoConvergence : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A covariance could not be factorized even after jitter.
struct CholeskyFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A truncated series kept growing within its summation budget.
struct Diverges : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A user-supplied function produced NaN or infinity.
struct NonFinite : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad experiment configuration (unknown name, malformed override, ...).
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace taylorpn
