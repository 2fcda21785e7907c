#pragma once

#include <stdexcept>
#include <string>

namespace microdata {

struct DimensionMismatch : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NonFiniteInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Cholesky factorization still failed after the full jitter escalation.
struct FactorizationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EmptyModel : std::logic_error {
    using std::logic_error::logic_error;
};

struct EmptyCandidates : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyArchive : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct EmptyData : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct AlreadyStopped : std::logic_error {
    using std::logic_error::logic_error;
};

} // namespace microdata
