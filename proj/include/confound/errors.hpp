#pragma once

#include <stdexcept>
#include <string>

namespace confound {

// Base class for all numeric/domain failures raised by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};

struct RankDeficient : Error {
    using Error::Error;
};

struct NotConverged : Error {
    using Error::Error;
};

struct Separation : Error {
    using Error::Error;
};

struct ExtremePropensity : Error {
    using Error::Error;
};

struct EmptyGroup : Error {
    using Error::Error;
};

struct ZeroVariance : Error {
    using Error::Error;
};

struct DegenerateScore : Error {
    using Error::Error;
};

struct NoBracket : Error {
    using Error::Error;
};

struct ZeroSmd : Error {
    using Error::Error;
};

struct InvalidSet : Error {
    using Error::Error;
};

struct TooFewReplicates : Error {
    using Error::Error;
};

struct SchemaMismatch : Error {
    using Error::Error;
};

struct NonPositiveLog : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

} // namespace confound
