#pragma once

#include <stdexcept>
#include <string>

namespace kaleido {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Container / arithmetic errors.
struct DimensionMismatch : Error {
    using Error::Error;
};
struct InvalidArgument : Error {
    using Error::Error;
};
struct NonFinite : Error {
    using Error::Error;
};

// Circuit validation errors.
struct ForwardReference : Error {
    using Error::Error;
};
struct EmptyOutputs : Error {
    using Error::Error;
};
struct BadInputPrefix : Error {
    using Error::Error;
};
struct NonLinearCircuit : Error {
    using Error::Error;
};
struct MultiOutput : Error {
    using Error::Error;
};
struct NonSquare : Error {
    using Error::Error;
};

// Decomposition errors.
struct StepViolation : Error {
    using Error::Error;
};
struct RoutingConflict : Error {
    using Error::Error;
};
struct TooManyTriples : Error {
    using Error::Error;
};

// Training errors.
struct DivergedError : Error {
    using Error::Error;
};

// Text format errors.
struct ParseError : Error {
    using Error::Error;
};

}  // namespace kaleido
