#pragma once

#include <stdexcept>
#include <string>

namespace qstruct {

// Base class for everything this library throws on contract violations.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct SingularMatrix : Error {
    using Error::Error;
};
struct NonpositiveMass : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct GridTooSmall : Error {
    using Error::Error;
};
struct SupportEscape : Error {
    using Error::Error;
};
struct StructureMismatch : Error {
    using Error::Error;
};
struct OutsideGrid : Error {
    using Error::Error;
};
struct NodeEncounter : Error {
    using Error::Error;
};
struct TooFewSamples : Error {
    using Error::Error;
};
struct NotNormalized : Error {
    using Error::Error;
};
struct BadDensityMatrix : Error {
    using Error::Error;
};
struct QuadratureNotConverged : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct ValidationError : Error {
    using Error::Error;
};
struct IOError : Error {
    using Error::Error;
};
struct BoundaryProximity : Error {
    using Error::Error;
};

}  // namespace qstruct
