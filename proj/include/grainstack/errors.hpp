#pragma once

#include <stdexcept>
#include <string>

namespace grainstack {

// Base for every error the toolkit raises. The CLI maps the concrete type to
// an exit code (2 usage, 3 data/validation, 4 backend).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or truncated file contents.
class FormatError : public Error {
public:
    using Error::Error;
};

// Rasters whose shapes disagree with each other or with a manifest.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

// Values that violate a type invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A referenced file does not exist.
class ResolutionError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// Bad operation parameters (tile sizes, radii, thresholds...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// External similarity scorer failed or replied with garbage.
class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace grainstack
