#pragma once

#include <stdexcept>
#include <string>

namespace hysnet {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shape or extent mismatch between tensors / layers.
struct DimError : Error {
    using Error::Error;
};

// Invalid or inconsistent configuration (model, CLI flags, file params).
struct ConfigError : Error {
    using Error::Error;
};

// API precondition violated by the caller.
struct ContractError : Error {
    using Error::Error;
};

// Non-finite values, non-convergence, aborted numeric procedures.
struct NumericError : Error {
    using Error::Error;
};

// Malformed files (HVOL, HCKP, manifests).
struct FormatError : Error {
    using Error::Error;
};

// Structurally valid file with invalid content (NaN voxels, bad scores).
struct DataError : Error {
    using Error::Error;
};

// Correlation metrics requested on degenerate input (constant series).
struct UndefinedMetricError : Error {
    using Error::Error;
};

}  // namespace hysnet
