#pragma once

#include <stdexcept>
#include <string>

namespace timebin {

// Error taxonomy used across the library. The C API maps these onto
// coarse status codes; C++ callers can catch the specific type.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidDimension : Error {
    using Error::Error;
};

struct InvalidCalibration : Error {
    using Error::Error;
};

struct InvalidOutcome : Error {
    using Error::Error;
};

struct ContractViolation : Error {
    using Error::Error;
};

struct InsufficientData : Error {
    using Error::Error;
};

struct UnalignableEpoch : Error {
    using Error::Error;
};

struct DegenerateParameterization : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct NotConverged : Error {
    using Error::Error;
};

}  // namespace timebin
