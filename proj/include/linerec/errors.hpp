#pragma once

#include <stdexcept>
#include <string>

namespace linerec {

// Error taxonomy shared across the library. The CLI maps these onto exit
// codes: usage problems -> 1, data problems -> 2, file-format problems -> 3.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor extents do not line up (matmul inner dims, divisibility, ...).
struct DimensionError : Error {
    using Error::Error;
};

// A numeric or enum argument is outside its legal range.
struct ParameterError : Error {
    using Error::Error;
};

// Input data is structurally valid but semantically unusable
// (out-of-range labels, empty dev set, mismatched plan, non-finite values).
struct InputError : Error {
    using Error::Error;
};

// A serialized artifact (model, LM, image, config) cannot be parsed.
struct FormatError : Error {
    using Error::Error;
};

// A fixed-capacity resource was exceeded (decoder position window).
struct CapacityError : Error {
    using Error::Error;
};

}  // namespace linerec
