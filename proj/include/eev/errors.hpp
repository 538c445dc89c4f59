// Error taxonomy shared by the library and the CLI exit-code mapping.
#pragma once

#include <stdexcept>
#include <string>

namespace eev {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Shape mismatch between operands (matrix dims, track lengths, ...).
struct DimensionError : Error {
    using Error::Error;
};

// A precondition on caller-supplied values was violated.
struct InputError : Error {
    using Error::Error;
};

// A file failed to parse: bad magic, bad version, truncation, bad cell.
struct FormatError : Error {
    using Error::Error;
};

// Parsed cleanly but internally inconsistent (e.g. weight count vs config).
struct IntegrityError : Error {
    using Error::Error;
};

// Non-finite value where a finite one is required.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace eev
