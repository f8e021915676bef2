#pragma once

#include <stdexcept>
#include <string>

namespace datadiet {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes of two operands do not agree.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A file on disk does not follow the expected binary or text layout.
class FormatError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

/// Bad user-supplied configuration. The CLI maps this to exit code 2.
class ValidationError : public Error {
public:
    using Error::Error;
};

} // namespace datadiet
