#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gisurv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad flags, missing files, malformed prompt specs.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Invalid input data. Carries the 1-based line number when the error
/// originates from a line-oriented file (0 otherwise).
class DataError : public Error {
public:
    explicit DataError(const std::string &what, std::size_t line = 0)
        : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

    /// Same error with `context` (typically a file name) in front.
    DataError within(const std::string &context) const { return DataError(context + ": " + what(), line_, 0); }

    std::size_t line() const noexcept { return line_; }

private:
    DataError(const std::string &full, std::size_t line, int) : Error(full), line_(line) {}

    std::size_t line_;
};

/// Annotation backend failure (transport error, replay cache miss).
class BackendError : public Error {
public:
    using Error::Error;
};

}  // namespace gisurv
