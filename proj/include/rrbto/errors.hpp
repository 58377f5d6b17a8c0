#pragma once

#include <stdexcept>
#include <string>

namespace rrbto {

/// Base class for all structured errors thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid user-supplied configuration (bad key, missing file, out-of-range value).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error("config error: " + what) {}
};

/// Violated precondition on an operation argument.
class InvalidArgument : public Error {
public:
    explicit InvalidArgument(const std::string& what) : Error("invalid argument: " + what) {}
};

/// Numerical failure: singular system, rank-deficient regression, stationary
/// limit state, non-finite intermediate value.  Never silently swallowed.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error("numerical error: " + what) {}
};

/// I/O failure while reading or writing artifacts.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error("io error: " + what) {}
};

} // namespace rrbto
