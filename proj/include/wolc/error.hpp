#ifndef WOLC_ERROR_HPP
#define WOLC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace wolc {

/// Base error for every failure surfaced by the library.
///
/// Messages are expected to carry enough context (file/line numbers,
/// offending indices, requested vs. available sizes) that a caller can act
/// on them without consulting the source.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Malformed or inconsistent input data (parse failures, ragged rows,
/// unknown labels, dimension mismatches).
class DataError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration or argument values (bad sizes, unknown names,
/// out-of-range parameters).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical failure inside an optimization routine.
class NumericError : public Error {
public:
    using Error::Error;
};

} // namespace wolc

#endif // WOLC_ERROR_HPP
