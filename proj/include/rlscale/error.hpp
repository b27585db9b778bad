#pragma once

#include <stdexcept>
#include <string>

namespace rlscale {

// Error categories map one-to-one onto CLI exit codes and C API status values:
// usage=1, data=2, numeric=3, io=4.
enum class ErrorKind { usage = 1, data = 2, numeric = 3, io = 4 };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Invalid arguments, out-of-range configuration, malformed requests.
class UsageError : public Error {
public:
    explicit UsageError(std::string m) : Error(ErrorKind::usage, std::move(m)) {}
};

// Inconsistent or malformed data: bad log lines, mismatched group shapes,
// degenerate fit inputs.
class DataError : public Error {
public:
    explicit DataError(std::string m) : Error(ErrorKind::data, std::move(m)) {}
};

// A request that exceeds what a generator or dataset can supply.
class CapacityError : public DataError {
public:
    explicit CapacityError(std::string m) : DataError(std::move(m)) {}
};

// Non-finite losses or gradients during training.
class NumericError : public Error {
public:
    explicit NumericError(std::string m) : Error(ErrorKind::numeric, std::move(m)) {}
};

class IoError : public Error {
public:
    explicit IoError(std::string m) : Error(ErrorKind::io, std::move(m)) {}
};

} // namespace rlscale
