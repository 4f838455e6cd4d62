#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace glimmer {

// Base of every library error. The CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data problems (CSV layout, bad rows, ordering, splits).
class DataError : public Error {
public:
    using Error::Error;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class RowError : public DataError {
public:
    RowError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class OrderingError : public DataError {
public:
    OrderingError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class SplitError : public DataError {
public:
    using DataError::DataError;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

// Non-finite value met during a forward pass or training.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what, long epoch = -1)
        : Error(epoch >= 0 ? "epoch " + std::to_string(epoch) + ": " + what : what),
          epoch_(epoch) {}
    long epoch() const noexcept { return epoch_; }

private:
    long epoch_;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class VersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CorruptCheckpointError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

// Operation invoked on an object in the wrong state (e.g. unevaluated GA individual).
class StateError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace glimmer
