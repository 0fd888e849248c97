#pragma once

#include <stdexcept>
#include <string>

namespace leaklab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IndexError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class MetadataError : public Error {
public:
    using Error::Error;
};

class DonorMissingError : public Error {
public:
    using Error::Error;
};

class ClassCoverageError : public Error {
public:
    using Error::Error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(int epoch, const std::string& what)
        : Error(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

/// An experiment run broke its own audit contract (clean run leaked, or a
/// leaky run left no trace). Indicates a bug, never a data problem.
class AuditInvariantError : public Error {
public:
    using Error::Error;
};

}  // namespace leaklab
