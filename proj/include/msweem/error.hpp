#pragma once

#include <stdexcept>
#include <string>

namespace msweem {

// Base class for all toolkit errors. Subclasses distinguish recoverable
// input problems (schema, row, argument) from contract and math failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input table is missing a declared column or has a malformed header.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A single data row is malformed; carries the 1-based line number.
class RowError : public Error {
public:
    RowError(std::size_t line, const std::string& msg)
        : Error("line " + std::to_string(line) + ": " + msg), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_ = 0;
};

// A function precondition on its arguments was violated.
class ArgumentError : public Error {
public:
    using Error::Error;
};

// Statistics required by an operation are degenerate (zero variance,
// zero maximum, single-class labels, ...).
class DegenerateError : public Error {
public:
    using Error::Error;
};

// Optimization failed: non-finite loss, divergence, separation.
class TrainingError : public Error {
public:
    using Error::Error;
};

// A trained model was used inconsistently with how it was built
// (dimension mismatch, wrong encoding stage, unknown item).
class ModelError : public Error {
public:
    using Error::Error;
};

// Run configuration is invalid; message names the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

// An internal invariant failed (signals a math bug, not bad input).
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace msweem
