#pragma once

#include <stdexcept>
#include <string>

namespace slotqa {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Bad CLI flags or run configuration. CLI exit code 2.
struct ConfigError : Error {
    using Error::Error;
};

/// External answerer failed: timeout, bad exit, or an answer file that does
/// not cover the emitted instance ids. CLI exit code 3.
struct AnswererError : Error {
    using Error::Error;
};

/// Invalid data: parse failures, schema violations, broken invariants in
/// input files. CLI exit code 4.
struct DataError : Error {
    using Error::Error;
};

/// Malformed record in a data file; the message carries file and line.
struct ParseError : DataError {
    using DataError::DataError;
};

/// A record references a slot or domain the schema does not define.
struct SchemaError : DataError {
    using DataError::DataError;
};

}  // namespace slotqa
