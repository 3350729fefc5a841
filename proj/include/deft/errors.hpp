#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace deft {

/// Base class for all toolkit errors. The CLI maps these to nonzero exit
/// codes with the message printed to stderr.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed row in an event log. Carries the 1-based line number.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Unrecognized format or enum token (e.g. an unknown --format value).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value or inconsistent option combination.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Feature schema mismatch between two artifacts (matrix vs means, model
/// vs row, serialized model vs expected schema).
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Key label not present in the keyboard layout.
class UnknownKeyError : public Error {
public:
    explicit UnknownKeyError(const std::string& label)
        : Error("unknown key '" + label + "'"), label_(label) {}
    const std::string& label() const { return label_; }

private:
    std::string label_;
};

/// Key pair cannot be hand-classified (non-alphabetic or unknown key).
class NotHandedError : public Error {
public:
    using Error::Error;
};

/// Training labels contain a single class where at least two are required.
class DegenerateLabelsError : public Error {
public:
    using Error::Error;
};

/// A class has too few rows for the requested stratified k-fold split.
class StratifyError : public Error {
public:
    using Error::Error;
};

/// Input directory or file yielded no usable events.
class NoDataError : public Error {
public:
    using Error::Error;
};

/// Filesystem-level failure (unreadable file, unwritable directory).
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace deft
