#pragma once

#include <stdexcept>
#include <string>

namespace jasen {

// Base for all toolkit failures; the CLI maps subclasses to exit codes.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (schema, config, test set); message carries "origin:line".
class ParseError : public Error {
public:
    using Error::Error;
};

// A structural invariant of parsed input is violated.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Unreadable, truncated, or corrupt serialized model.
class ModelIoError : public Error {
public:
    using Error::Error;
};

}  // namespace jasen
