#pragma once

#include <stdexcept>
#include <string>

namespace wsd {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid domain data (bad spans, missing gold senses, malformed instances).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file on disk does not match its expected schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Bad or missing configuration (config file keys, CLI flags, env vars).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Network-level failure after retries were exhausted.
class TransportError : public Error {
public:
    TransportError(const std::string& msg, int attempts)
        : Error(msg), attempts_(attempts) {}
    explicit TransportError(const std::string& msg) : Error(msg), attempts_(0) {}

    int attempts() const { return attempts_; }

private:
    int attempts_;
};

/// The daily API credit budget is used up and the entry is not cached.
class BudgetExhaustedError : public Error {
public:
    using Error::Error;
};

/// A requested entry does not exist (fixture miss, unknown scripted id).
class NotFoundError : public Error {
public:
    using Error::Error;
};

} // namespace wsd
