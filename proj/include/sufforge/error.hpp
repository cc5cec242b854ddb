#pragma once

#include <stdexcept>
#include <string>

namespace sufforge {

// Base of every error raised by the library. The CLI maps each subclass to a
// distinct exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class EncodingError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class IngestError : public Error {
public:
    using Error::Error;
};

class TransportError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// Store item failures and group overflow inside a run.
class PipelineError : public Error {
public:
    using Error::Error;
};

class VerifyMismatch : public Error {
public:
    using Error::Error;
};

} // namespace sufforge
