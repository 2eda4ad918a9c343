#pragma once

#include <stdexcept>
#include <string>

namespace llmkey {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration values, or missing credentials.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An argument outside its documented domain (alpha, dimensions, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

/// Trace files that cannot be read or parsed.
class IngestError : public Error {
public:
    using Error::Error;
};

/// Malformed model replies or wire data.
class ParseError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

/// All present values of a trace are equal, so it cannot be rescaled.
class DegenerateRangeError : public Error {
public:
    using Error::Error;
};

/// Network, timeout, or HTTP-level failure talking to a chat endpoint.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace llmkey
