#pragma once

#include <stdexcept>
#include <string>

namespace cvs {

/// Base class for all pipeline errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid configuration: flags, templates, endpoints, budgets. Exit code 2.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

/// Invalid or inconsistent data: manifests, caches, benchmark files. Exit code 3.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

/// Network failure after retries are exhausted. Exit code 4.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg) : Error(msg) {}
};

/// Structurally invalid response from the inference server.
class ProtocolError : public TransportError {
public:
    explicit ProtocolError(const std::string& msg) : TransportError(msg) {}
};

}  // namespace cvs
