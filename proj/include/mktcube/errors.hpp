#pragma once

#include <stdexcept>
#include <string>

namespace mktcube {

/// Bad key, bad value, or malformed experiment configuration. CLI exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A required input file or directory is absent. CLI exit code 2.
class MissingInputError : public std::runtime_error {
public:
    explicit MissingInputError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/Inf encountered where finite values are required. CLI exit code 3.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Corrupt or truncated binary file; message carries the byte offset.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace mktcube
