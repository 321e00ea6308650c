#pragma once

#include <stdexcept>
#include <string>

namespace grapheme {

/// Invalid or conflicting configuration (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Failure while a run is in progress (CLI exit code 2).
class RuntimeFailure : public std::runtime_error {
public:
    explicit RuntimeFailure(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace grapheme
