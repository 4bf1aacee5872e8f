#pragma once

#include <stdexcept>
#include <string>

namespace vpstab {

/// Raised when a numeric procedure fails to converge or produces an
/// inconsistent result; the message carries the offending quantities.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on invalid user-facing configuration (parameter ranges, schema).
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace vpstab
