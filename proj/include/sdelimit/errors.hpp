#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace sdelimit {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Invalid experiment configuration. `key()` is the dotted path of the offending entry.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(std::string key, const std::string& what)
        : std::invalid_argument(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Simulation request exceeds a resource limit (memory, iteration budget).
class ResourceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require_domain(bool ok, const char* msg) {
    if (!ok) throw DomainError(msg);
}
} // namespace detail

} // namespace sdelimit
