#pragma once

#include <stdexcept>
#include <string>

namespace caqubit {

/// Base class for every error raised by the physics modules. The CLI maps
/// these to exit code 3.
class PhysicsError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A request that cannot be represented: unknown term, unsupported manifold
/// pair, transition missing from a basis, forbidden route.
class StructuralError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

/// Argument outside the validity window of a model (e.g. field above 10 G).
class RangeError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

/// Argument outside the mathematical domain (negative Fock index, negative
/// cycle count, empty grid).
class DomainError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

/// Least-squares problem without a unique solution.
class DegenerateFitError : public PhysicsError {
public:
    using PhysicsError::PhysicsError;
};

/// Malformed or schema-violating configuration text. Carries the 1-based line
/// number of the offending entry (0 when the problem is a missing entry).
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& source, int line, const std::string& what)
        : std::runtime_error(format(source, line, what)), line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    static std::string format(const std::string& source, int line, const std::string& what) {
        std::string out = source.empty() ? std::string("config") : source;
        if (line > 0) out += ":" + std::to_string(line);
        return out + ": " + what;
    }

    int line_;
};

}  // namespace caqubit
