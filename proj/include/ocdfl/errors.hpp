#pragma once

#include <stdexcept>
#include <string>

namespace ocdfl {

/// Argument outside the mathematical domain of a formula (e.g. d <= 0 in Friis).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed input file (IDX, checkpoint, instance dump).
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration value or unknown key.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Parameter vectors with incompatible layouts.
class LayoutError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Training produced a non-finite value.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace ocdfl

namespace ocdfl {

/// Caller passed models in the wrong performance order.
class OrderingError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

} // namespace ocdfl
