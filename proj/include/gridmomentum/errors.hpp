#pragma once

#include <stdexcept>
#include <string>

namespace gridmomentum {

/// Raised when a case, configuration or argument violates its documented
/// contract. Carries the offending element id and field when known.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string element, std::string field, const std::string& message)
        : std::runtime_error(format(element, field, message)),
          element_(std::move(element)),
          field_(std::move(field)) {}

    explicit ValidationError(const std::string& message)
        : std::runtime_error(message) {}

    const std::string& element() const noexcept { return element_; }
    const std::string& field() const noexcept { return field_; }

private:
    static std::string format(const std::string& element, const std::string& field,
                              const std::string& message) {
        std::string out;
        if (!element.empty()) out += element;
        if (!field.empty()) out += (out.empty() ? "" : ".") + field;
        if (!out.empty()) out += ": ";
        return out + message;
    }

    std::string element_;
    std::string field_;
};

/// Raised by solvers and integrators when the numerics fail
/// (divergence, singular systems, non-finite states, fit breakdown).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gridmomentum
