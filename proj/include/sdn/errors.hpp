#pragma once

#include <stdexcept>
#include <string>

namespace sdn {

/// Non-finite value produced during training or inference; carries enough
/// context (step / point) for the CLI to report and map to an exit code.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Inputs handed to evaluation are not in a consistent coordinate frame.
struct FrameMismatchError : std::runtime_error {
    explicit FrameMismatchError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace sdn
