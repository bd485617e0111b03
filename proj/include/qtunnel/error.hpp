#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qtunnel {

enum class ErrorCode {
    Domain,
    Parity,
    Size,
    Monostable,
    NoBarrier,
    NoPeriodicInstanton,
    NonConverged,
    Tolerance,
    Degenerate,
    InsufficientData,
    UnsupportedModel,
    Config,
    Io,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code. Thrown by every module.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace qtunnel
