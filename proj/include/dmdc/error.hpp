// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dmdc {

enum class ErrorKind {
    InvalidInput,
    DegenerateMatrix,
    Shape,
    NumericalFailure,
    InsufficientData,
    TruncationOrder,
    SingularFrequency,
    Divergence,
    InvalidConfig,
    Format,
    Parse,
    Length,
    Schema,
    Io,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::DegenerateMatrix: return "degenerate-matrix";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::NumericalFailure: return "numerical-failure";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::TruncationOrder: return "truncation-order";
    case ErrorKind::SingularFrequency: return "singular-frequency";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::InvalidConfig: return "invalid-config";
    case ErrorKind::Format: return "format";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Length: return "length";
    case ErrorKind::Schema: return "schema";
    case ErrorKind::Io: return "io";
    }
    return "unknown";
}

/// Every failure raised by the library carries a kind so callers (the CLI in
/// particular) can map it onto an exit status without string matching.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + " error: " + what), kind_(kind) {}

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool condition, ErrorKind kind, const std::string& what) {
    if (!condition) fail(kind, what);
}

} // namespace dmdc
