#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace boltid {

enum class ErrorCode {
    Bounds,
    Format,
    EmptyInput,
    Singularity,
    DegenerateRect,
    MalformedBolt,
    InsufficientData,
    InsufficientCrests,
    Parity,
    Config,
    Enrollment,
    Geometry,
    Parameter,
};

/// Stable kebab-case name used in CLI messages and reports.
std::string_view code_name(ErrorCode code);

/// Single exception type for the library. `stage()` is filled in by the
/// pipeline when an error crosses a stage boundary.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what, std::string stage = {})
        : std::runtime_error(what), code_(code), stage_(std::move(stage)) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& stage() const noexcept { return stage_; }

    Error at_stage(std::string stage) const { return Error(code_, what(), std::move(stage)); }

private:
    ErrorCode code_;
    std::string stage_;
};

/// Format error carrying the byte offset (binary formats) or 1-based line
/// number (text formats) where parsing failed.
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::size_t position)
        : Error(ErrorCode::Format, what + " (at " + std::to_string(position) + ")"), position_(position) {}

    std::size_t position() const noexcept { return position_; }

private:
    std::size_t position_;
};

}  // namespace boltid
