#include "boltid/error.hpp"

namespace boltid {

std::string_view code_name(ErrorCode code) {
    switch (code) {
    case ErrorCode::Bounds: return "bounds";
    case ErrorCode::Format: return "format";
    case ErrorCode::EmptyInput: return "empty-input";
    case ErrorCode::Singularity: return "singularity";
    case ErrorCode::DegenerateRect: return "degenerate-rect";
    case ErrorCode::MalformedBolt: return "malformed-bolt";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::InsufficientCrests: return "insufficient-crests";
    case ErrorCode::Parity: return "parity";
    case ErrorCode::Config: return "config";
    case ErrorCode::Enrollment: return "enrollment";
    case ErrorCode::Geometry: return "geometry";
    case ErrorCode::Parameter: return "parameter";
    }
    return "unknown";
}

}  // namespace boltid
