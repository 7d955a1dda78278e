#pragma once

#include <optional>
#include <string_view>

namespace boltid {

enum class ThreadingType { FullThread, HalfThread };

/// "FT" / "HT", the short forms used in bolt names and CSV files.
constexpr std::string_view short_name(ThreadingType t) { return t == ThreadingType::FullThread ? "FT" : "HT"; }

constexpr std::optional<ThreadingType> parse_threading(std::string_view s) {
    if (s == "FT") return ThreadingType::FullThread;
    if (s == "HT") return ThreadingType::HalfThread;
    return std::nullopt;
}

}  // namespace boltid
