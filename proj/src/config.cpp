#include "boltid/config.hpp"

#include "boltid/error.hpp"
#include "text.hpp"

#include <cmath>

namespace boltid {

ThresholdMethod PipelineConfig::threshold_method() const {
    if (threshold == "otsu") return Otsu{};
    const auto level = text::parse_int<int>(threshold);
    if (!level || *level < 0 || *level > 255)
        throw Error(ErrorCode::Config, "threshold must be 'otsu' or an integer in [0,255]");
    return FixedLevel{*level};
}

void PipelineConfig::validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::Config, why); };
    if (thresh < 0) fail("thresh must be >= 0");
    if (nudge < 0) fail("nudge must be >= 0");
    if (!(perim_ratio > 0.0)) fail("perim_ratio must be positive");
    if (!(fill_frac > 0.0 && fill_frac <= 1.0)) fail("fill_frac must be in (0,1]");
    if (!(head_frac > 0.0 && head_frac < 1.0)) fail("head_frac must be in (0,1)");
    if (!(thread_slice_frac > 0.0 && thread_slice_frac <= 1.0)) fail("thread_slice_frac must be in (0,1]");
    if (!(min_pitch_len_px >= 0.0)) fail("min_pitch_len_px must be >= 0");
    if (!(convex_tol >= 0.0)) fail("convex_tol must be >= 0");
    if (!(reject_frac > 0.0)) fail("reject_frac must be positive");
    if (!(px_per_mm >= 0.0) || !std::isfinite(px_per_mm)) fail("px_per_mm must be >= 0");
    threshold_method();
}

const std::vector<std::string_view>& config_keys() {
    static const std::vector<std::string_view> keys = {
        "thresh",           "nudge",      "perim_ratio", "fill_frac",  "head_frac", "thread_slice_frac",
        "min_pitch_len_px", "min_component_area", "convex_tol", "reject_frac", "px_per_mm", "threshold"};
    return keys;
}

namespace {

double need_double(std::string_view key, std::string_view value) {
    if (value == "inf") return std::numeric_limits<double>::infinity();
    const auto v = text::parse_double(value);
    if (!v) throw Error(ErrorCode::Config, "config key '" + std::string(key) + "': not a number: " + std::string(value));
    return *v;
}

template <typename Int>
Int need_int(std::string_view key, std::string_view value) {
    const auto v = text::parse_int<Int>(value);
    if (!v) throw Error(ErrorCode::Config, "config key '" + std::string(key) + "': not an integer: " + std::string(value));
    return *v;
}

std::string format_value(double v) { return std::isinf(v) ? "inf" : text::format_double(v); }

}  // namespace

void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value) {
    value = text::trim(value);
    if (key == "thresh") cfg.thresh = need_int<int>(key, value);
    else if (key == "nudge") cfg.nudge = need_int<int>(key, value);
    else if (key == "perim_ratio") cfg.perim_ratio = need_double(key, value);
    else if (key == "fill_frac") cfg.fill_frac = need_double(key, value);
    else if (key == "head_frac") cfg.head_frac = need_double(key, value);
    else if (key == "thread_slice_frac") cfg.thread_slice_frac = need_double(key, value);
    else if (key == "min_pitch_len_px") cfg.min_pitch_len_px = need_double(key, value);
    else if (key == "min_component_area") cfg.min_component_area = need_int<std::size_t>(key, value);
    else if (key == "convex_tol") cfg.convex_tol = need_double(key, value);
    else if (key == "reject_frac") cfg.reject_frac = need_double(key, value);
    else if (key == "px_per_mm") cfg.px_per_mm = need_double(key, value);
    else if (key == "threshold") cfg.threshold = std::string(value);
    else throw Error(ErrorCode::Config, "unknown config key '" + std::string(key) + "'");
}

PipelineConfig parse_config(std::string_view doc) {
    PipelineConfig cfg;
    const auto rows = text::lines(doc);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        auto line = text::trim(rows[i]);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw Error(ErrorCode::Config, "config line " + std::to_string(i + 1) + ": expected key=value");
        set_config_value(cfg, text::trim(line.substr(0, eq)), line.substr(eq + 1));
    }
    cfg.validate();
    return cfg;
}

std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg) {
    return {
        {"thresh", std::to_string(cfg.thresh)},
        {"nudge", std::to_string(cfg.nudge)},
        {"perim_ratio", format_value(cfg.perim_ratio)},
        {"fill_frac", format_value(cfg.fill_frac)},
        {"head_frac", format_value(cfg.head_frac)},
        {"thread_slice_frac", format_value(cfg.thread_slice_frac)},
        {"min_pitch_len_px", format_value(cfg.min_pitch_len_px)},
        {"min_component_area", std::to_string(cfg.min_component_area)},
        {"convex_tol", format_value(cfg.convex_tol)},
        {"reject_frac", format_value(cfg.reject_frac)},
        {"px_per_mm", format_value(cfg.px_per_mm)},
        {"threshold", cfg.threshold},
    };
}

std::string serialize_config(const PipelineConfig& cfg) {
    std::string out;
    for (const auto& [k, v] : config_entries(cfg)) out += k + "=" + v + "\n";
    return out;
}

}  // namespace boltid
