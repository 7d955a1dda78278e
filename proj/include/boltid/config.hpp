#pragma once

#include "boltid/image.hpp"

#include <cstddef>
#include <limits>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace boltid {

/// Tunables for the measurement chain and identification. Serialized as a
/// flat `key=value` document, one pair per line, `#` starts a comment.
struct PipelineConfig {
    /// Extra head-side columns dropped beyond the detected shoulder.
    int thresh = 5;
    /// Rows the pitch scan line sits below the slice's top edge.
    int nudge = 2;
    double perim_ratio = 1.15;
    double fill_frac = 0.97;
    double head_frac = 0.2;
    double thread_slice_frac = 0.3;
    double min_pitch_len_px = 200.0;
    std::size_t min_component_area = 50;
    double convex_tol = 1.5;
    /// Identification rejects matches farther than this fraction of the
    /// query's major axis; infinity disables the check.
    double reject_frac = 0.1;
    /// 0 means "not configured"; reports then omit millimetre values.
    double px_per_mm = 0.0;
    /// "otsu" or an integer level in [0, 255].
    std::string threshold = "otsu";

    ThresholdMethod threshold_method() const;
    /// Throws Config on out-of-range values.
    void validate() const;

    friend bool operator==(const PipelineConfig&, const PipelineConfig&) = default;
};

/// Every key accepted by `set_config_value`, in serialization order.
const std::vector<std::string_view>& config_keys();

/// Sets one key from its text form. Throws Config on unknown keys or bad values.
void set_config_value(PipelineConfig& cfg, std::string_view key, std::string_view value);

PipelineConfig parse_config(std::string_view text);
std::string serialize_config(const PipelineConfig& cfg);
std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg);

}  // namespace boltid
