#pragma once

#include "boltid/config.hpp"
#include "boltid/image.hpp"
#include "boltid/pipeline.hpp"
#include "boltid/threading.hpp"

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace boltid {

/// Reference dimensions of one bolt: width along the minor axis, height
/// along the major axis, both in pixels.
struct TemplateEntry {
    std::string name;
    double width_px = 0.0;
    double height_px = 0.0;
    ThreadingType threading = ThreadingType::FullThread;

    friend bool operator==(const TemplateEntry&, const TemplateEntry&) = default;
};

/// Immutable, validated set of templates plus the pixel/mm factor they
/// were measured at.
class LookupTable {
public:
    /// Throws Config on an empty list, duplicate or empty names, or
    /// non-positive dimensions or factor.
    LookupTable(std::vector<TemplateEntry> entries, double px_per_mm);

    const std::vector<TemplateEntry>& entries() const { return entries_; }
    double px_per_mm() const { return px_per_mm_; }

    friend bool operator==(const LookupTable&, const LookupTable&) = default;

private:
    std::vector<TemplateEntry> entries_;
    double px_per_mm_;
};

struct MatchResult {
    std::string name;
    std::size_t index = 0;
    double distance_px = 0.0;
    double major_mm = 0.0;
    double minor_mm = 0.0;
    bool threading_agreed = false;
    /// Distance exceeded the reject threshold; `name` still holds the
    /// nearest entry.
    bool unknown = false;
};

/// Euclidean nearest entry in (minor, major) pixel space. Entries at equal
/// distance are separated by threading agreement, then by table order.
/// `reject_frac` flags matches farther than reject_frac * major_px.
MatchResult nearest_match(const BoltFeatures& features, const LookupTable& table,
                          double reject_frac = std::numeric_limits<double>::infinity());

double px_to_mm(double px, const LookupTable& table);

struct EnrollResult {
    LookupTable table;
    /// Pairs of entries closer than 1.4 % in both dimensions.
    std::vector<std::string> warnings;
};

/// Measures one bolt per image (largest component above the configured
/// minimum area) and stores its axes and threading.
EnrollResult enroll(const std::vector<std::pair<std::string, BinaryImage>>& samples, double px_per_mm,
                    const PipelineConfig& cfg = {});

/// Entry pairs whose widths and heights both differ by less than `rel`.
std::vector<std::string> collision_warnings(const LookupTable& table, double rel = 0.014);

/// CSV: `# px_per_mm=<v>` line, header `name,width_px,height_px,threading`,
/// one entry per line, LF endings.
std::string save_table(const LookupTable& table);
LookupTable load_table(std::string_view csv);

}  // namespace boltid
