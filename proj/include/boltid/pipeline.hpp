#pragma once

#include "boltid/config.hpp"
#include "boltid/geometry.hpp"
#include "boltid/image.hpp"
#include "boltid/threading.hpp"

#include <optional>
#include <string>
#include <vector>

namespace boltid {

/// Upright, landscape bolt with the head on the left.
struct OrientedBolt {
    BinaryImage img;
    int major_px = 0;    // image width, the bolt length
    int head_w_px = 0;   // image height, the head width
    // Source component and the map into `img` coordinates. Lets the axes be
    // measured without the resampling error of `img`; empty when the bolt
    // was built from an upright image directly.
    std::optional<BinaryImage> source;
    Homography from_source = Homography::identity();
};

/// Warps the component upright along its minimum-area rect, turns it
/// landscape and puts the heavier half (the head) on the left.
OrientedBolt orient(const BinaryImage& component);

struct Axes {
    double major_px = 0.0;
    double minor_px = 0.0;
};

/// Major axis is the oriented width; minor axis is the narrow side of the
/// minimum-area rect around the right (threaded) half. With a source the
/// rect is fitted to source pixel centres mapped into the oriented frame,
/// and each long side is placed midway between the outermost white centre
/// and the nearest black centre beyond it.
Axes measure_axes(const OrientedBolt& bolt);

struct HeadCut {
    /// First body column (the shoulder); 0 when no shoulder was found.
    int h = 0;
    BinaryImage body;
    std::optional<BinaryImage> head;
    int thresh_used = 0;
    bool shoulder_found = true;
};

/// Binary search for the shoulder over columns [0, head_frac * l]. At a
/// probe column m the rect around columns [m, l) is compared with the head
/// width w and the body diameter d: whichever is closer decides whether the
/// head still reaches past m. The body returned starts `thresh` columns
/// after the shoulder.
HeadCut remove_head(const OrientedBolt& bolt, double minor_px, int thresh = 5, double head_frac = 0.2);

struct ThreadingVerdict {
    ThreadingType type = ThreadingType::FullThread;
    bool left_convex = false;        // test 1
    bool perimeter_jump = false;     // test 2
    bool left_filled = false;        // test 3
    double perimeter_ratio = 0.0;    // right / left
    double fill = 0.0;               // left white / (d * left width)
};

/// Three half-thread tests on the headless body split at its middle
/// column; full thread only when all three are negative.
ThreadingVerdict classify_threading(const BinaryImage& body, double minor_px, const PipelineConfig& cfg = {});

/// Scanline crossings for the pitch estimate. Crossings are the edges of
/// white runs on the scan row; `a` and `b` are the centres of the first and
/// last complete crests and `n` counts the crossings between them (two per
/// pitch interval), so pitch = (b - a) / (n / 2).
struct PitchTrace {
    double a = 0.0;
    double b = 0.0;
    int n = 0;
    double pitch_px = 0.0;
    int scan_row = 0;

    /// Applies the average-pitch formula. Throws InsufficientCrests when n < 4
    /// and Parity when n is odd.
    static PitchTrace from_crossings(double a, double b, int n);
};

/// Pitch from one scan row. White runs touching either end of the row are
/// partial crests and are skipped, as are specks under a third of the
/// median run width; runs closer than half the median crest
/// spacing are one crest, and runs wider than 1.5 spacings (fused crests)
/// are not used as a or b. Each gap between anchors counts as a whole
/// number of spacings.
PitchTrace trace_scanline(const std::uint8_t* row, int width);

/// Slices the rightmost `slice_frac` of the body, squares it up on its
/// minimum-area rect and scans the row `nudge` pixels below the top edge.
PitchTrace estimate_pitch(const BinaryImage& body, int nudge = 2, double slice_frac = 0.3);

struct BoltFeatures {
    double major_px = 0.0;
    double minor_px = 0.0;
    ThreadingType threading = ThreadingType::FullThread;
    std::optional<double> pitch_px;
    double area_px = 0.0;
    double perimeter_px = 0.0;
    double head_w_px = 0.0;
    int shoulder_px = 0;
    bool shoulder_found = true;

    friend bool operator==(const BoltFeatures&, const BoltFeatures&) = default;
};

struct StageTimings {
    double orient_ms = 0.0;
    double axes_ms = 0.0;
    double area_perimeter_ms = 0.0;
    double remove_head_ms = 0.0;
    double threading_ms = 0.0;
    double pitch_ms = 0.0;
    double total_ms = 0.0;
};

/// Full measurement chain on one isolated component. Stage failures are
/// rethrown with the stage name attached; a pitch that cannot be measured
/// (too short, too few crests) leaves `pitch_px` empty.
BoltFeatures extract_features(const BinaryImage& component, const PipelineConfig& cfg = {},
                              StageTimings* timings = nullptr);

struct FrameItem {
    Component component;
    std::optional<BoltFeatures> features;
    /// "<code> at <stage>: <message>" when measurement failed.
    std::string error;
    StageTimings timings;
};

/// Splits a frame into components (dropping those under
/// cfg.min_component_area) and measures each, in row-major rect order.
std::vector<FrameItem> analyze_frame(const BinaryImage& frame, const PipelineConfig& cfg = {});

}  // namespace boltid
