#pragma once

#include "boltid/geometry.hpp"
#include "boltid/image.hpp"
#include "boltid/threading.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace boltid::synth {

/// Nominal bolt geometry in millimetres. The bolt lies along +u with the
/// head at u = 0 and the tip at u = length_mm.
struct BoltSpec {
    std::string name;
    double length_mm = 0.0;
    double diameter_mm = 0.0;
    double head_width_mm = 0.0;
    double head_length_mm = 0.0;
    double pitch_mm = 0.0;
    double thread_depth_mm = 0.0;
    ThreadingType threading = ThreadingType::FullThread;
    double half_thread_frac = 0.38;

    /// Throws Parameter when an invariant does not hold.
    void validate() const;
    /// Start of the threaded section along the axis, in mm from the head end.
    double thread_start_mm() const;
    /// Point-in-silhouette test in the bolt frame (mm); v is measured from
    /// the axis.
    bool contains(double u, double v) const;

    friend bool operator==(const BoltSpec&, const BoltSpec&) = default;
};

constexpr double kDefaultPxPerMm = 12.42;

struct RenderParams {
    double px_per_mm = kDefaultPxPerMm;
    int canvas_w = 1200;
    int canvas_h = 1200;
    /// Bolt midpoint on the canvas, continuous pixel coordinates.
    PointF center{600.0, 600.0};
    /// Direction of the head-to-tip axis; positive angles turn clockwise as
    /// displayed (y down). 0 puts the head on the left.
    double angle_deg = 0.0;
    double noise_salt_pepper = 0.0;
    std::uint64_t seed = 0;
};

struct GroundTruth {
    BoltSpec spec;
    /// Head/body boundary in the bolt's own upright frame (column 0 = head end).
    double shoulder_column_px = 0.0;
    double major_px = 0.0;
    double minor_px = 0.0;
    double pitch_px = 0.0;
    /// White pixels in the emitted image (after noise).
    std::size_t white_count = 0;
    /// Pixels drawn for this bolt before noise.
    std::size_t bolt_pixels = 0;
    /// Tight bounds of this bolt's pixels before noise.
    AxisRect placement;
};

struct Rendered {
    BinaryImage image;
    GroundTruth truth;
};

Rendered render_bolt(const BoltSpec& spec, const RenderParams& params);

struct Placement {
    BoltSpec spec;
    PointF center;
    double angle_deg = 0.0;
};

struct Scene {
    BinaryImage image;
    std::vector<GroundTruth> truths;
};

/// Several bolts on one canvas. Bolts whose upright bounds come within two
/// pixels of each other are rejected with a Geometry error.
Scene render_scene(int canvas_w, int canvas_h, const std::vector<Placement>& bolts, double px_per_mm,
                   double noise = 0.0, std::uint64_t seed = 0);

/// Flips every pixel independently with probability `rate` in [0, 0.05].
/// Draws come from std::mt19937_64 seeded with `seed`: one 64-bit draw per
/// pixel in row-major order, flipped when (draw >> 11) * 2^-53 < rate.
BinaryImage add_noise(const BinaryImage& img, double rate, std::uint64_t seed);

/// 33 bolts: the ones named in the source study plus a metric grid.
std::vector<BoltSpec> standard_catalog();

/// Whether the entry carries dimensions quoted from the source study (as
/// opposed to the nominal synthetic grid).
bool is_documented_entry(std::string_view name);

/// Builds a spec with nominal ISO-style head, pitch and thread depth.
BoltSpec nominal_spec(std::string name, double diameter_mm, double length_mm, ThreadingType threading);

std::string save_catalog(const std::vector<BoltSpec>& specs);
std::vector<BoltSpec> load_catalog(std::string_view csv);

}  // namespace boltid::synth
