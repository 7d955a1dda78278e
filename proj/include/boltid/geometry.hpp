#pragma once

#include "boltid/image.hpp"

#include <array>
#include <span>
#include <vector>

namespace boltid {

struct PointF {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const PointF&, const PointF&) = default;
};

inline PointF operator+(PointF a, PointF b) { return {a.x + b.x, a.y + b.y}; }
inline PointF operator-(PointF a, PointF b) { return {a.x - b.x, a.y - b.y}; }
inline PointF operator*(double s, PointF a) { return {s * a.x, s * a.y}; }
inline double dot(PointF a, PointF b) { return a.x * b.x + a.y * b.y; }
inline double cross(PointF a, PointF b) { return a.x * b.y - a.y * b.x; }

/// Closed outer boundary of one white component. Consecutive points are
/// 8-neighbours; traversal has positive signed area in (x, y-down)
/// coordinates, i.e. it runs rightwards along the top edge first.
struct Contour {
    std::vector<PixelPoint> points;

    std::size_t size() const { return points.size(); }
    bool empty() const { return points.empty(); }
};

/// Rectangle at arbitrary orientation in continuous image coordinates,
/// where pixel (x, y) covers [x, x+1) x [y, y+1).
///
/// `angle_deg` lies in [-90, 0) and is the direction of the edge of length
/// `size_w`; the edge of length `size_h` runs along angle_deg + 90.
struct RotatedRect {
    PointF center;
    double size_w = 0.0;
    double size_h = 0.0;
    double angle_deg = -90.0;

    double area() const { return size_w * size_h; }
    /// Corners in order: c - u - v, c + u - v, c + u + v, c - u + v where
    /// u, v are the half-edge vectors along the width and height edges.
    std::array<PointF, 4> corners() const;
    bool contains(PointF p, double tol = 0.0) const;
};

/// Builds a normalized RotatedRect from an edge direction (any angle) and
/// the extents along that direction and its perpendicular.
RotatedRect make_rotated_rect(PointF center, double along, double across, double direction_deg);

/// Traces the outer boundary (Moore-neighbour following) of the first
/// white component in row-major order, starting at its topmost-leftmost
/// pixel. Holes are ignored.
Contour trace_contour(const BinaryImage& img);

/// Closed-loop length: 1 per axial step, sqrt(2) per diagonal step.
double arc_length(const Contour& c);

/// Counter-clockwise (positive signed area) hull with collinear points
/// removed. Collinear input yields the two extremes; a single point yields
/// itself.
std::vector<PointF> convex_hull(std::span<const PointF> points);

/// Minimum-area enclosing rectangle of a point set (rotating calipers over
/// the hull). Degenerate inputs produce zero-size edges.
RotatedRect min_area_rect(std::span<const PointF> points);

/// Minimum-area rectangle of a contour with pixels treated as unit squares:
/// calipers run on pixel centres and each edge is widened by one pixel, so
/// a single pixel gives size (1, 1) and a solid w x h block gives (w, h).
RotatedRect min_area_rect(const Contour& c);

/// Same rectangle as min_area_rect(trace_contour(img)) for a single
/// component, computed from per-column white extremes (the hull of a pixel
/// set only depends on those). Also accepts several components.
RotatedRect min_area_rect_of_white(const BinaryImage& img);

/// Convex within `tol` pixels: every contour point lies within `tol` of the
/// boundary of the contour's convex hull. Fewer than three distinct points
/// count as convex.
bool is_contour_convex(const Contour& c, double tol = 1.5);

/// Projective map, row-major, normalized so m[2][2] == 1.
struct Homography {
    std::array<std::array<double, 3>, 3> m{};

    static Homography identity();
    PointF apply(PointF p) const;
};

/// Exact projective map sending src[i] to dst[i]. Throws Singularity when
/// either quad has three collinear corners.
Homography homography_from_quad(const std::array<PointF, 4>& src, const std::array<PointF, 4>& dst);

/// Output grid of `warp_to_upright`: its size and the maps between source
/// and output coordinates (continuous, pixel (x, y) covers [x, x+1)).
struct UprightFrame {
    int width = 0;
    int height = 0;
    Homography to_frame;
    Homography from_frame;
};

UprightFrame upright_frame(const RotatedRect& r);

/// Resamples the content of `r` into an upright image of round(edge) x
/// round(edge) pixels, nearest-neighbour, black outside the source. Of the
/// rect's two edge directions the one closest to the +x axis becomes the
/// output x axis, so an axis-aligned rect reproduces a plain crop.
BinaryImage warp_to_upright(const BinaryImage& img, const RotatedRect& r);

}  // namespace boltid
