#include "boltid/geometry.hpp"

#include "boltid/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace boltid {

namespace {

constexpr double kDegPerRad = 180.0 / std::numbers::pi;

// Clockwise as displayed (y down), starting west.
constexpr std::array<PixelPoint, 8> kRing = {{{-1, 0}, {-1, -1}, {0, -1}, {1, -1}, {1, 0}, {1, 1}, {0, 1}, {-1, 1}}};

int ring_index(int dx, int dy) {
    static constexpr std::array<int, 9> table = {1, 0, 7, 2, -1, 6, 3, 4, 5};  // [(dx+1)*3 + (dy+1)]
    return table[static_cast<std::size_t>((dx + 1) * 3 + (dy + 1))];
}

PointF pixel_center(PixelPoint p) { return {p.x + 0.5, p.y + 0.5}; }

double norm(PointF p) { return std::hypot(p.x, p.y); }

double segment_distance(PointF p, PointF a, PointF b) {
    const PointF ab = b - a;
    const double len2 = dot(ab, ab);
    double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

}  // namespace

std::array<PointF, 4> RotatedRect::corners() const {
    const double a = angle_deg / kDegPerRad;
    const PointF u{std::cos(a) * size_w / 2.0, std::sin(a) * size_w / 2.0};
    const PointF v{-std::sin(a) * size_h / 2.0, std::cos(a) * size_h / 2.0};
    return {center - u - v, center + u - v, center + u + v, center - u + v};
}

bool RotatedRect::contains(PointF p, double tol) const {
    const double a = angle_deg / kDegPerRad;
    const PointF u{std::cos(a), std::sin(a)};
    const PointF v{-u.y, u.x};
    const PointF d = p - center;
    return std::abs(dot(d, u)) <= size_w / 2.0 + tol && std::abs(dot(d, v)) <= size_h / 2.0 + tol;
}

RotatedRect make_rotated_rect(PointF center, double along, double across, double direction_deg) {
    double a = std::fmod(direction_deg, 180.0);
    if (a < -90.0) a += 180.0;
    if (a >= 90.0) a -= 180.0;
    if (a >= 0.0) return {center, across, along, a - 90.0};
    return {center, along, across, a};
}

Contour trace_contour(const BinaryImage& img) {
    auto white = [&](int x, int y) { return img.contains(x, y) && img.at(x, y); };

    PixelPoint start{-1, -1};
    for (int y = 0; y < img.height() && start.x < 0; ++y) {
        const std::uint8_t* r = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            if (r[x]) {
                start = {x, y};
                break;
            }
        }
    }
    if (start.x < 0) throw Error(ErrorCode::EmptyInput, "trace_contour: image has no white pixels");

    Contour c;
    c.points.push_back(start);

    PixelPoint p = start;
    int backtrack = 0;  // west of the start pixel is black (start is leftmost in its row)
    PixelPoint first_step{-1, -1};
    const std::size_t guard = 4 * static_cast<std::size_t>(img.width()) * img.height() + 8;
    for (std::size_t steps = 0; steps < guard; ++steps) {
        int found = -1;
        for (int k = 1; k <= 8; ++k) {
            const int idx = (backtrack + k) % 8;
            if (white(p.x + kRing[idx].x, p.y + kRing[idx].y)) {
                found = idx;
                break;
            }
        }
        if (found < 0) return c;  // isolated pixel

        const PixelPoint q{p.x + kRing[found].x, p.y + kRing[found].y};
        const PixelPoint prev = kRing[(found + 7) % 8];
        if (p == start) {
            if (first_step.x < 0) {
                first_step = q;
            } else if (q == first_step) {
                c.points.pop_back();  // start was appended on re-entry
                return c;
            }
        }
        backtrack = ring_index(p.x + prev.x - q.x, p.y + prev.y - q.y);
        p = q;
        c.points.push_back(p);
    }
    return c;
}

double arc_length(const Contour& c) {
    if (c.size() < 2) return 0.0;
    double len = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        const PixelPoint a = c.points[i];
        const PixelPoint b = c.points[(i + 1) % c.size()];
        const bool diagonal = a.x != b.x && a.y != b.y;
        len += diagonal ? std::numbers::sqrt2 : 1.0;
    }
    return len;
}

std::vector<PointF> convex_hull(std::span<const PointF> points) {
    if (points.empty()) throw Error(ErrorCode::EmptyInput, "convex_hull: no points");
    std::vector<PointF> pts(points.begin(), points.end());
    std::sort(pts.begin(), pts.end(), [](PointF a, PointF b) { return a.x != b.x ? a.x < b.x : a.y < b.y; });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;

    // Andrew's monotone chain; strict turns drop collinear points.
    std::vector<PointF> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        const PointF p = pts[i];
        while (k >= lower && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
        hull[k++] = p;
    }
    hull.resize(k - 1);
    if (hull.size() < 2) hull = {pts.front(), pts.back()};
    return hull;
}

RotatedRect min_area_rect(std::span<const PointF> points) {
    const auto hull = convex_hull(points);
    const std::size_t n = hull.size();
    if (n == 1) return make_rotated_rect(hull[0], 0.0, 0.0, 0.0);
    if (n == 2) {
        const PointF d = hull[1] - hull[0];
        return make_rotated_rect(0.5 * (hull[0] + hull[1]), norm(d), 0.0, std::atan2(d.y, d.x) * kDegPerRad);
    }

    auto next = [n](std::size_t i) { return (i + 1) % n; };

    double best_area = std::numeric_limits<double>::infinity();
    RotatedRect best;
    std::size_t right = 0, far = 0, left = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const PointF e = hull[next(i)] - hull[i];
        const double len = norm(e);
        if (len == 0.0) continue;
        const PointF u = (1.0 / len) * e;
        const PointF inward{-u.y, u.x};

        if (i == 0) {
            right = far = left = 0;
            for (std::size_t j = 1; j < n; ++j) {
                if (dot(hull[j], u) > dot(hull[right], u)) right = j;
                if (dot(hull[j], inward) > dot(hull[far], inward)) far = j;
                if (dot(hull[j], u) < dot(hull[left], u)) left = j;
            }
        } else {
            // Calipers only move forward around a convex polygon.
            while (dot(hull[next(right)], u) > dot(hull[right], u)) right = next(right);
            while (dot(hull[next(far)], inward) > dot(hull[far], inward)) far = next(far);
            while (dot(hull[next(left)], u) < dot(hull[left], u)) left = next(left);
        }

        const double lo_u = dot(hull[left], u);
        const double hi_u = dot(hull[right], u);
        const double lo_n = dot(hull[i], inward);
        const double hi_n = dot(hull[far], inward);
        const double area = (hi_u - lo_u) * (hi_n - lo_n);
        if (area < best_area) {
            best_area = area;
            const PointF c = (0.5 * (lo_u + hi_u)) * u + (0.5 * (lo_n + hi_n)) * inward;
            best = make_rotated_rect(c, hi_u - lo_u, hi_n - lo_n, std::atan2(u.y, u.x) * kDegPerRad);
        }
    }
    return best;
}

namespace {

RotatedRect widen_by_pixel(RotatedRect r) {
    r.size_w += 1.0;
    r.size_h += 1.0;
    return r;
}

}  // namespace

RotatedRect min_area_rect(const Contour& c) {
    if (c.empty()) throw Error(ErrorCode::EmptyInput, "min_area_rect: empty contour");
    std::vector<PointF> pts;
    pts.reserve(c.size());
    for (const auto& p : c.points) pts.push_back(pixel_center(p));
    return widen_by_pixel(min_area_rect(pts));
}

RotatedRect min_area_rect_of_white(const BinaryImage& img) {
    std::vector<int> top(static_cast<std::size_t>(img.width()), -1);
    std::vector<int> bottom(static_cast<std::size_t>(img.width()), -1);
    for (int y = 0; y < img.height(); ++y) {
        const std::uint8_t* r = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            if (!r[x]) continue;
            if (top[x] < 0) top[x] = y;
            bottom[x] = y;
        }
    }
    std::vector<PointF> pts;
    for (int x = 0; x < img.width(); ++x) {
        if (top[x] < 0) continue;
        pts.push_back(pixel_center({x, top[x]}));
        if (bottom[x] != top[x]) pts.push_back(pixel_center({x, bottom[x]}));
    }
    if (pts.empty()) throw Error(ErrorCode::EmptyInput, "min_area_rect: image has no white pixels");
    return widen_by_pixel(min_area_rect(pts));
}

bool is_contour_convex(const Contour& c, double tol) {
    std::vector<PointF> pts;
    pts.reserve(c.size());
    for (const auto& p : c.points) pts.push_back(pixel_center(p));
    if (pts.empty()) return true;
    const auto hull = convex_hull(pts);
    if (hull.size() < 3) return true;

    for (const auto& p : pts) {
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < hull.size() && d > tol; ++i)
            d = std::min(d, segment_distance(p, hull[i], hull[(i + 1) % hull.size()]));
        if (d > tol) return false;
    }
    return true;
}

Homography Homography::identity() {
    Homography h;
    h.m = {{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
    return h;
}

PointF Homography::apply(PointF p) const {
    const double w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
    return {(m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w, (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w};
}

namespace {

void require_nondegenerate(const std::array<PointF, 4>& q, const char* which) {
    double scale = 0.0;
    for (const auto& p : q) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    const double eps = 1e-10 * std::max(1.0, scale * scale);
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j)
            for (int k = j + 1; k < 4; ++k)
                if (std::abs(cross(q[j] - q[i], q[k] - q[i])) <= eps)
                    throw Error(ErrorCode::Singularity, std::string("homography: degenerate ") + which + " quad");
}

}  // namespace

Homography homography_from_quad(const std::array<PointF, 4>& src, const std::array<PointF, 4>& dst) {
    require_nondegenerate(src, "source");
    require_nondegenerate(dst, "destination");

    std::array<std::array<double, 9>, 8> a{};
    for (int i = 0; i < 4; ++i) {
        const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
        a[2 * i] = {x, y, 1, 0, 0, 0, -x * u, -y * u, u};
        a[2 * i + 1] = {0, 0, 0, x, y, 1, -x * v, -y * v, v};
    }
    for (int col = 0; col < 8; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 8; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (std::abs(a[pivot][col]) < 1e-12) throw Error(ErrorCode::Singularity, "homography: singular system");
        std::swap(a[col], a[pivot]);
        for (int r = 0; r < 8; ++r) {
            if (r == col) continue;
            const double f = a[r][col] / a[col][col];
            for (int k = col; k < 9; ++k) a[r][k] -= f * a[col][k];
        }
    }
    Homography h;
    for (int i = 0; i < 8; ++i) h.m[i / 3][i % 3] = a[i][8] / a[i][i];
    h.m[2][2] = 1.0;
    return h;
}

UprightFrame upright_frame(const RotatedRect& r) {
    const double a = r.angle_deg / kDegPerRad;
    const PointF u{std::cos(a), std::sin(a)};
    const PointF v{-u.y, u.x};

    // Pick the edge direction (of +-u, +-v) nearest to +x.
    struct Axis {
        PointF dir;
        double len;
        double across;
    };
    const std::array<Axis, 4> options = {{{u, r.size_w, r.size_h},
                                          {v, r.size_h, r.size_w},
                                          {-1.0 * u, r.size_w, r.size_h},
                                          {-1.0 * v, r.size_h, r.size_w}}};
    const Axis* best = &options[0];
    for (const auto& o : options)
        if (o.dir.x > best->dir.x + 1e-12) best = &o;

    const int out_w = static_cast<int>(std::lround(best->len));
    const int out_h = static_cast<int>(std::lround(best->across));
    if (out_w <= 0 || out_h <= 0) throw Error(ErrorCode::DegenerateRect, "warp_to_upright: rect rounds to zero size");

    const PointF dx = (best->len / 2.0) * best->dir;
    const PointF dy = (best->across / 2.0) * PointF{-best->dir.y, best->dir.x};
    const std::array<PointF, 4> src = {r.center - dx - dy, r.center + dx - dy, r.center + dx + dy,
                                       r.center - dx + dy};
    const std::array<PointF, 4> dst = {PointF{0, 0}, PointF{static_cast<double>(out_w), 0},
                                       PointF{static_cast<double>(out_w), static_cast<double>(out_h)},
                                       PointF{0, static_cast<double>(out_h)}};
    return {out_w, out_h, homography_from_quad(src, dst), homography_from_quad(dst, src)};
}

BinaryImage warp_to_upright(const BinaryImage& img, const RotatedRect& r) {
    const UprightFrame f = upright_frame(r);
    const int out_w = f.width;
    const int out_h = f.height;
    const Homography& back = f.from_frame;

    BinaryImage out(out_w, out_h);
    for (int y = 0; y < out_h; ++y) {
        std::uint8_t* row = out.row(y);
        for (int x = 0; x < out_w; ++x) {
            const PointF s = back.apply({x + 0.5, y + 0.5});
            const double fx = std::floor(s.x);
            const double fy = std::floor(s.y);
            if (fx < 0 || fy < 0 || fx >= img.width() || fy >= img.height()) continue;
            row[x] = img.row(static_cast<int>(fy))[static_cast<int>(fx)];
        }
    }
    return out;
}

}  // namespace boltid
