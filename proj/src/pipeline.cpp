#include "boltid/pipeline.hpp"

#include "boltid/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>

namespace boltid {

namespace {

std::size_t half_count(const BinaryImage& img, bool left) {
    const int half = img.width() / 2;
    if (half == 0) return 0;
    return count_white(img, {left ? 0 : img.width() - half, 0, half, img.height()});
}

// Unit vector along the rect edge closest to vertical.
PointF across_dir(const RotatedRect& r) {
    const double a = r.angle_deg * std::numbers::pi / 180.0;
    return std::abs(std::sin(a)) > std::abs(std::cos(a)) ? PointF{std::cos(a), std::sin(a)}
                                                          : PointF{-std::sin(a), std::cos(a)};
}

// Rect extent across the bolt axis.
double rect_width(const BinaryImage& img) {
    const RotatedRect r = min_area_rect_of_white(img);
    const double a = r.angle_deg * std::numbers::pi / 180.0;
    return std::abs(std::sin(a)) > std::abs(std::cos(a)) ? r.size_w : r.size_h;
}

BinaryImage columns(const BinaryImage& img, int from, int to) { return crop(img, {from, 0, to - from, img.height()}); }

bool has_white(const BinaryImage& img) {
    for (int y = 0; y < img.height(); ++y) {
        const std::uint8_t* r = img.row(y);
        if (std::find(r, r + img.width(), 1) != r + img.width()) return true;
    }
    return false;
}

// Affine composition: apply `first`, then `second`.
Homography then(const Homography& first, const Homography& second) {
    Homography out;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = 0; k < 3; ++k) out.m[i][j] += second.m[i][k] * first.m[k][j];
    return out;
}

const Component& largest(const std::vector<Component>& comps) {
    return *std::max_element(comps.begin(), comps.end(),
                             [](const Component& a, const Component& b) { return a.area < b.area; });
}

}  // namespace

OrientedBolt orient(const BinaryImage& component) {
    if (!has_white(component)) throw Error(ErrorCode::EmptyInput, "component has no white pixels");
    const RotatedRect rect = min_area_rect_of_white(component);
    const UprightFrame frame = upright_frame(rect);
    BinaryImage up = warp_to_upright(component, rect);
    Homography map = frame.to_frame;
    if (up.height() > up.width()) {
        map = then(map, {{{{0, -1, static_cast<double>(up.height())}, {1, 0, 0}, {0, 0, 1}}}});
        up = rotate90(up);
    }
    if (half_count(up, false) > half_count(up, true)) {
        map = then(map, {{{{-1, 0, static_cast<double>(up.width())}, {0, -1, static_cast<double>(up.height())},
                           {0, 0, 1}}}});
        up = rotate180(up);
    }
    const int w = up.width();
    const int h = up.height();
    return {std::move(up), w, h, component, map};
}

Axes measure_axes(const OrientedBolt& bolt) {
    const int width = bolt.img.width();
    const int half = width / 2;
    if (half == 0) throw Error(ErrorCode::MalformedBolt, "bolt is narrower than two columns");
    if (!bolt.source) {
        const BinaryImage right = columns(bolt.img, width - half, width);
        if (!has_white(right)) throw Error(ErrorCode::MalformedBolt, "right half of the bolt is empty");
        return {static_cast<double>(width), rect_width(right)};
    }

    const BinaryImage& src = *bolt.source;
    const Homography& map = bolt.from_source;
    const double cut = width - half;
    auto centre = [&](int x, int y) { return map.apply({x + 0.5, y + 0.5}); };
    auto white = [&](int x, int y) { return src.contains(x, y) && src.at(x, y) != 0; };

    // Hull candidates: the part of each white run whose mapped centres fall
    // in the right half. The map is affine, so along a run mapped x is linear.
    // Black 4-neighbours of white pixels are kept as outside samples.
    std::vector<PointF> inside;
    std::vector<PointF> outside;
    for (int y = 0; y < src.height(); ++y) {
        const std::uint8_t* row = src.row(y);
        for (int x = 0; x < src.width();) {
            if (!row[x]) {
                ++x;
                continue;
            }
            const int x0 = x;
            while (x < src.width() && row[x]) ++x;
            const int x1 = x - 1;

            const PointF q0 = centre(x0, y);
            const PointF step = centre(x0 + 1, y) - q0;
            double lo = 0;
            double hi = x1 - x0;
            if (std::abs(step.x) < 1e-12) {
                if (q0.x < cut) hi = -1;
            } else if (step.x > 0) {
                lo = std::max(lo, std::ceil((cut - q0.x) / step.x - 1e-9));
            } else {
                hi = std::min(hi, std::floor((cut - q0.x) / step.x + 1e-9));
            }
            if (lo > hi) continue;
            inside.push_back(q0 + lo * step);
            if (hi > lo) inside.push_back(q0 + hi * step);

            auto probe = [&](int px, int py) {
                if (white(px, py)) return;
                const PointF q = centre(px, py);
                if (q.x >= cut) outside.push_back(q);
            };
            probe(x0 - 1, y);
            probe(x1 + 1, y);
            for (int i = x0 + static_cast<int>(lo); i <= x0 + static_cast<int>(hi); ++i) {
                probe(i, y - 1);
                probe(i, y + 1);
            }
        }
    }
    if (inside.empty()) throw Error(ErrorCode::MalformedBolt, "right half of the bolt is empty");

    const RotatedRect r = min_area_rect(inside);
    const PointF n = across_dir(r);
    auto proj = [&](PointF p) { return p.x * n.x + p.y * n.y; };
    double t_min = proj(inside.front());
    double t_max = t_min;
    for (const PointF& p : inside) {
        t_min = std::min(t_min, proj(p));
        t_max = std::max(t_max, proj(p));
    }
    double out_lo = t_min - 1.0;
    double out_hi = t_max + 1.0;
    for (const PointF& p : outside) {
        const double t = proj(p);
        if (t > t_max) out_hi = std::min(out_hi, t);
        if (t < t_min) out_lo = std::max(out_lo, t);
    }
    return {static_cast<double>(width), 0.5 * (out_hi + t_max) - 0.5 * (out_lo + t_min)};
}

HeadCut remove_head(const OrientedBolt& bolt, double minor_px, int thresh, double head_frac) {
    if (thresh < 0) throw Error(ErrorCode::Parameter, "thresh must be >= 0");
    const BinaryImage& img = bolt.img;
    const int l = img.width();
    const double w = img.height();
    const double d = minor_px;

    // Closest-of-two: a slice still carrying head is nearer the head width.
    auto head_like = [&](int from) {
        const double wp = rect_width(columns(img, from, l));
        return std::abs(wp - w) <= std::abs(wp - d);
    };

    auto cut_at = [&](int h, bool found) {
        const int start = h + thresh;
        if (start >= l) throw Error(ErrorCode::MalformedBolt, "cut column leaves no body");
        HeadCut cut{h, columns(img, start, l), std::nullopt, thresh, found};
        if (h > 0) cut.head = columns(img, 0, h);
        return cut;
    };

    int lower = 0;
    int upper = std::min(l - 1, static_cast<int>(std::floor(head_frac * l)));  // inclusive
    while (lower <= upper) {
        const int mid = (lower + upper) / 2;
        if (head_like(mid)) {
            lower = mid + 1;
            continue;
        }
        if (mid == 0) break;  // body from the first column: nothing to cut
        if (head_like(mid - 1)) return cut_at(mid, true);
        upper = mid - 1;
    }
    return cut_at(0, false);
}

ThreadingVerdict classify_threading(const BinaryImage& body, double minor_px, const PipelineConfig& cfg) {
    if (body.width() < 4) throw Error(ErrorCode::InsufficientData, "body narrower than 4 columns");
    const int half = body.width() / 2;
    const BinaryImage left = columns(body, 0, half);
    const BinaryImage right = columns(body, body.width() - half, body.width());

    const auto left_parts = connected_components(left);
    const auto right_parts = connected_components(right);
    if (left_parts.empty() || right_parts.empty())
        throw Error(ErrorCode::InsufficientData, "a body half has no white pixels");
    const Contour left_contour = trace_contour(largest(left_parts).mask);
    const Contour right_contour = trace_contour(largest(right_parts).mask);

    ThreadingVerdict v;
    v.left_convex = is_contour_convex(left_contour, cfg.convex_tol);
    const double left_perimeter = arc_length(left_contour);
    v.perimeter_ratio = left_perimeter > 0.0 ? arc_length(right_contour) / left_perimeter : 0.0;
    v.perimeter_jump = v.perimeter_ratio > cfg.perim_ratio;
    v.fill = static_cast<double>(count_white(left)) / (minor_px * half);
    v.left_filled = v.fill >= cfg.fill_frac;
    v.type = (v.left_convex || v.perimeter_jump || v.left_filled) ? ThreadingType::HalfThread
                                                                  : ThreadingType::FullThread;
    return v;
}

PitchTrace PitchTrace::from_crossings(double a, double b, int n) {
    if (n < 4)
        throw Error(ErrorCode::InsufficientCrests,
                    "need at least 4 crossings (two crest pairs), got " + std::to_string(n));
    if (n % 2 != 0)
        throw Error(ErrorCode::Parity, "odd crossing count n=" + std::to_string(n) + " (a=" + std::to_string(a) +
                                           ", b=" + std::to_string(b) + ")");
    if (b < a) throw Error(ErrorCode::Parameter, "last crossing precedes the first");
    PitchTrace t;
    t.a = a;
    t.b = b;
    t.n = n;
    t.pitch_px = (b - a) / (n / 2.0);
    return t;
}

namespace {

struct Run {
    int start;
    int end;  // exclusive
    double centre() const { return 0.5 * (start + end - 1); }
};

double median_spacing(const std::vector<Run>& runs) {
    std::vector<double> gaps(runs.size() - 1);
    for (std::size_t i = 0; i + 1 < runs.size(); ++i) gaps[i] = runs[i + 1].centre() - runs[i].centre();
    std::nth_element(gaps.begin(), gaps.begin() + gaps.size() / 2, gaps.end());
    return gaps[gaps.size() / 2];
}

}  // namespace

PitchTrace trace_scanline(const std::uint8_t* row, int width) {
    std::vector<Run> runs;
    int x = 0;
    while (x < width) {
        if (!row[x]) {
            ++x;
            continue;
        }
        const int start = x;
        while (x < width && row[x]) ++x;
        if (start > 0 && x < width) runs.push_back({start, x});
    }
    auto too_few = [](std::size_t got) {
        return Error(ErrorCode::InsufficientCrests,
                     "scan row shows " + std::to_string(got) + " complete crests, need at least 3");
    };
    if (runs.size() < 3) throw too_few(runs.size());

    // Specks at the root line: much narrower than a crest cut by the same row.
    std::vector<int> widths;
    for (const Run& r : runs) widths.push_back(r.end - r.start);
    std::nth_element(widths.begin(), widths.begin() + widths.size() / 2, widths.end());
    const int typical = widths[widths.size() / 2];
    std::erase_if(runs, [&](const Run& r) { return 3 * (r.end - r.start) < typical; });
    if (runs.size() < 3) throw too_few(runs.size());

    // Resampling can split a crest into runs a pixel or two apart: rejoin
    // runs whose centres are closer than half the typical spacing.
    for (int pass = 0; pass < 2 && runs.size() >= 3; ++pass) {
        const double half = 0.5 * median_spacing(runs);
        std::vector<Run> joined{runs.front()};
        for (std::size_t i = 1; i < runs.size(); ++i) {
            if (runs[i].centre() - joined.back().centre() < half)
                joined.back().end = runs[i].end;
            else
                joined.push_back(runs[i]);
        }
        runs = std::move(joined);
    }
    if (runs.size() < 3) throw too_few(runs.size());

    // Near the root two crests can fuse into one wide run; those make poor
    // anchors. Intervals between anchors are counted in whole spacings.
    const double spacing = median_spacing(runs);
    std::vector<double> anchors;
    for (const Run& r : runs)
        if (r.end - r.start < 1.5 * spacing) anchors.push_back(r.centre());
    if (anchors.size() < 2) throw too_few(anchors.size());
    int intervals = 0;
    for (std::size_t i = 0; i + 1 < anchors.size(); ++i)
        intervals += std::max(1, static_cast<int>(std::lround((anchors[i + 1] - anchors[i]) / spacing)));
    return PitchTrace::from_crossings(anchors.front(), anchors.back(), 2 * intervals);
}

PitchTrace estimate_pitch(const BinaryImage& body, int nudge, double slice_frac) {
    if (nudge < 0) throw Error(ErrorCode::Parameter, "nudge must be >= 0");
    const int slice_w = std::clamp(static_cast<int>(std::ceil(slice_frac * body.width())), 1, body.width());
    const BinaryImage slice = columns(body, body.width() - slice_w, body.width());
    if (!has_white(slice)) throw Error(ErrorCode::InsufficientCrests, "thread slice is empty");
    const BinaryImage square = warp_to_upright(slice, min_area_rect_of_white(slice));
    if (nudge >= square.height()) throw Error(ErrorCode::InsufficientCrests, "nudge exceeds slice height");
    PitchTrace t = trace_scanline(square.row(nudge), square.width());
    t.scan_row = nudge;
    return t;
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

template <typename F>
auto stage(const char* name, double& ms, F&& f) {
    const auto t0 = Clock::now();
    try {
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            ms = ms_since(t0);
        } else {
            auto r = f();
            ms = ms_since(t0);
            return r;
        }
    } catch (const Error& e) {
        if (!e.stage().empty()) throw;
        throw e.at_stage(name);
    }
}

}  // namespace

BoltFeatures extract_features(const BinaryImage& component, const PipelineConfig& cfg, StageTimings* timings) {
    StageTimings local;
    StageTimings& t = timings ? *timings : local;
    const auto t0 = Clock::now();

    const OrientedBolt bolt = stage("orient", t.orient_ms, [&] { return orient(component); });
    const Axes axes = stage("measure_axes", t.axes_ms, [&] { return measure_axes(bolt); });

    BoltFeatures f;
    f.major_px = axes.major_px;
    f.minor_px = axes.minor_px;
    f.head_w_px = bolt.head_w_px;
    stage("area_perimeter", t.area_perimeter_ms, [&] {
        f.area_px = static_cast<double>(count_white(component));
        f.perimeter_px = arc_length(trace_contour(component));
    });

    const HeadCut cut = stage("remove_head", t.remove_head_ms,
                              [&] { return remove_head(bolt, axes.minor_px, cfg.thresh, cfg.head_frac); });
    f.shoulder_px = cut.h;
    f.shoulder_found = cut.shoulder_found;

    f.threading = stage("classify_threading", t.threading_ms,
                        [&] { return classify_threading(cut.body, axes.minor_px, cfg).type; });

    if (axes.major_px > cfg.min_pitch_len_px) {
        try {
            f.pitch_px = stage("estimate_pitch", t.pitch_ms, [&] {
                return estimate_pitch(cut.body, cfg.nudge, cfg.thread_slice_frac).pitch_px;
            });
        } catch (const Error& e) {
            if (e.code() != ErrorCode::InsufficientCrests && e.code() != ErrorCode::Parity) throw;
        }
    }
    t.total_ms = ms_since(t0);
    return f;
}

std::vector<FrameItem> analyze_frame(const BinaryImage& frame, const PipelineConfig& cfg) {
    std::vector<FrameItem> items;
    for (auto& comp : connected_components(frame, cfg.min_component_area)) {
        FrameItem item{std::move(comp), std::nullopt, {}, {}};
        try {
            item.features = extract_features(item.component.mask, cfg, &item.timings);
        } catch (const Error& e) {
            item.error = std::string(code_name(e.code())) + " at " + e.stage() + ": " + e.what();
        }
        items.push_back(std::move(item));
    }
    return items;
}

}  // namespace boltid
