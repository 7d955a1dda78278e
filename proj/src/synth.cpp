#include "boltid/synth.hpp"

#include "boltid/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace boltid::synth {

void BoltSpec::validate() const {
    auto fail = [this](const std::string& why) {
        throw Error(ErrorCode::Parameter, "bolt spec '" + name + "': " + why);
    };
    if (!text::csv_safe(name)) fail("name must be a nonempty plain CSV field");
    if (!(length_mm > 0.0) || !(diameter_mm > 0.0)) fail("length and diameter must be positive");
    if (!(head_width_mm > diameter_mm)) fail("head must be wider than the body");
    if (!(head_length_mm > 0.0) || head_length_mm > 0.2 * length_mm + 1e-9) fail("head length must be in (0, 0.2 * length]");
    if (!(pitch_mm > 0.0)) fail("pitch must be positive");
    if (!(thread_depth_mm > 0.0) || !(thread_depth_mm < diameter_mm / 2.0)) fail("thread depth must be in (0, d/2)");
    if (half_thread_frac < 0.35 - 1e-12 || half_thread_frac > 0.40 + 1e-12) fail("half_thread_frac must be in [0.35, 0.40]");
}

double BoltSpec::thread_start_mm() const {
    if (threading == ThreadingType::FullThread) return head_length_mm;
    return std::max(head_length_mm, length_mm * (1.0 - half_thread_frac));
}

bool BoltSpec::contains(double u, double v) const {
    if (u < 0.0 || u > length_mm) return false;
    const double av = std::abs(v);
    if (u < head_length_mm) return av <= head_width_mm / 2.0;

    double radius = diameter_mm / 2.0;
    if (u >= thread_start_mm()) {
        // 60-degree basic profile: crest flat P/8, root flat P/4, straight
        // flanks between. Crest centres sit P/2 from the tip; the lower
        // edge is shifted by half a pitch.
        const double shift = v < 0.0 ? 0.0 : pitch_mm / 2.0;
        const double t = std::fmod(length_mm - u + shift, pitch_mm);
        const double from_crest = std::abs(t - pitch_mm / 2.0);
        const double crest_half = pitch_mm / 16.0;
        const double flank = 5.0 * pitch_mm / 16.0;
        const double depth_frac = std::clamp((from_crest - crest_half) / flank, 0.0, 1.0);
        radius -= thread_depth_mm * depth_frac;
    }
    return av <= radius;
}

namespace {

struct Frame {
    double cos_a;
    double sin_a;
    PointF center;
    double px_per_mm;
    double half_len_mm;
};

Frame make_frame(const BoltSpec& spec, PointF center, double angle_deg, double px_per_mm) {
    const double a = angle_deg * std::numbers::pi / 180.0;
    return {std::cos(a), std::sin(a), center, px_per_mm, spec.length_mm / 2.0};
}

// Continuous bounds of the rotated length x head-width box.
std::array<double, 4> rotated_bounds(const BoltSpec& spec, const Frame& f) {
    const double hl = spec.length_mm / 2.0 * f.px_per_mm;
    const double hw = spec.head_width_mm / 2.0 * f.px_per_mm;
    double x0 = 1e300, y0 = 1e300, x1 = -1e300, y1 = -1e300;
    for (double su : {-1.0, 1.0}) {
        for (double sv : {-1.0, 1.0}) {
            const double x = f.center.x + su * hl * f.cos_a - sv * hw * f.sin_a;
            const double y = f.center.y + su * hl * f.sin_a + sv * hw * f.cos_a;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = std::max(y1, y);
        }
    }
    return {x0, y0, x1, y1};
}

std::size_t draw(BinaryImage& img, const BoltSpec& spec, const Frame& f, AxisRect& placement) {
    const auto b = rotated_bounds(spec, f);
    const int x0 = std::max(0, static_cast<int>(std::floor(b[0])) - 1);
    const int y0 = std::max(0, static_cast<int>(std::floor(b[1])) - 1);
    const int x1 = std::min(img.width() - 1, static_cast<int>(std::ceil(b[2])) + 1);
    const int y1 = std::min(img.height() - 1, static_cast<int>(std::ceil(b[3])) + 1);

    std::size_t drawn = 0;
    int bx0 = img.width(), by0 = img.height(), bx1 = -1, by1 = -1;
    for (int y = y0; y <= y1; ++y) {
        std::uint8_t* row = img.row(y);
        const double dy = y + 0.5 - f.center.y;
        for (int x = x0; x <= x1; ++x) {
            const double dx = x + 0.5 - f.center.x;
            const double u = (dx * f.cos_a + dy * f.sin_a) / f.px_per_mm + f.half_len_mm;
            const double v = (-dx * f.sin_a + dy * f.cos_a) / f.px_per_mm;
            if (!spec.contains(u, v)) continue;
            if (!row[x]) ++drawn;
            row[x] = 1;
            bx0 = std::min(bx0, x);
            bx1 = std::max(bx1, x);
            by0 = std::min(by0, y);
            by1 = std::max(by1, y);
        }
    }
    placement = drawn ? AxisRect{bx0, by0, bx1 - bx0 + 1, by1 - by0 + 1} : AxisRect{};
    return drawn;
}

bool near(const AxisRect& a, const AxisRect& b, int gap) {
    return a.x - gap < b.x + b.w && b.x - gap < a.x + a.w && a.y - gap < b.y + b.h && b.y - gap < a.y + a.h;
}

}  // namespace

Scene render_scene(int canvas_w, int canvas_h, const std::vector<Placement>& bolts, double px_per_mm, double noise,
                   std::uint64_t seed) {
    if (!(px_per_mm > 0.0)) throw Error(ErrorCode::Parameter, "px_per_mm must be positive");
    Scene scene{BinaryImage(canvas_w, canvas_h), {}};
    for (const auto& bolt : bolts) {
        bolt.spec.validate();
        const Frame f = make_frame(bolt.spec, bolt.center, bolt.angle_deg, px_per_mm);
        const auto b = rotated_bounds(bolt.spec, f);
        if (b[0] < 2.0 || b[1] < 2.0 || b[2] > canvas_w - 2.0 || b[3] > canvas_h - 2.0)
            throw Error(ErrorCode::Geometry, "bolt '" + bolt.spec.name + "' does not fit the canvas with a 2 px margin");

        GroundTruth gt;
        gt.spec = bolt.spec;
        gt.shoulder_column_px = bolt.spec.head_length_mm * px_per_mm;
        gt.major_px = bolt.spec.length_mm * px_per_mm;
        gt.minor_px = bolt.spec.diameter_mm * px_per_mm;
        gt.pitch_px = bolt.spec.pitch_mm * px_per_mm;
        BinaryImage layer(canvas_w, canvas_h);
        gt.bolt_pixels = draw(layer, bolt.spec, f, gt.placement);
        for (const auto& other : scene.truths)
            if (near(other.placement, gt.placement, 2))
                throw Error(ErrorCode::Geometry, "bolt '" + bolt.spec.name + "' overlaps '" + other.spec.name + "'");
        for (int y = gt.placement.y; y < gt.placement.y + gt.placement.h; ++y)
            for (int x = gt.placement.x; x < gt.placement.x + gt.placement.w; ++x)
                if (layer.at(x, y)) scene.image.set(x, y, true);
        scene.truths.push_back(std::move(gt));
    }
    if (noise > 0.0) scene.image = add_noise(scene.image, noise, seed);
    const std::size_t white = count_white(scene.image);
    for (auto& gt : scene.truths) gt.white_count = white;
    return scene;
}

Rendered render_bolt(const BoltSpec& spec, const RenderParams& params) {
    Scene s = render_scene(params.canvas_w, params.canvas_h, {{spec, params.center, params.angle_deg}},
                           params.px_per_mm, params.noise_salt_pepper, params.seed);
    return {std::move(s.image), std::move(s.truths.front())};
}

BinaryImage add_noise(const BinaryImage& img, double rate, std::uint64_t seed) {
    if (!(rate >= 0.0 && rate <= 0.05)) throw Error(ErrorCode::Parameter, "noise rate must be in [0, 0.05]");
    BinaryImage out = img;
    if (rate == 0.0) return out;
    std::mt19937_64 rng(seed);
    constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
    for (int y = 0; y < out.height(); ++y) {
        std::uint8_t* row = out.row(y);
        for (int x = 0; x < out.width(); ++x)
            if (static_cast<double>(rng() >> 11) * kScale < rate) row[x] ^= 1;
    }
    return out;
}

namespace {

struct MetricRow {
    double d;
    double head_width;
    double head_height;
    double pitch;
};

// ISO 4017-style across-flats widths, head heights and coarse pitches.
MetricRow metric_row(double d) {
    static constexpr std::array<MetricRow, 6> rows = {{{4, 7, 2.8, 0.7},
                                                       {5, 8, 3.5, 0.8},
                                                       {6, 10, 4.0, 1.0},
                                                       {8, 13, 5.3, 1.25},
                                                       {10, 16, 6.4, 1.5},
                                                       {12, 18, 7.5, 1.75}}};
    const MetricRow* best = &rows[0];
    for (const auto& r : rows)
        if (std::abs(r.d - d) < std::abs(best->d - d)) best = &r;
    return *best;
}

}  // namespace

BoltSpec nominal_spec(std::string name, double diameter_mm, double length_mm, ThreadingType threading) {
    const MetricRow row = metric_row(diameter_mm);
    BoltSpec s;
    s.name = std::move(name);
    s.length_mm = length_mm;
    s.diameter_mm = diameter_mm;
    s.head_width_mm = row.head_width;
    s.head_length_mm = std::min(row.head_height, 0.18 * length_mm);
    s.pitch_mm = row.pitch;
    s.thread_depth_mm = 0.5413 * row.pitch;  // 5/8 of the sharp-V height
    s.threading = threading;
    return s;
}

bool is_documented_entry(std::string_view name) {
    static constexpr std::array<std::string_view, 7> documented = {
        "M5x12_FT", "M8x35_HT", "M10x50_HT", "M10x35_FT", "M4x75_FT", "M8x20_FT", "M5x25_HT"};
    return std::find(documented.begin(), documented.end(), name) != documented.end();
}

std::vector<BoltSpec> standard_catalog() {
    constexpr auto FT = ThreadingType::FullThread;
    constexpr auto HT = ThreadingType::HalfThread;
    struct Row {
        int d;
        int len;
        ThreadingType t;
    };
    // Documented bolts first, then the synthetic grid.
    static constexpr std::array<Row, 32> grid = {{
        {8, 35, HT},  {10, 50, HT}, {10, 35, FT}, {4, 75, FT},  {8, 20, FT},  {5, 25, HT},  {4, 16, FT},
        {4, 25, FT},  {4, 40, HT},  {4, 50, HT},  {5, 16, FT},  {5, 35, HT},  {5, 45, HT},  {5, 60, HT},
        {6, 12, FT},  {6, 20, FT},  {6, 30, FT},  {6, 45, HT},  {6, 60, HT},  {8, 16, FT},  {8, 25, FT},
        {8, 50, HT},  {8, 65, HT},  {10, 20, FT}, {10, 25, FT}, {10, 65, HT}, {10, 75, HT}, {12, 25, FT},
        {12, 30, FT}, {12, 40, HT}, {12, 55, HT}, {12, 70, HT},
    }};

    std::vector<BoltSpec> out;
    out.reserve(33);
    // Measured rather than nominal dimensions for this one.
    BoltSpec m5 = nominal_spec("M5x12_FT", 4.90, 12.06, FT);
    out.push_back(m5);
    for (const auto& r : grid) {
        const std::string name = "M" + std::to_string(r.d) + "x" + std::to_string(r.len) + "_" +
                                 std::string(short_name(r.t));
        out.push_back(nominal_spec(name, r.d, r.len, r.t));
    }
    return out;
}

namespace {

constexpr std::string_view kCatalogHeader =
    "name,length_mm,diameter_mm,head_width_mm,head_length_mm,pitch_mm,thread_depth_mm,threading,half_thread_frac";

}  // namespace

std::string save_catalog(const std::vector<BoltSpec>& specs) {
    using text::format_double;
    std::string out(kCatalogHeader);
    out += '\n';
    for (const auto& s : specs) {
        out += s.name + ',' + format_double(s.length_mm) + ',' + format_double(s.diameter_mm) + ',' +
               format_double(s.head_width_mm) + ',' + format_double(s.head_length_mm) + ',' +
               format_double(s.pitch_mm) + ',' + format_double(s.thread_depth_mm) + ',' +
               std::string(short_name(s.threading)) + ',' + format_double(s.half_thread_frac) + '\n';
    }
    return out;
}

std::vector<BoltSpec> load_catalog(std::string_view csv) {
    const auto rows = text::lines(csv);
    if (rows.empty() || text::trim(rows[0]) != kCatalogHeader) throw FormatError("catalog: bad header", 1);
    std::vector<BoltSpec> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const std::size_t line = i + 1;
        const auto row = text::trim(rows[i]);
        if (row.empty()) continue;
        const auto f = text::split(row, ',');
        if (f.size() != 9) throw FormatError("catalog: expected 9 fields", line);
        BoltSpec s;
        s.name = std::string(f[0]);
        double* numeric[] = {&s.length_mm, &s.diameter_mm, &s.head_width_mm, &s.head_length_mm, &s.pitch_mm,
                             &s.thread_depth_mm};
        for (std::size_t k = 0; k < 6; ++k) {
            const auto v = text::parse_double(f[k + 1]);
            if (!v) throw FormatError("catalog: non-numeric field", line);
            *numeric[k] = *v;
        }
        const auto t = parse_threading(f[7]);
        if (!t) throw FormatError("catalog: threading must be FT or HT", line);
        s.threading = *t;
        const auto frac = text::parse_double(f[8]);
        if (!frac) throw FormatError("catalog: non-numeric field", line);
        s.half_thread_frac = *frac;
        try {
            s.validate();
        } catch (const Error& e) {
            throw FormatError(std::string("catalog: ") + e.what(), line);
        }
        for (const auto& prev : out)
            if (prev.name == s.name) throw FormatError("catalog: duplicate name " + s.name, line);
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace boltid::synth
