#include "boltid/error.hpp"
#include "boltid/geometry.hpp"
#include "boltid/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace boltid;
using doctest::Approx;
using testsupport::spec_named;

namespace {

int column_height(const BinaryImage& img, int x) {
    int n = 0;
    for (int y = 0; y < img.height(); ++y) n += img.at(x, y);
    return n;
}

std::size_t differing(const BinaryImage& a, const BinaryImage& b) {
    std::size_t n = 0;
    for (int y = 0; y < a.height(); ++y)
        for (int x = 0; x < a.width(); ++x) n += a.at(x, y) != b.at(x, y);
    return n;
}

}  // namespace

TEST_CASE("upright M8x35 measures 435 by 99 pixels") {
    const auto spec = spec_named("M8x35_HT");
    const auto r = synth::render_bolt(spec, testsupport::params_for(spec, 0.0));
    const BinaryImage mask = testsupport::largest_component(r.image).mask;
    const RotatedRect whole = min_area_rect_of_white(mask);
    CHECK(std::abs(std::max(whole.size_w, whole.size_h) - 35 * 12.42) <= 1.0);
    // The body (everything right of the head) is d across.
    const int shoulder = static_cast<int>(std::ceil(r.truth.shoulder_column_px));
    const RotatedRect body = min_area_rect_of_white(crop(mask, {shoulder, 0, mask.width() - shoulder, mask.height()}));
    CHECK(std::abs(std::min(body.size_w, body.size_h) - 8 * 12.42) <= 1.0);
    CHECK(r.truth.major_px == Approx(434.7));
    CHECK(r.truth.minor_px == Approx(99.36));
    CHECK(r.truth.pitch_px == Approx(1.25 * 12.42));
}

TEST_CASE("angle 0 and 180 renders have matching pixel counts") {
    for (const char* name : {"M8x35_HT", "M4x75_FT", "M12x25_FT"}) {
        const auto a = testsupport::render(name, 0.0);
        const auto b = testsupport::render(name, 180.0);
        CHECK(static_cast<double>(b.truth.white_count) ==
              Approx(static_cast<double>(a.truth.white_count)).epsilon(0.005));
    }
}

TEST_CASE("half thread body is straight on the unthreaded part") {
    const auto spec = spec_named("M10x50_HT");
    const auto p = testsupport::params_for(spec, 0.0);
    const auto r = synth::render_bolt(spec, p);
    const BinaryImage mask = testsupport::largest_component(r.image).mask;
    const double px = p.px_per_mm;
    const int first = static_cast<int>(std::ceil(spec.head_length_mm * px)) + 1;
    const int last = static_cast<int>(std::floor(spec.length_mm * (1 - spec.half_thread_frac) * px)) - 1;
    const int h = column_height(mask, first);
    for (int x = first; x <= last; ++x) {
        CHECK(column_height(mask, x) == h);
        // Contiguous: one run per column.
        int runs = 0;
        for (int y = 0; y < mask.height(); ++y) runs += mask.at(x, y) && (y == 0 || !mask.at(x, y - 1));
        CHECK(runs == 1);
    }
    // The threaded part does vary.
    std::set<int> threaded;
    for (int x = last + 10; x < mask.width() - 2; ++x) threaded.insert(column_height(mask, x));
    CHECK(threaded.size() > 3);
}

TEST_CASE("ground truth matches the emitted image") {
    const auto spec = spec_named("M5x25_HT");
    auto p = testsupport::params_for(spec, 41.0);
    const auto clean = synth::render_bolt(spec, p);
    CHECK(clean.truth.white_count == count_white(clean.image));
    const auto comps = connected_components(clean.image);
    REQUIRE(comps.size() == 1);
    CHECK(comps[0].rect == clean.truth.placement);
    CHECK(comps[0].area == clean.truth.bolt_pixels);

    p.noise_salt_pepper = 0.01;
    p.seed = 5;
    const auto noisy = synth::render_bolt(spec, p);
    CHECK(noisy.truth.white_count == count_white(noisy.image));
    CHECK(noisy.truth.bolt_pixels == clean.truth.bolt_pixels);
    CHECK(noisy.image == synth::add_noise(clean.image, 0.01, 5));
}

TEST_CASE("renders are deterministic") {
    const auto spec = spec_named("M12x40_HT");
    auto p = testsupport::params_for(spec, 77.0);
    p.noise_salt_pepper = 0.002;
    p.seed = 99;
    CHECK(synth::render_bolt(spec, p).image == synth::render_bolt(spec, p).image);
}

TEST_CASE("render errors") {
    const auto spec = spec_named("M8x35_HT");
    synth::RenderParams p;
    p.canvas_w = 200;
    p.canvas_h = 200;
    p.center = {100, 100};
    try {
        synth::render_bolt(spec, p);
        FAIL("expected a geometry error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::Geometry);
    }
    auto bad = spec;
    bad.head_length_mm = 0.3 * bad.length_mm;
    CHECK_THROWS_AS(synth::render_bolt(bad, testsupport::params_for(spec, 0.0)), Error);

    const auto s2 = spec_named("M5x25_HT");
    CHECK_THROWS_AS(synth::render_scene(800, 800, {{spec, {400, 400}, 0.0}, {s2, {400, 420}, 0.0}}, 12.42), Error);
}

TEST_CASE("spec invariants") {
    auto s = spec_named("M8x35_HT");
    CHECK_NOTHROW(s.validate());
    auto t = s;
    t.thread_depth_mm = s.diameter_mm / 2;
    CHECK_THROWS_AS(t.validate(), Error);
    t = s;
    t.half_thread_frac = 0.5;
    CHECK_THROWS_AS(t.validate(), Error);
    t = s;
    t.pitch_mm = 0;
    CHECK_THROWS_AS(t.validate(), Error);
    t = s;
    t.head_width_mm = s.diameter_mm;
    CHECK_THROWS_AS(t.validate(), Error);

    CHECK(s.thread_start_mm() == Approx(35 * 0.62));
    CHECK(spec_named("M10x35_FT").thread_start_mm() == Approx(spec_named("M10x35_FT").head_length_mm));
    CHECK(s.contains(1.0, 6.4));
    CHECK_FALSE(s.contains(1.0, 6.6));
    CHECK(s.contains(10.0, 3.99));
    CHECK_FALSE(s.contains(10.0, 4.01));
    CHECK_FALSE(s.contains(-0.1, 0.0));
    CHECK_FALSE(s.contains(35.1, 0.0));
}

TEST_CASE("add_noise examples") {
    const BinaryImage base(1000, 1000);
    CHECK(synth::add_noise(base, 0.0, 3) == base);

    const BinaryImage noisy = synth::add_noise(base, 0.01, 3);
    const double n = 1e6, p = 0.01;
    const double sigma = std::sqrt(n * p * (1 - p));
    CHECK(std::abs(static_cast<double>(count_white(noisy)) - n * p) <= 3 * sigma);
    CHECK(synth::add_noise(base, 0.01, 3) == noisy);
    CHECK_FALSE(synth::add_noise(base, 0.01, 4) == noisy);

    CHECK_THROWS_AS(synth::add_noise(base, 0.06, 1), Error);
    CHECK_THROWS_AS(synth::add_noise(base, -0.01, 1), Error);
}

TEST_CASE("add_noise follows the documented generator") {
    std::mt19937_64 rng0(21);
    const BinaryImage img = testsupport::random_binary(rng0, 64, 48, 0.5);
    const BinaryImage out = synth::add_noise(img, 0.03, 77);
    std::mt19937_64 rng(77);
    for (int y = 0; y < img.height(); ++y)
        for (int x = 0; x < img.width(); ++x) {
            const bool flip = std::ldexp(static_cast<double>(rng() >> 11), -53) < 0.03;
            CHECK(out.at(x, y) == (img.at(x, y) != flip));
        }
}

TEST_CASE("noise flips pixels of a render at the given rate") {
    const auto spec = spec_named("M8x20_FT");
    auto p = testsupport::params_for(spec, 12.0);
    const auto clean = synth::render_bolt(spec, p);
    p.noise_salt_pepper = 0.005;
    p.seed = 8;
    const auto noisy = synth::render_bolt(spec, p);
    const double n = static_cast<double>(p.canvas_w) * p.canvas_h;
    const double sigma = std::sqrt(n * 0.005 * 0.995);
    CHECK(std::abs(static_cast<double>(differing(clean.image, noisy.image)) - n * 0.005) <= 3 * sigma);
}

TEST_CASE("standard catalog") {
    const auto cat = synth::standard_catalog();
    CHECK(cat.size() == 33);
    std::set<std::string> names;
    for (const auto& s : cat) {
        CHECK_NOTHROW(s.validate());
        names.insert(s.name);
        const std::string suffix = s.name.substr(s.name.size() - 2);
        CHECK(suffix == std::string(short_name(s.threading)));
    }
    CHECK(names.size() == 33);

    const auto m5 = spec_named("M5x12_FT");
    CHECK(m5.diameter_mm == 4.90);
    CHECK(m5.length_mm == 12.06);
    for (const char* n : {"M5x12_FT", "M8x35_HT", "M10x50_HT", "M10x35_FT", "M4x75_FT", "M8x20_FT", "M5x25_HT"}) {
        CHECK(names.count(n) == 1);
        CHECK(synth::is_documented_entry(n));
    }
    CHECK_FALSE(synth::is_documented_entry("M6x30_FT"));

    // No two entries within 1.4 % in both length and diameter.
    for (std::size_t i = 0; i < cat.size(); ++i)
        for (std::size_t j = i + 1; j < cat.size(); ++j) {
            const bool len_close = std::abs(cat[i].length_mm - cat[j].length_mm) <
                                   0.014 * std::max(cat[i].length_mm, cat[j].length_mm);
            const bool dia_close = std::abs(cat[i].diameter_mm - cat[j].diameter_mm) <
                                   0.014 * std::max(cat[i].diameter_mm, cat[j].diameter_mm);
            INFO(cat[i].name << " vs " << cat[j].name);
            CHECK_FALSE((len_close && dia_close));
        }
}

TEST_CASE("nominal spec") {
    const auto s = synth::nominal_spec("M6x40_HT", 6, 40, ThreadingType::HalfThread);
    CHECK_NOTHROW(s.validate());
    CHECK(s.pitch_mm == 1.0);
    CHECK(s.head_width_mm == 10.0);
    CHECK(s.head_length_mm <= 0.2 * s.length_mm);
}

TEST_CASE("catalog csv round trip and errors") {
    const auto cat = synth::standard_catalog();
    const std::string csv = synth::save_catalog(cat);
    CHECK(csv.rfind("name,length_mm,diameter_mm,head_width_mm,head_length_mm,pitch_mm,thread_depth_mm,threading,"
                    "half_thread_frac\n",
                    0) == 0);
    CHECK(synth::load_catalog(csv) == cat);
    CHECK(synth::save_catalog(synth::load_catalog(csv)) == csv);

    auto line_of = [](const std::string& text) {
        try {
            synth::load_catalog(text);
        } catch (const FormatError& e) {
            return static_cast<long>(e.position());
        } catch (const Error&) {
            return -1L;
        }
        return 0L;
    };
    const std::string header =
        "name,length_mm,diameter_mm,head_width_mm,head_length_mm,pitch_mm,thread_depth_mm,threading,half_thread_frac\n";
    CHECK(line_of("name,length_mm\n") == 1);
    CHECK(line_of(header + "A,35,8,13,5,1.25,0.6,HT,0.38\nB,35,8,13,5,x,0.6,HT,0.38\n") == 3);
    CHECK(line_of(header + "A,35,8,13,5,1.25,0.6,XX,0.38\n") == 2);
    CHECK(line_of(header + "A,35,8,13,5,1.25,0.6,HT\n") == 2);
    CHECK(line_of(header + "A,35,8,13,9,1.25,0.6,HT,0.38\n") == 2);
}
