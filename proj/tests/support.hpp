#pragma once

#include "boltid/image.hpp"
#include "boltid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace testsupport {

inline boltid::synth::BoltSpec spec_named(std::string_view name) {
    for (auto& s : boltid::synth::standard_catalog())
        if (s.name == name) return s;
    throw std::runtime_error("no catalog entry " + std::string(name));
}

// Canvas just large enough for any rotation of the bolt.
inline boltid::synth::RenderParams params_for(const boltid::synth::BoltSpec& s, double angle_deg,
                                              double ppm = boltid::synth::kDefaultPxPerMm) {
    const int side = static_cast<int>(std::ceil(std::hypot(s.length_mm, s.head_width_mm) * ppm)) + 16;
    boltid::synth::RenderParams p;
    p.px_per_mm = ppm;
    p.canvas_w = side;
    p.canvas_h = side;
    p.center = {side / 2.0, side / 2.0};
    p.angle_deg = angle_deg;
    return p;
}

inline boltid::synth::Rendered render(std::string_view name, double angle_deg) {
    const auto s = spec_named(name);
    return boltid::synth::render_bolt(s, params_for(s, angle_deg));
}

inline boltid::Component largest_component(const boltid::BinaryImage& img) {
    auto comps = boltid::connected_components(img);
    if (comps.empty()) throw std::runtime_error("no components");
    return *std::max_element(comps.begin(), comps.end(),
                             [](const auto& a, const auto& b) { return a.area < b.area; });
}

inline boltid::BinaryImage random_binary(std::mt19937_64& rng, int w, int h, double p_white) {
    std::bernoulli_distribution coin(p_white);
    boltid::BinaryImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.set(x, y, coin(rng));
    return img;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
    std::filesystem::path path;
    explicit TempDir(std::string_view tag) {
        std::random_device rd;
        path = std::filesystem::temp_directory_path() /
               ("boltid_" + std::string(tag) + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

}  // namespace testsupport
