#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <variant>
#include <vector>

namespace boltid {

struct PixelPoint {
    int x = 0;
    int y = 0;

    friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

/// Upright rectangle in pixel units: top-left corner plus extent.
struct AxisRect {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    int area() const { return w * h; }
    friend bool operator==(const AxisRect&, const AxisRect&) = default;
};

/// 8-bit monochrome image, row-major.
class GrayImage {
public:
    GrayImage(int width, int height, std::uint8_t fill = 0);
    GrayImage(int width, int height, std::vector<std::uint8_t> intensities);

    int width() const { return width_; }
    int height() const { return height_; }
    std::uint8_t at(int x, int y) const { return data_[index(x, y)]; }
    void set(int x, int y, std::uint8_t v) { data_[index(x, y)] = v; }
    std::span<const std::uint8_t> data() const { return data_; }

    friend bool operator==(const GrayImage&, const GrayImage&) = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

/// Two-valued image; white (true) is foreground. Stored one byte per pixel.
class BinaryImage {
public:
    BinaryImage(int width, int height, bool fill = false);

    int width() const { return width_; }
    int height() const { return height_; }
    bool at(int x, int y) const { return data_[index(x, y)] != 0; }
    void set(int x, int y, bool white) { data_[index(x, y)] = white ? 1 : 0; }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    bool contains(const AxisRect& r) const;

    /// Raw row pointer; values are 0 or 1.
    const std::uint8_t* row(int y) const { return data_.data() + static_cast<std::size_t>(y) * width_; }
    std::uint8_t* row(int y) { return data_.data() + static_cast<std::size_t>(y) * width_; }

    AxisRect extent() const { return {0, 0, width_, height_}; }

    friend bool operator==(const BinaryImage&, const BinaryImage&) = default;

private:
    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y) * width_ + x; }

    int width_;
    int height_;
    std::vector<std::uint8_t> data_;
};

struct FixedLevel {
    int level = 128;
};
struct Otsu {};
using ThresholdMethod = std::variant<FixedLevel, Otsu>;

/// Otsu level over the 256-bin histogram; ties go to the lowest level.
int otsu_level(const GrayImage& img);

/// A pixel is white iff its intensity is strictly greater than the level.
BinaryImage threshold(const GrayImage& img, const ThresholdMethod& method = Otsu{});

/// White pixels become 255, black 0.
GrayImage to_gray(const BinaryImage& img);

std::size_t count_white(const BinaryImage& img);
std::size_t count_white(const BinaryImage& img, const AxisRect& region);

/// Tight upright bounding rect of the white pixels; w == 0 when empty.
AxisRect white_bounds(const BinaryImage& img);

struct Component {
    /// Mask cropped to `rect`; only this component's pixels are white.
    BinaryImage mask;
    /// Placement of the mask in the source image.
    AxisRect rect;
    std::size_t area = 0;
};

/// 8-connected white components ordered by (rect.y, rect.x). Components
/// with fewer than `min_area` pixels are dropped.
std::vector<Component> connected_components(const BinaryImage& img, std::size_t min_area = 0);

BinaryImage crop(const BinaryImage& img, const AxisRect& region);
BinaryImage rotate180(const BinaryImage& img);
/// Quarter turn clockwise (as displayed, y down): (x, y) -> (h-1-y, x).
BinaryImage rotate90(const BinaryImage& img);

/// Pads `img` with a black border of `margin` pixels on every side.
BinaryImage pad(const BinaryImage& img, int margin);

GrayImage read_pgm(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> write_pgm(const GrayImage& img);

GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const std::filesystem::path& path, const GrayImage& img);
inline void save_pgm(const std::filesystem::path& path, const BinaryImage& img) { save_pgm(path, to_gray(img)); }

}  // namespace boltid
