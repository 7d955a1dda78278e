#include "boltid/image.hpp"

#include "boltid/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace boltid {

namespace {

void check_dims(int width, int height) {
    if (width <= 0 || height <= 0)
        throw Error(ErrorCode::Parameter,
                    "image dimensions must be positive, got " + std::to_string(width) + "x" + std::to_string(height));
}

void check_region(const BinaryImage& img, const AxisRect& r) {
    if (!img.contains(r))
        throw Error(ErrorCode::Bounds, "region (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                                           std::to_string(r.w) + "," + std::to_string(r.h) + ") outside " +
                                           std::to_string(img.width()) + "x" + std::to_string(img.height()));
}

}  // namespace

GrayImage::GrayImage(int width, int height, std::uint8_t fill) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill);
}

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> intensities)
    : width_(width), height_(height), data_(std::move(intensities)) {
    check_dims(width, height);
    if (data_.size() != static_cast<std::size_t>(width) * height)
        throw Error(ErrorCode::Parameter, "intensity buffer does not match image dimensions");
}

BinaryImage::BinaryImage(int width, int height, bool fill) : width_(width), height_(height) {
    check_dims(width, height);
    data_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

bool BinaryImage::contains(const AxisRect& r) const {
    return r.x >= 0 && r.y >= 0 && r.w >= 1 && r.h >= 1 && r.x + r.w <= width_ && r.y + r.h <= height_;
}

int otsu_level(const GrayImage& img) {
    std::array<std::uint64_t, 256> hist{};
    for (auto v : img.data()) ++hist[v];

    const double total = static_cast<double>(img.data().size());
    double sum_all = 0.0;
    for (int i = 0; i < 256; ++i) sum_all += static_cast<double>(i) * static_cast<double>(hist[i]);

    double weight_low = 0.0;
    double sum_low = 0.0;
    double best = -1.0;
    int best_level = 0;
    for (int t = 0; t < 256; ++t) {
        weight_low += static_cast<double>(hist[t]);
        sum_low += static_cast<double>(t) * static_cast<double>(hist[t]);
        const double weight_high = total - weight_low;
        double between = 0.0;
        if (weight_low > 0.0 && weight_high > 0.0) {
            const double mean_low = sum_low / weight_low;
            const double mean_high = (sum_all - sum_low) / weight_high;
            between = weight_low * weight_high * (mean_low - mean_high) * (mean_low - mean_high);
        }
        if (between > best) {
            best = between;
            best_level = t;
        }
    }
    return best_level;
}

BinaryImage threshold(const GrayImage& img, const ThresholdMethod& method) {
    int level = 0;
    if (const auto* fixed = std::get_if<FixedLevel>(&method)) {
        if (fixed->level < 0 || fixed->level > 255)
            throw Error(ErrorCode::Parameter, "threshold level must be in [0,255]");
        level = fixed->level;
    } else {
        level = otsu_level(img);
    }

    BinaryImage out(img.width(), img.height());
    const auto src = img.data();
    for (int y = 0; y < img.height(); ++y) {
        std::uint8_t* dst = out.row(y);
        const std::uint8_t* in = src.data() + static_cast<std::size_t>(y) * img.width();
        for (int x = 0; x < img.width(); ++x) dst[x] = in[x] > level ? 1 : 0;
    }
    return out;
}

GrayImage to_gray(const BinaryImage& img) {
    std::vector<std::uint8_t> px(static_cast<std::size_t>(img.width()) * img.height());
    for (int y = 0; y < img.height(); ++y) {
        const std::uint8_t* in = img.row(y);
        std::transform(in, in + img.width(), px.begin() + static_cast<std::ptrdiff_t>(y) * img.width(),
                       [](std::uint8_t v) { return static_cast<std::uint8_t>(v ? 255 : 0); });
    }
    return GrayImage(img.width(), img.height(), std::move(px));
}

std::size_t count_white(const BinaryImage& img) { return count_white(img, img.extent()); }

std::size_t count_white(const BinaryImage& img, const AxisRect& region) {
    check_region(img, region);
    std::size_t n = 0;
    for (int y = region.y; y < region.y + region.h; ++y) {
        const std::uint8_t* r = img.row(y);
        for (int x = region.x; x < region.x + region.w; ++x) n += r[x];
    }
    return n;
}

AxisRect white_bounds(const BinaryImage& img) {
    int x0 = img.width(), y0 = img.height(), x1 = -1, y1 = -1;
    for (int y = 0; y < img.height(); ++y) {
        const std::uint8_t* r = img.row(y);
        for (int x = 0; x < img.width(); ++x) {
            if (!r[x]) continue;
            x0 = std::min(x0, x);
            x1 = std::max(x1, x);
            y0 = std::min(y0, y);
            y1 = y;
        }
    }
    if (x1 < 0) return {0, 0, 0, 0};
    return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::vector<Component> connected_components(const BinaryImage& img, std::size_t min_area) {
    const int w = img.width();
    const int h = img.height();
    std::vector<std::int32_t> labels(static_cast<std::size_t>(w) * h, 0);
    std::vector<PixelPoint> stack;
    std::vector<PixelPoint> members;

    struct Found {
        AxisRect rect;
        std::int32_t label;
        std::size_t area;
    };
    std::vector<Found> found;

    std::int32_t next = 0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t idx = static_cast<std::size_t>(y) * w + x;
            if (!img.row(y)[x] || labels[idx] != 0) continue;

            const std::int32_t label = ++next;
            labels[idx] = label;
            stack.assign(1, {x, y});
            int x0 = x, x1 = x, y0 = y, y1 = y;
            std::size_t area = 0;
            while (!stack.empty()) {
                const PixelPoint p = stack.back();
                stack.pop_back();
                ++area;
                x0 = std::min(x0, p.x);
                x1 = std::max(x1, p.x);
                y0 = std::min(y0, p.y);
                y1 = std::max(y1, p.y);
                for (int dy = -1; dy <= 1; ++dy) {
                    const int ny = p.y + dy;
                    if (ny < 0 || ny >= h) continue;
                    const std::uint8_t* r = img.row(ny);
                    for (int dx = -1; dx <= 1; ++dx) {
                        const int nx = p.x + dx;
                        if (nx < 0 || nx >= w || !r[nx]) continue;
                        std::int32_t& l = labels[static_cast<std::size_t>(ny) * w + nx];
                        if (l != 0) continue;
                        l = label;
                        stack.push_back({nx, ny});
                    }
                }
            }
            if (area >= min_area) found.push_back({{x0, y0, x1 - x0 + 1, y1 - y0 + 1}, label, area});
        }
    }

    std::stable_sort(found.begin(), found.end(), [](const Found& a, const Found& b) {
        return a.rect.y != b.rect.y ? a.rect.y < b.rect.y : a.rect.x < b.rect.x;
    });

    std::vector<Component> out;
    out.reserve(found.size());
    for (const auto& f : found) {
        BinaryImage mask(f.rect.w, f.rect.h);
        for (int y = 0; y < f.rect.h; ++y) {
            const std::int32_t* l = labels.data() + static_cast<std::size_t>(y + f.rect.y) * w + f.rect.x;
            std::uint8_t* dst = mask.row(y);
            for (int x = 0; x < f.rect.w; ++x) dst[x] = l[x] == f.label ? 1 : 0;
        }
        out.push_back({std::move(mask), f.rect, f.area});
    }
    return out;
}

BinaryImage crop(const BinaryImage& img, const AxisRect& region) {
    check_region(img, region);
    BinaryImage out(region.w, region.h);
    for (int y = 0; y < region.h; ++y) {
        const std::uint8_t* src = img.row(region.y + y) + region.x;
        std::copy(src, src + region.w, out.row(y));
    }
    return out;
}

BinaryImage rotate180(const BinaryImage& img) {
    const int w = img.width();
    const int h = img.height();
    BinaryImage out(w, h);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.row(y);
        std::uint8_t* dst = out.row(h - 1 - y);
        for (int x = 0; x < w; ++x) dst[w - 1 - x] = src[x];
    }
    return out;
}

BinaryImage rotate90(const BinaryImage& img) {
    const int w = img.width();
    const int h = img.height();
    BinaryImage out(h, w);
    for (int y = 0; y < h; ++y) {
        const std::uint8_t* src = img.row(y);
        for (int x = 0; x < w; ++x) out.row(x)[h - 1 - y] = src[x];
    }
    return out;
}

BinaryImage pad(const BinaryImage& img, int margin) {
    if (margin < 0) throw Error(ErrorCode::Parameter, "negative pad margin");
    BinaryImage out(img.width() + 2 * margin, img.height() + 2 * margin);
    for (int y = 0; y < img.height(); ++y) std::copy(img.row(y), img.row(y) + img.width(), out.row(y + margin) + margin);
    return out;
}

namespace {

class PgmHeaderReader {
public:
    explicit PgmHeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::size_t pos() const { return pos_; }

    void skip_separators() {
        bool any = false;
        while (pos_ < bytes_.size()) {
            const auto c = bytes_[pos_];
            if (c == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
                any = true;
            } else if (std::isspace(c)) {
                ++pos_;
                any = true;
            } else {
                break;
            }
        }
        if (!any) throw FormatError("pgm: expected whitespace", pos_);
    }

    long number() {
        const std::size_t start = pos_;
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_] - '0');
            if (v > 1'000'000) throw FormatError("pgm: header value too large", start);
            ++pos_;
        }
        if (pos_ == start) throw FormatError("pgm: expected decimal number", start);
        return v;
    }

    void single_whitespace() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
            throw FormatError("pgm: expected single whitespace after maxval", pos_);
        ++pos_;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw FormatError("pgm: missing P5 magic", 0);
    PgmHeaderReader rd(bytes.subspan(2));
    rd.skip_separators();
    const long w = rd.number();
    rd.skip_separators();
    const long h = rd.number();
    rd.skip_separators();
    const std::size_t maxval_at = rd.pos() + 2;
    const long maxval = rd.number();
    if (maxval != 255) throw FormatError("pgm: maxval must be 255, got " + std::to_string(maxval), maxval_at);
    rd.single_whitespace();
    if (w <= 0 || h <= 0) throw FormatError("pgm: zero dimension", 2);

    const std::size_t offset = rd.pos() + 2;
    const std::size_t need = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    if (bytes.size() - offset < need) throw FormatError("pgm: truncated payload", bytes.size());
    std::vector<std::uint8_t> px(bytes.begin() + static_cast<std::ptrdiff_t>(offset),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(offset + need));
    return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

std::vector<std::uint8_t> write_pgm(const GrayImage& img) {
    const std::string header =
        "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.data().begin(), img.data().end());
    return out;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Format, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_pgm(bytes);
}

void save_pgm(const std::filesystem::path& path, const GrayImage& img) {
    const auto bytes = write_pgm(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Format, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace boltid
