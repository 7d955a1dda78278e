#include "boltid/identify.hpp"

#include "boltid/error.hpp"
#include "text.hpp"

#include <cmath>
#include <set>

namespace boltid {

LookupTable::LookupTable(std::vector<TemplateEntry> entries, double px_per_mm)
    : entries_(std::move(entries)), px_per_mm_(px_per_mm) {
    if (entries_.empty()) throw Error(ErrorCode::Config, "lookup table is empty");
    if (!(px_per_mm_ > 0.0) || !std::isfinite(px_per_mm_))
        throw Error(ErrorCode::Config, "lookup table px_per_mm must be positive");
    std::set<std::string> names;
    for (const auto& e : entries_) {
        if (!text::csv_safe(e.name)) throw Error(ErrorCode::Config, "lookup table entry name '" + e.name + "' is not a plain CSV field");
        if (!names.insert(e.name).second) throw Error(ErrorCode::Config, "duplicate lookup table entry " + e.name);
        if (!(e.width_px > 0.0) || !(e.height_px >= e.width_px))
            throw Error(ErrorCode::Config, "entry " + e.name + " needs height >= width > 0");
    }
}

MatchResult nearest_match(const BoltFeatures& features, const LookupTable& table, double reject_frac) {
    const auto& entries = table.entries();
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const double d = std::hypot(features.major_px - entries[i].height_px, features.minor_px - entries[i].width_px);
        const bool agrees = entries[i].threading == features.threading;
        const bool best_agrees = entries[best].threading == features.threading;
        if (d < best_d || (d == best_d && agrees && !best_agrees)) {
            best = i;
            best_d = d;
        }
    }
    MatchResult m;
    m.name = entries[best].name;
    m.index = best;
    m.distance_px = best_d;
    m.major_mm = px_to_mm(features.major_px, table);
    m.minor_mm = px_to_mm(features.minor_px, table);
    m.threading_agreed = entries[best].threading == features.threading;
    m.unknown = best_d > reject_frac * features.major_px;
    return m;
}

double px_to_mm(double px, const LookupTable& table) { return px / table.px_per_mm(); }

std::vector<std::string> collision_warnings(const LookupTable& table, double rel) {
    std::vector<std::string> out;
    const auto& e = table.entries();
    auto close = [rel](double a, double b) { return std::abs(a - b) < rel * std::max(a, b); };
    for (std::size_t i = 0; i < e.size(); ++i)
        for (std::size_t j = i + 1; j < e.size(); ++j)
            if (close(e[i].width_px, e[j].width_px) && close(e[i].height_px, e[j].height_px))
                out.push_back("entries " + e[i].name + " and " + e[j].name + " differ by less than " +
                              text::format_double(rel * 100.0) + "% in both dimensions");
    return out;
}

EnrollResult enroll(const std::vector<std::pair<std::string, BinaryImage>>& samples, double px_per_mm,
                    const PipelineConfig& cfg) {
    std::vector<TemplateEntry> entries;
    std::set<std::string> seen;
    for (const auto& [name, image] : samples) {
        if (!seen.insert(name).second) throw Error(ErrorCode::Enrollment, "duplicate sample name " + name);
        try {
            auto comps = connected_components(image, cfg.min_component_area);
            if (comps.empty()) throw Error(ErrorCode::EmptyInput, "no component above the minimum area", "orient");
            const Component* big = &comps.front();
            for (const auto& c : comps)
                if (c.area > big->area) big = &c;

            const OrientedBolt bolt = orient(big->mask);
            const Axes axes = measure_axes(bolt);
            const HeadCut cut = remove_head(bolt, axes.minor_px, cfg.thresh, cfg.head_frac);
            const ThreadingType t = classify_threading(cut.body, axes.minor_px, cfg).type;
            entries.push_back({name, axes.minor_px, axes.major_px, t});
        } catch (const Error& e) {
            throw Error(ErrorCode::Enrollment, "sample " + name + ": " + std::string(code_name(e.code())) + ": " + e.what());
        }
    }
    LookupTable table(std::move(entries), px_per_mm);
    auto warnings = collision_warnings(table);
    return {std::move(table), std::move(warnings)};
}

namespace {

constexpr std::string_view kHeader = "name,width_px,height_px,threading";
constexpr std::string_view kFactorPrefix = "# px_per_mm=";

}  // namespace

std::string save_table(const LookupTable& table) {
    std::string out = std::string(kFactorPrefix) + text::format_double(table.px_per_mm()) + "\n";
    out += std::string(kHeader) + "\n";
    for (const auto& e : table.entries())
        out += e.name + "," + text::format_double(e.width_px) + "," + text::format_double(e.height_px) + "," +
               std::string(short_name(e.threading)) + "\n";
    return out;
}

LookupTable load_table(std::string_view csv) {
    const auto rows = text::lines(csv);
    std::size_t i = 0;
    double factor = 0.0;
    bool have_factor = false;
    if (!rows.empty() && text::trim(rows[0]).starts_with(kFactorPrefix)) {
        const auto v = text::parse_double(text::trim(text::trim(rows[0]).substr(kFactorPrefix.size())));
        if (!v || !(*v > 0.0)) throw FormatError("table: bad px_per_mm comment", 1);
        factor = *v;
        have_factor = true;
        ++i;
    }
    if (i >= rows.size() || text::trim(rows[i]) != kHeader)
        throw FormatError("table: expected header " + std::string(kHeader), i + 1);
    if (!have_factor) throw FormatError("table: missing '# px_per_mm=' line", 1);
    ++i;

    std::vector<TemplateEntry> entries;
    std::set<std::string> names;
    for (; i < rows.size(); ++i) {
        const std::size_t line = i + 1;
        const auto row = text::trim(rows[i]);
        if (row.empty()) continue;
        const auto f = text::split(row, ',');
        if (f.size() != 4) throw FormatError("table: expected 4 fields", line);
        TemplateEntry e;
        e.name = std::string(text::trim(f[0]));
        const auto w = text::parse_double(text::trim(f[1]));
        const auto h = text::parse_double(text::trim(f[2]));
        if (!w || !h) throw FormatError("table: non-numeric dimension", line);
        const auto t = parse_threading(text::trim(f[3]));
        if (!t) throw FormatError("table: threading must be FT or HT", line);
        if (e.name.empty()) throw FormatError("table: empty name", line);
        if (!names.insert(e.name).second) throw FormatError("table: duplicate name " + e.name, line);
        if (!(*w > 0.0) || !(*h >= *w)) throw FormatError("table: need height >= width > 0", line);
        e.width_px = *w;
        e.height_px = *h;
        e.threading = *t;
        entries.push_back(std::move(e));
    }
    if (entries.empty()) throw FormatError("table: no entries", rows.size() + 1);
    return LookupTable(std::move(entries), factor);
}

}  // namespace boltid
