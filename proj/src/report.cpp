#include "boltid/report.hpp"

#include "boltid/error.hpp"

namespace boltid {

using json = nlohmann::ordered_json;

FeatureRecord make_feature_record(const BoltFeatures& f, double px_per_mm) {
    FeatureRecord r;
    r.major_px = f.major_px;
    r.minor_px = f.minor_px;
    r.threading = std::string(short_name(f.threading));
    r.pitch_px = f.pitch_px;
    r.area_px = f.area_px;
    r.perimeter_px = f.perimeter_px;
    if (px_per_mm > 0.0) {
        r.major_mm = f.major_px / px_per_mm;
        r.minor_mm = f.minor_px / px_per_mm;
        if (f.pitch_px) r.pitch_mm = *f.pitch_px / px_per_mm;
    }
    return r;
}

MatchRecord make_match_record(const MatchResult& m) {
    return {m.name, m.distance_px, m.major_mm, m.minor_mm, m.threading_agreed, m.unknown};
}

std::vector<std::pair<std::string, double>> timing_stages(const StageTimings& t) {
    return {{"orient", t.orient_ms},
            {"measure_axes", t.axes_ms},
            {"area_perimeter", t.area_perimeter_ms},
            {"remove_head", t.remove_head_ms},
            {"classify_threading", t.threading_ms},
            {"estimate_pitch", t.pitch_ms},
            {"total", t.total_ms}};
}

namespace {

template <typename T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

template <typename T>
std::optional<T> get_opt(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<T>();
}

json features_json(const FeatureRecord& f) {
    return {{"major_px", f.major_px}, {"minor_px", f.minor_px},     {"threading", f.threading},
            {"pitch_px", opt(f.pitch_px)}, {"area_px", f.area_px}, {"perimeter_px", f.perimeter_px},
            {"major_mm", opt(f.major_mm)}, {"minor_mm", opt(f.minor_mm)}, {"pitch_mm", opt(f.pitch_mm)}};
}

FeatureRecord features_from(const json& j) {
    FeatureRecord f;
    f.major_px = j.at("major_px").get<double>();
    f.minor_px = j.at("minor_px").get<double>();
    f.threading = j.at("threading").get<std::string>();
    f.pitch_px = get_opt<double>(j, "pitch_px");
    f.area_px = j.at("area_px").get<double>();
    f.perimeter_px = j.at("perimeter_px").get<double>();
    f.major_mm = get_opt<double>(j, "major_mm");
    f.minor_mm = get_opt<double>(j, "minor_mm");
    f.pitch_mm = get_opt<double>(j, "pitch_mm");
    return f;
}

json match_json(const MatchRecord& m) {
    return {{"name", m.name},         {"distance_px", m.distance_px},           {"major_mm", m.major_mm},
            {"minor_mm", m.minor_mm}, {"threading_agreed", m.threading_agreed}, {"unknown", m.unknown}};
}

MatchRecord match_from(const json& j) {
    return {j.at("name").get<std::string>(), j.at("distance_px").get<double>(), j.at("major_mm").get<double>(),
            j.at("minor_mm").get<double>(), j.at("threading_agreed").get<bool>(), j.at("unknown").get<bool>()};
}

}  // namespace

json to_json(const RunReport& r) {
    json j;
    json cfg = json::object();
    for (const auto& [k, v] : r.config) cfg[k] = v;
    j["config"] = cfg;

    json files = json::array();
    for (const auto& f : r.files)
        files.push_back({{"input", f.input}, {"ok", f.ok}, {"message", f.message}, {"components", f.components}});
    j["files"] = files;

    json records = json::array();
    for (const auto& c : r.records) {
        json rec = {{"input", c.input},
                    {"component", c.component},
                    {"rect", {{"x", c.rect.x}, {"y", c.rect.y}, {"w", c.rect.w}, {"h", c.rect.h}}},
                    {"features", c.features ? features_json(*c.features) : json(nullptr)},
                    {"match", c.match ? match_json(*c.match) : json(nullptr)},
                    {"error", c.error},
                    {"truth", opt(c.truth)},
                    {"correct", opt(c.correct)}};
        records.push_back(std::move(rec));
    }
    j["records"] = records;

    const Summary& s = r.summary;
    j["summary"] = {{"images", s.images},       {"failed_images", s.failed_images},
                    {"components", s.components}, {"measured", s.measured},
                    {"unknown", s.unknown},     {"labeled", s.labeled},
                    {"true_positive", s.true_positive}, {"false_positive", s.false_positive}};

    json timings = json::array();
    for (const auto& t : r.timings) {
        json stages = json::object();
        for (const auto& [k, v] : t.stages_ms) stages[k] = v;
        timings.push_back({{"input", t.input}, {"component", t.component}, {"stages_ms", stages}});
    }
    j["timings"] = timings;
    return j;
}

RunReport report_from_json(const json& j) {
    try {
        RunReport r;
        for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
        for (const auto& f : j.at("files"))
            r.files.push_back({f.at("input").get<std::string>(), f.at("ok").get<bool>(),
                               f.at("message").get<std::string>(), f.at("components").get<int>()});
        for (const auto& c : j.at("records")) {
            ComponentRecord rec;
            rec.input = c.at("input").get<std::string>();
            rec.component = c.at("component").get<int>();
            const auto& rect = c.at("rect");
            rec.rect = {rect.at("x").get<int>(), rect.at("y").get<int>(), rect.at("w").get<int>(), rect.at("h").get<int>()};
            if (!c.at("features").is_null()) rec.features = features_from(c.at("features"));
            if (!c.at("match").is_null()) rec.match = match_from(c.at("match"));
            rec.error = c.at("error").get<std::string>();
            rec.truth = get_opt<std::string>(c, "truth");
            rec.correct = get_opt<bool>(c, "correct");
            r.records.push_back(std::move(rec));
        }
        const auto& s = j.at("summary");
        r.summary = {s.at("images").get<int>(),   s.at("failed_images").get<int>(), s.at("components").get<int>(),
                     s.at("measured").get<int>(), s.at("unknown").get<int>(),       s.at("labeled").get<int>(),
                     s.at("true_positive").get<int>(), s.at("false_positive").get<int>()};
        for (const auto& t : j.at("timings")) {
            TimingRecord tr;
            tr.input = t.at("input").get<std::string>();
            tr.component = t.at("component").get<int>();
            for (const auto& [k, v] : t.at("stages_ms").items()) tr.stages_ms.emplace_back(k, v.get<double>());
            r.timings.push_back(std::move(tr));
        }
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Format, std::string("report: ") + e.what());
    }
}

}  // namespace boltid
