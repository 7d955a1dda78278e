#pragma once

#include "boltid/config.hpp"
#include "boltid/identify.hpp"
#include "boltid/image.hpp"
#include "boltid/pipeline.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace boltid {

struct FeatureRecord {
    double major_px = 0.0;
    double minor_px = 0.0;
    std::string threading;  // "FT" / "HT"
    std::optional<double> pitch_px;
    double area_px = 0.0;
    double perimeter_px = 0.0;
    std::optional<double> major_mm;
    std::optional<double> minor_mm;
    std::optional<double> pitch_mm;

    friend bool operator==(const FeatureRecord&, const FeatureRecord&) = default;
};

struct MatchRecord {
    std::string name;
    double distance_px = 0.0;
    double major_mm = 0.0;
    double minor_mm = 0.0;
    bool threading_agreed = false;
    bool unknown = false;

    friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

struct ComponentRecord {
    std::string input;
    int component = 0;
    AxisRect rect;
    std::optional<FeatureRecord> features;
    std::optional<MatchRecord> match;
    std::string error;
    /// Expected name from a ground-truth manifest, when one was given.
    std::optional<std::string> truth;
    std::optional<bool> correct;

    friend bool operator==(const ComponentRecord&, const ComponentRecord&) = default;
};

struct FileRecord {
    std::string input;
    bool ok = true;
    std::string message;
    int components = 0;

    friend bool operator==(const FileRecord&, const FileRecord&) = default;
};

struct Summary {
    int images = 0;
    int failed_images = 0;
    int components = 0;
    int measured = 0;
    int unknown = 0;
    int labeled = 0;
    int true_positive = 0;
    int false_positive = 0;

    friend bool operator==(const Summary&, const Summary&) = default;
};

struct TimingRecord {
    std::string input;
    int component = 0;
    std::vector<std::pair<std::string, double>> stages_ms;

    friend bool operator==(const TimingRecord&, const TimingRecord&) = default;
};

/// Output of the identify and measure commands. Everything except
/// `timings` is a deterministic function of the inputs and config.
struct RunReport {
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<FileRecord> files;
    std::vector<ComponentRecord> records;
    Summary summary;
    std::vector<TimingRecord> timings;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

FeatureRecord make_feature_record(const BoltFeatures& f, double px_per_mm);
MatchRecord make_match_record(const MatchResult& m);
std::vector<std::pair<std::string, double>> timing_stages(const StageTimings& t);

nlohmann::ordered_json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::ordered_json& j);

}  // namespace boltid
