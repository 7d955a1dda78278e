#include "boltid/cli.hpp"
#include "boltid/config.hpp"
#include "boltid/error.hpp"
#include "boltid/report.hpp"
#include "boltid/synth.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace boltid;
namespace fs = std::filesystem;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void put(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

void save_render(const fs::path& p, const char* name, double angle) {
    save_pgm(p, testsupport::render(name, angle).image);
}

std::map<std::string, double> bench_means(const std::string& out) {
    std::map<std::string, double> m;
    std::istringstream in(out);
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        const auto c1 = line.find(',');
        const auto c2 = line.find(',', c1 + 1);
        m[line.substr(0, c1)] = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
    }
    return m;
}

}  // namespace

TEST_CASE("gen renders the catalog at every angle") {
    testsupport::TempDir dir("gen");
    const Result r = run({"gen", "--catalog", "builtin", "--angles", "12", "--seed", "3", "--out", dir.path.string()});
    REQUIRE(r.code == 0);
    std::size_t pgms = 0;
    for (const auto& e : fs::directory_iterator(dir.path)) pgms += e.path().extension() == ".pgm";
    CHECK(pgms == 396);
    const std::string manifest = slurp(dir.path / "manifest.csv");
    CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 397);
    CHECK(manifest.rfind("file,name,angle_deg,noise\n", 0) == 0);
    CHECK(fs::exists(dir.path / "0000_M5x12_FT_a000.pgm"));
}

TEST_CASE("gen is deterministic for a fixed seed and applies the noise rate") {
    testsupport::TempDir a("gen_a"), b("gen_b"), c("gen_c");
    const std::vector<std::string> base = {"gen", "--count", "3", "--bolts-per-frame", "2", "--noise", "0.005", "--seed", "9"};
    auto with_out = [&](const fs::path& p) {
        auto v = base;
        v.push_back("--out");
        v.push_back(p.string());
        return v;
    };
    REQUIRE(run(with_out(a.path)).code == 0);
    REQUIRE(run(with_out(b.path)).code == 0);
    for (const char* f : {"0000.pgm", "0001.pgm", "0002.pgm", "manifest.csv"}) CHECK(slurp(a.path / f) == slurp(b.path / f));

    // Same frames without noise: the differing pixel count follows the rate.
    auto clean = with_out(c.path);
    clean[6] = "0";
    REQUIRE(run(clean).code == 0);
    const GrayImage noisy = load_pgm(a.path / "0000.pgm");
    const GrayImage plain = load_pgm(c.path / "0000.pgm");
    REQUIRE(noisy.width() == plain.width());
    std::size_t diff = 0;
    for (std::size_t i = 0; i < noisy.data().size(); ++i) diff += noisy.data()[i] != plain.data()[i];
    const double n = static_cast<double>(noisy.data().size());
    CHECK(std::abs(static_cast<double>(diff) - 0.005 * n) <= 3 * std::sqrt(n * 0.005 * 0.995));

    CHECK(run({"gen", "--out", c.path.string()}).code == 2);
    CHECK(run({"gen", "--angles", "2", "--noise", "0.2", "--out", c.path.string()}).code == 2);
}

TEST_CASE("enroll and identify through the command line") {
    testsupport::TempDir dir("cli");
    const char* names[] = {"M8x35_HT", "M10x50_HT", "M10x35_FT", "M4x75_FT"};
    std::string manifest = "file,name\n";
    for (const char* n : names) {
        save_render(dir.path / (std::string(n) + ".pgm"), n, 0.0);
        manifest += std::string(n) + ".pgm," + n + "\n";
    }
    put(dir.path / "manifest.csv", manifest);
    const fs::path table = dir.path / "table.csv";
    const Result e = run({"enroll", "--manifest", (dir.path / "manifest.csv").string(), "--out", table.string()});
    REQUIRE(e.code == 0);
    const LookupTable t = load_table(slurp(table));
    CHECK(t.entries().size() == 4);
    CHECK(t.px_per_mm() == synth::kDefaultPxPerMm);

    SUBCASE("a frame with six bolts gives six records") {
        std::vector<synth::Placement> bolts;
        const double xs[] = {500, 1500};
        const double ys[] = {350, 1000, 1650};
        for (int i = 0; i < 6; ++i)
            bolts.push_back({testsupport::spec_named(names[i % 3]), {xs[i % 2], ys[i / 2]}, 10.0 * i});
        const auto scene = synth::render_scene(2000, 2000, bolts, synth::kDefaultPxPerMm);
        save_pgm(dir.path / "six.pgm", scene.image);
        const Result r = run({"identify", (dir.path / "six.pgm").string(), "--table", table.string(), "--json", "-"});
        REQUIRE(r.code == 0);
        const auto j = nlohmann::ordered_json::parse(r.out);
        CHECK(j["records"].size() == 6);
        CHECK(j["summary"]["components"] == 6);
        for (const auto& rec : j["records"]) CHECK(rec["match"]["unknown"] == false);
    }

    SUBCASE("truth manifest gives accuracy counts") {
        save_render(dir.path / "q.pgm", "M10x50_HT", 130.0);
        put(dir.path / "truth.csv", "file,name\nq.pgm,M10x50_HT\n");
        const Result r = run({"identify", (dir.path / "q.pgm").string(), "--table", table.string(), "--truth",
                              (dir.path / "truth.csv").string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("true_positive=1 false_positive=0 accuracy=1.0000") != std::string::npos);
    }

    SUBCASE("an empty frame warns and an unreadable one fails") {
        save_pgm(dir.path / "empty.pgm", BinaryImage(300, 300));
        Result r = run({"identify", (dir.path / "empty.pgm").string(), "--table", table.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("components=0") != std::string::npos);
        CHECK(r.err.find("warning") != std::string::npos);

        put(dir.path / "junk.pgm", "not an image");
        r = run({"identify", (dir.path / "junk.pgm").string(), (dir.path / "empty.pgm").string(), "--table",
                 table.string()});
        CHECK(r.code == 0);
        CHECK(r.out.find("failed=1") != std::string::npos);
        r = run({"identify", (dir.path / "junk.pgm").string(), "--table", table.string()});
        CHECK(r.code == 1);
        CHECK(run({"identify", (dir.path / "empty.pgm").string(), "--table", (dir.path / "none.csv").string()}).code ==
              2);
    }

    SUBCASE("enroll errors exit with a usage code") {
        put(dir.path / "missing.csv", "file,name\nnope.pgm,X\n");
        CHECK(run({"enroll", "--manifest", (dir.path / "missing.csv").string(), "--out", table.string()}).code == 2);
        put(dir.path / "dup.csv", "file,name\nM8x35_HT.pgm,A\nM4x75_FT.pgm,A\n");
        CHECK(run({"enroll", "--manifest", (dir.path / "dup.csv").string(), "--out", table.string()}).code == 2);
        put(dir.path / "bad.csv", "image,label\n");
        CHECK(run({"enroll", "--manifest", (dir.path / "bad.csv").string(), "--out", table.string()}).code == 2);
    }
}

TEST_CASE("measure prints features and stage errors") {
    testsupport::TempDir dir("measure");
    const auto r = testsupport::render("M10x50_HT", 0.0);
    save_pgm(dir.path / "m.pgm", r.image);
    const Result m = run({"measure", (dir.path / "m.pgm").string(), "--json", "-", "--px-per-mm", "12.42"});
    REQUIRE(m.code == 0);
    const auto j = nlohmann::ordered_json::parse(m.out);
    REQUIRE(j["records"].size() == 1);
    const auto& f = j["records"][0]["features"];
    CHECK(std::abs(f["major_px"].get<double>() - r.truth.major_px) <= 2.0);
    CHECK(std::abs(f["minor_px"].get<double>() - r.truth.minor_px) <= 2.0);
    CHECK(f["threading"] == "HT");
    CHECK(std::abs(f["pitch_mm"].get<double>() - 1.5) <= 0.07);

    const Result text = run({"measure", (dir.path / "m.pgm").string()});
    CHECK(text.code == 0);
    CHECK(text.out.find("threading=HT") != std::string::npos);
    CHECK(text.out.find("major_mm") == std::string::npos);

    save_pgm(dir.path / "black.pgm", BinaryImage(64, 64));
    const Result black = run({"measure", (dir.path / "black.pgm").string()});
    CHECK(black.code == 1);
    CHECK(black.err.find("empty-input at orient") != std::string::npos);
}

TEST_CASE("config precedence: flag over file over default") {
    testsupport::TempDir dir("cfg");
    save_render(dir.path / "m.pgm", "M8x35_HT", 0.0);
    put(dir.path / "c.cfg", "# tuned\nthresh=3\nnudge=4\n");
    const Result r = run({"measure", (dir.path / "m.pgm").string(), "--json", "-", "--config",
                          (dir.path / "c.cfg").string(), "--nudge", "1"});
    REQUIRE(r.code == 0);
    const auto cfg = nlohmann::ordered_json::parse(r.out)["config"];
    CHECK(cfg["thresh"] == "3");
    CHECK(cfg["nudge"] == "1");
    CHECK(cfg["perim_ratio"] == "1.15");

    put(dir.path / "bad.cfg", "thresh=-2\n");
    CHECK(run({"measure", (dir.path / "m.pgm").string(), "--config", (dir.path / "bad.cfg").string()}).code == 2);
    CHECK(run({"measure", (dir.path / "m.pgm").string(), "--head-frac", "abc"}).code == 2);
    CHECK(run({"frobnicate"}).code == 2);
}

TEST_CASE("config text round trip") {
    PipelineConfig c;
    c.thresh = 2;
    c.reject_frac = std::numeric_limits<double>::infinity();
    c.threshold = "100";
    c.px_per_mm = 1.0 / 3.0;
    CHECK(parse_config(serialize_config(c)) == c);
    CHECK(config_keys().size() == config_entries(c).size());
    CHECK_THROWS_AS(parse_config("bogus=1\n"), Error);
    CHECK_THROWS_AS(parse_config("threshold=300\n"), Error);
    CHECK(parse_config("  # comment only\n\n") == PipelineConfig{});
}

TEST_CASE("json report round trip") {
    RunReport r;
    r.config = config_entries(PipelineConfig{});
    r.files = {{"a.pgm", true, "", 1}, {"b.pgm", false, "format: bad", 0}};
    ComponentRecord c;
    c.input = "a.pgm";
    c.rect = {1, 2, 3, 4};
    c.features = FeatureRecord{400.5, 100.25, "HT", 15.5, 30000, 1200.75, 32.2, 8.1, std::nullopt};
    c.match = MatchRecord{"M8x35_HT", 1.5, 32.7, 8.0, true, false};
    c.truth = "M8x35_HT";
    c.correct = true;
    r.records = {c};
    r.summary = {2, 1, 1, 1, 0, 1, 1, 0};
    r.timings = {{"a.pgm", 0, {{"orient", 1.25}, {"total", 3.5}}}};
    CHECK(report_from_json(to_json(r)) == r);
    CHECK(report_from_json(nlohmann::ordered_json::parse(to_json(r).dump())) == r);
}

TEST_CASE("bench reports every stage") {
    CHECK(run({"bench", "--synthetic", "--reps", "0"}).code == 2);
    const Result r = run({"bench", "--synthetic", "--reps", "3"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("stage,mean_ms,p95_ms\n", 0) == 0);
    const auto m = bench_means(r.out);
    REQUIRE(m.count("total") == 1);
    double sum = 0.0;
    for (const auto& [stage, v] : m) {
        CHECK(v >= 0.0);
        if (stage != "total") sum += v;
    }
    CHECK(m.size() == 9);
    CHECK(sum <= m.at("total") * 1.05);
}
