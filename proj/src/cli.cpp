#include "boltid/cli.hpp"

#include "boltid/config.hpp"
#include "boltid/error.hpp"
#include "boltid/identify.hpp"
#include "boltid/image.hpp"
#include "boltid/pipeline.hpp"
#include "boltid/report.hpp"
#include "boltid/synth.hpp"
#include "text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <thread>

namespace boltid::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

/// Failure that maps straight onto an exit code.
struct Exit {
    int code;
    std::string message;
};

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Exit{kUsage, "cannot read " + p.string()};
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Exit{kRuntime, "cannot write " + p.string()};
    out << s;
}

std::string flag_for(std::string_view key) {
    std::string f = "--" + std::string(key);
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

/// --config plus one override flag per config key.
struct ConfigOptions {
    std::string config_path;
    std::map<std::string, std::string> overrides;

    void attach(CLI::App& cmd) {
        cmd.add_option("--config", config_path, "key=value pipeline config file");
        for (auto key : config_keys()) {
            const std::string k(key);
            cmd.add_option_function<std::string>(
                flag_for(key), [this, k](const std::string& v) { overrides[k] = v; }, "override '" + k + "'");
        }
    }

    PipelineConfig resolve() const {
        try {
            PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : parse_config(read_text(config_path));
            for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
            cfg.validate();
            return cfg;
        } catch (const Error& e) {
            throw Exit{kUsage, e.what()};
        }
    }
};

struct ManifestRow {
    std::string file;
    std::string name;
    std::optional<double> angle_deg;
    std::optional<double> noise;
};

std::vector<ManifestRow> parse_manifest(const std::string& csv) {
    const auto rows = text::lines(csv);
    if (rows.empty() || !text::trim(rows[0]).starts_with("file,name"))
        throw Exit{kUsage, "manifest: header must start with 'file,name'"};
    std::vector<ManifestRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto row = text::trim(rows[i]);
        if (row.empty()) continue;
        const auto f = text::split(row, ',');
        if (f.size() < 2 || f.size() > 4)
            throw Exit{kUsage, "manifest line " + std::to_string(i + 1) + ": expected 2 to 4 fields"};
        ManifestRow m{std::string(text::trim(f[0])), std::string(text::trim(f[1])), {}, {}};
        if (f.size() > 2) m.angle_deg = text::parse_double(text::trim(f[2]));
        if (f.size() > 3) m.noise = text::parse_double(text::trim(f[3]));
        out.push_back(std::move(m));
    }
    return out;
}

std::string format_manifest(const std::vector<ManifestRow>& rows) {
    std::string out = "file,name,angle_deg,noise\n";
    for (const auto& r : rows)
        out += r.file + "," + r.name + "," + text::format_double(r.angle_deg.value_or(0.0)) + "," +
               text::format_double(r.noise.value_or(0.0)) + "\n";
    return out;
}

BinaryImage load_binary(const fs::path& p, const PipelineConfig& cfg) {
    return threshold(load_pgm(p), cfg.threshold_method());
}

void emit_json(const json& j, const std::string& path, std::ostream& out) {
    const std::string doc = j.dump(2) + "\n";
    if (path == "-") out << doc;
    else write_text(path, doc);
}

// ---------------------------------------------------------------- enroll

int cmd_enroll(const std::string& manifest_path, std::string images_dir, const std::string& out_path,
               const PipelineConfig& cfg, std::ostream& out, std::ostream& err) {
    const auto rows = parse_manifest(read_text(manifest_path));
    if (images_dir.empty()) images_dir = fs::path(manifest_path).parent_path().string();

    std::vector<std::pair<std::string, BinaryImage>> samples;
    std::vector<std::string> seen;
    for (const auto& r : rows) {
        if (std::find(seen.begin(), seen.end(), r.name) != seen.end()) throw Exit{kUsage, "duplicate name " + r.name};
        seen.push_back(r.name);
        const fs::path p = fs::path(images_dir) / r.file;
        if (!fs::exists(p)) throw Exit{kUsage, "missing file " + p.string()};
        try {
            samples.emplace_back(r.name, load_binary(p, cfg));
        } catch (const Error& e) {
            throw Exit{kRuntime, p.string() + ": " + e.what()};
        }
    }
    const double factor = cfg.px_per_mm > 0.0 ? cfg.px_per_mm : synth::kDefaultPxPerMm;
    try {
        EnrollResult res = enroll(samples, factor, cfg);
        for (const auto& w : res.warnings) err << "warning: " << w << "\n";
        write_text(out_path, save_table(res.table));
        out << "enrolled " << res.table.entries().size() << " entries into " << out_path << "\n";
    } catch (const Error& e) {
        throw Exit{kRuntime, e.what()};
    }
    return kOk;
}

// ---------------------------------------------------------------- identify / measure

struct ImageResult {
    FileRecord file;
    std::vector<FrameItem> items;
};

ImageResult process_image(const std::string& path, const PipelineConfig& cfg) {
    ImageResult r;
    r.file.input = path;
    try {
        r.items = analyze_frame(load_binary(path, cfg), cfg);
        r.file.components = static_cast<int>(r.items.size());
    } catch (const Error& e) {
        r.file.ok = false;
        r.file.message = std::string(code_name(e.code())) + ": " + e.what();
    }
    return r;
}

std::vector<ImageResult> process_all(const std::vector<std::string>& paths, const PipelineConfig& cfg, int jobs) {
    std::vector<ImageResult> results(paths.size());
    jobs = std::max(1, std::min<int>(jobs, static_cast<int>(paths.size())));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < paths.size(); i = next++) results[i] = process_image(paths[i], cfg);
    };
    std::vector<std::thread> pool;
    for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    return results;
}

RunReport build_report(const std::vector<ImageResult>& results, const PipelineConfig& cfg, const LookupTable* table,
                       const std::vector<ManifestRow>* truth) {
    RunReport rep;
    rep.config = config_entries(cfg);

    std::map<std::string, std::vector<std::string>> expected;
    if (truth)
        for (const auto& row : *truth) expected[fs::path(row.file).filename().string()].push_back(row.name);

    for (const auto& res : results) {
        rep.files.push_back(res.file);
        ++rep.summary.images;
        if (!res.file.ok) {
            ++rep.summary.failed_images;
            continue;
        }
        auto remaining = expected[fs::path(res.file.input).filename().string()];
        const bool labeled = truth && !remaining.empty();
        for (std::size_t i = 0; i < res.items.size(); ++i) {
            const FrameItem& item = res.items[i];
            ComponentRecord rec;
            rec.input = res.file.input;
            rec.component = static_cast<int>(i);
            rec.rect = item.component.rect;
            rec.error = item.error;
            ++rep.summary.components;
            if (item.features) {
                ++rep.summary.measured;
                const double factor = cfg.px_per_mm > 0.0 ? cfg.px_per_mm : (table ? table->px_per_mm() : 0.0);
                rec.features = make_feature_record(*item.features, factor);
                if (table) {
                    const MatchResult m = nearest_match(*item.features, *table, cfg.reject_frac);
                    rec.match = make_match_record(m);
                    if (m.unknown) ++rep.summary.unknown;
                }
            }
            if (labeled) {
                ++rep.summary.labeled;
                bool ok = false;
                if (rec.match && !rec.match->unknown) {
                    auto it = std::find(remaining.begin(), remaining.end(), rec.match->name);
                    if (it != remaining.end()) {
                        ok = true;
                        remaining.erase(it);
                    }
                }
                rec.truth = ok ? rec.match->name : (remaining.size() == 1 ? remaining.front() : std::string("?"));
                rec.correct = ok;
                ok ? ++rep.summary.true_positive : ++rep.summary.false_positive;
            }
            rep.records.push_back(std::move(rec));

            TimingRecord tr{res.file.input, static_cast<int>(i), timing_stages(item.timings)};
            rep.timings.push_back(std::move(tr));
        }
    }
    return rep;
}

int cmd_identify(const std::vector<std::string>& images, const std::string& table_path,
                 const std::string& truth_path, const std::string& json_path, int jobs, const PipelineConfig& cfg,
                 std::ostream& out, std::ostream& err) {
    std::optional<LookupTable> table;
    try {
        table = load_table(read_text(table_path));
    } catch (const Error& e) {
        throw Exit{kUsage, table_path + ": " + e.what()};
    }
    std::optional<std::vector<ManifestRow>> truth;
    if (!truth_path.empty()) truth = parse_manifest(read_text(truth_path));

    const auto results = process_all(images, cfg, jobs);
    const RunReport rep = build_report(results, cfg, &*table, truth ? &*truth : nullptr);

    for (const auto& f : rep.files) {
        if (!f.ok) err << "error: " << f.input << ": " << f.message << "\n";
        else if (f.components == 0) err << "warning: " << f.input << ": no components\n";
    }
    if (!json_path.empty()) emit_json(to_json(rep), json_path, out);
    if (json_path != "-") {
        const auto& s = rep.summary;
        out << "images=" << s.images << " failed=" << s.failed_images << " components=" << s.components
            << " unknown=" << s.unknown;
        if (truth) {
            out << " true_positive=" << s.true_positive << " false_positive=" << s.false_positive;
            if (s.labeled > 0)
                out << " accuracy=" << std::fixed << std::setprecision(4)
                    << static_cast<double>(s.true_positive) / s.labeled << std::defaultfloat;
        }
        out << "\n";
    }
    if (!images.empty() && rep.summary.failed_images == rep.summary.images) return kRuntime;
    return kOk;
}

int cmd_measure(const std::string& image, const std::string& json_path, const PipelineConfig& cfg, std::ostream& out,
                std::ostream& err) {
    BinaryImage bin(1, 1);
    try {
        bin = load_binary(image, cfg);
    } catch (const Error& e) {
        err << "error: " << image << ": " << e.what() << "\n";
        return kRuntime;
    }
    ImageResult res{{image, true, {}, 0}, analyze_frame(bin, cfg)};
    res.file.components = static_cast<int>(res.items.size());
    if (res.items.empty()) {
        try {
            extract_features(bin, cfg);
        } catch (const Error& e) {
            err << "error: " << code_name(e.code()) << " at " << e.stage() << ": " << e.what() << "\n";
            return kRuntime;
        }
    }
    const RunReport rep = build_report({res}, cfg, nullptr, nullptr);
    if (!json_path.empty()) emit_json(to_json(rep), json_path, out);
    int code = kOk;
    for (const auto& rec : rep.records) {
        if (!rec.error.empty()) {
            err << "error: component " << rec.component << ": " << rec.error << "\n";
            code = kRuntime;
            continue;
        }
        if (json_path == "-") continue;
        const auto& f = *rec.features;
        out << "component " << rec.component << ": major_px=" << f.major_px << " minor_px=" << f.minor_px
            << " threading=" << f.threading << " pitch_px=" << (f.pitch_px ? text::format_double(*f.pitch_px) : "-")
            << " area_px=" << f.area_px << " perimeter_px=" << f.perimeter_px;
        if (f.major_mm)
            out << " major_mm=" << *f.major_mm << " minor_mm=" << *f.minor_mm
                << " pitch_mm=" << (f.pitch_mm ? text::format_double(*f.pitch_mm) : "-");
        out << "\n";
    }
    return code;
}

// ---------------------------------------------------------------- gen

struct GenOptions {
    std::string catalog = "builtin";
    int angles = 0;
    int count = 0;
    int bolts_per_frame = 1;
    double noise = 0.0;
    std::uint64_t seed = 1;
    std::string out_dir;
    int canvas = 0;
};

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

int fitted_canvas(const synth::BoltSpec& s, double ppm) {
    return static_cast<int>(std::ceil(std::hypot(s.length_mm, s.head_width_mm) * ppm)) + 16;
}

int cmd_gen(const GenOptions& o, const PipelineConfig& cfg, std::ostream& out) {
    if ((o.angles > 0) == (o.count > 0)) throw Exit{kUsage, "give exactly one of --angles or --count"};
    if (o.bolts_per_frame < 1) throw Exit{kUsage, "--bolts-per-frame must be >= 1"};
    if (o.noise < 0.0 || o.noise > 0.05) throw Exit{kUsage, "--noise must be in [0, 0.05]"};
    std::vector<synth::BoltSpec> specs;
    try {
        specs = o.catalog == "builtin" ? synth::standard_catalog() : synth::load_catalog(read_text(o.catalog));
    } catch (const Error& e) {
        throw Exit{kUsage, o.catalog + ": " + e.what()};
    }
    if (specs.empty()) throw Exit{kUsage, "catalog is empty"};
    const double ppm = cfg.px_per_mm > 0.0 ? cfg.px_per_mm : synth::kDefaultPxPerMm;
    fs::create_directories(o.out_dir);

    std::vector<ManifestRow> manifest;
    auto save = [&](const std::string& file, const BinaryImage& img) { save_pgm(fs::path(o.out_dir) / file, img); };
    char buf[128];
    try {
        if (o.angles > 0) {
            std::size_t index = 0;
            for (const auto& s : specs) {
                const int side = o.canvas > 0 ? o.canvas : fitted_canvas(s, ppm);
                for (int k = 0; k < o.angles; ++k, ++index) {
                    const double angle = 360.0 * k / o.angles;
                    synth::RenderParams p{ppm, side, side, {side / 2.0, side / 2.0}, angle, o.noise, mix(o.seed + index)};
                    std::snprintf(buf, sizeof buf, "%04zu_%s_a%03d.pgm", index, s.name.c_str(),
                                  static_cast<int>(std::lround(angle)));
                    save(buf, synth::render_bolt(s, p).image);
                    manifest.push_back({buf, s.name, angle, o.noise});
                }
            }
        } else {
            std::mt19937_64 rng(o.seed);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            const int side = o.canvas > 0 ? o.canvas : (o.bolts_per_frame > 1 ? 2048 : 1200);
            for (int i = 0; i < o.count; ++i) {
                std::vector<synth::Placement> bolts;
                for (int attempt = 0; static_cast<int>(bolts.size()) < o.bolts_per_frame; ++attempt) {
                    if (attempt > 2000) throw Exit{kRuntime, "could not place bolts without overlap; enlarge --canvas"};
                    const auto& s = specs[static_cast<std::size_t>(unit(rng) * specs.size()) % specs.size()];
                    const double angle = 360.0 * unit(rng);
                    const double reach = std::hypot(s.length_mm, s.head_width_mm) * ppm / 2.0 + 4.0;
                    if (2.0 * reach >= side) throw Exit{kUsage, "canvas too small for " + s.name};
                    const PointF c{reach + unit(rng) * (side - 2.0 * reach), reach + unit(rng) * (side - 2.0 * reach)};
                    auto trial = bolts;
                    trial.push_back({s, c, angle});
                    try {
                        synth::render_scene(side, side, trial, ppm);
                        bolts = std::move(trial);
                    } catch (const Error&) {
                    }
                }
                const auto scene = synth::render_scene(side, side, bolts, ppm, o.noise, mix(o.seed + i));
                std::snprintf(buf, sizeof buf, "%04d.pgm", i);
                save(buf, scene.image);
                for (const auto& b : bolts) manifest.push_back({buf, b.spec.name, b.angle_deg, o.noise});
            }
        }
    } catch (const Error& e) {
        throw Exit{kRuntime, e.what()};
    }
    write_text(fs::path(o.out_dir) / "manifest.csv", format_manifest(manifest));
    out << "wrote " << (o.angles > 0 ? manifest.size() : static_cast<std::size_t>(o.count)) << " images to "
        << o.out_dir << "\n";
    return kOk;
}

// ---------------------------------------------------------------- bench

struct Series {
    std::string stage;
    std::vector<double> ms;
};

double mean(const std::vector<double>& v) { return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / v.size(); }

double p95(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t idx = static_cast<std::size_t>(std::ceil(0.95 * v.size())) - 1;
    return v[std::min(idx, v.size() - 1)];
}

int cmd_bench(const std::vector<std::string>& images, bool synthetic, int reps, const PipelineConfig& cfg,
              std::ostream& out) {
    if (reps < 1) throw Exit{kUsage, "parameter error: --reps must be >= 1"};
    std::vector<GrayImage> frames;
    try {
        for (const auto& p : images) frames.push_back(load_pgm(p));
    } catch (const Error& e) {
        throw Exit{kRuntime, e.what()};
    }
    if (synthetic || frames.empty()) {
        const auto specs = synth::standard_catalog();
        const auto it = std::find_if(specs.begin(), specs.end(), [](const auto& s) { return s.name == "M10x50_HT"; });
        synth::RenderParams p{synth::kDefaultPxPerMm, 2048, 2048, {1024.0, 1024.0}, 30.0, 0.0, 0};
        frames.push_back(to_gray(synth::render_bolt(*it, p).image));
    }

    using Clock = std::chrono::steady_clock;
    auto since = [](Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); };
    std::vector<Series> series = {{"threshold", {}},      {"components", {}},     {"orient", {}},
                                  {"measure_axes", {}},   {"area_perimeter", {}}, {"remove_head", {}},
                                  {"classify_threading", {}}, {"estimate_pitch", {}}, {"total", {}}};
    for (const auto& frame : frames) {
        for (int r = 0; r < reps; ++r) {
            const auto t0 = Clock::now();
            const BinaryImage bin = threshold(frame, cfg.threshold_method());
            const double t_thr = since(t0);
            const auto t1 = Clock::now();
            const auto comps = connected_components(bin, cfg.min_component_area);
            const double t_cc = since(t1);
            StageTimings sum;
            for (const auto& c : comps) {
                StageTimings st;
                try {
                    extract_features(c.mask, cfg, &st);
                } catch (const Error&) {
                }
                sum.orient_ms += st.orient_ms;
                sum.axes_ms += st.axes_ms;
                sum.area_perimeter_ms += st.area_perimeter_ms;
                sum.remove_head_ms += st.remove_head_ms;
                sum.threading_ms += st.threading_ms;
                sum.pitch_ms += st.pitch_ms;
            }
            const double total = since(t0);
            const double values[] = {t_thr,           t_cc,           sum.orient_ms,   sum.axes_ms, sum.area_perimeter_ms,
                                     sum.remove_head_ms, sum.threading_ms, sum.pitch_ms, total};
            for (std::size_t k = 0; k < series.size(); ++k) series[k].ms.push_back(values[k]);
        }
    }
    out << "stage,mean_ms,p95_ms\n";
    out << std::fixed << std::setprecision(3);
    for (const auto& s : series) out << s.stage << "," << mean(s.ms) << "," << p95(s.ms) << "\n";
    out << std::defaultfloat;
    return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Bolt identification from binary silhouettes"};
    app.require_subcommand(1);

    ConfigOptions enroll_cfg, identify_cfg, measure_cfg, gen_cfg, bench_cfg;

    auto* enroll_cmd = app.add_subcommand("enroll", "measure reference images into a lookup table");
    std::string manifest, images_dir, table_out;
    enroll_cmd->add_option("--manifest", manifest, "CSV file,name[,angle_deg,noise]")->required();
    enroll_cmd->add_option("--images", images_dir, "directory holding the manifest files");
    enroll_cmd->add_option("--out,--table", table_out, "lookup table CSV to write")->required();
    enroll_cfg.attach(*enroll_cmd);

    auto* identify_cmd = app.add_subcommand("identify", "identify every bolt in the given frames");
    std::vector<std::string> id_images;
    std::string table_path, truth_path, id_json;
    int jobs = 1;
    identify_cmd->add_option("images", id_images, "PGM frames");
    identify_cmd->add_option("--table", table_path, "lookup table CSV")->required();
    identify_cmd->add_option("--truth", truth_path, "ground-truth manifest for accuracy counts");
    identify_cmd->add_option("--json", id_json, "write the JSON report here ('-' for stdout)");
    identify_cmd->add_option("--jobs", jobs, "images processed concurrently");
    identify_cfg.attach(*identify_cmd);

    auto* measure_cmd = app.add_subcommand("measure", "print features of every bolt in one frame");
    std::string measure_image, measure_json;
    measure_cmd->add_option("image", measure_image, "PGM frame")->required();
    measure_cmd->add_option("--json", measure_json, "write the JSON report here ('-' for stdout)");
    measure_cfg.attach(*measure_cmd);

    auto* gen_cmd = app.add_subcommand("gen", "render synthetic bolt images and a manifest");
    GenOptions gen;
    gen_cmd->add_option("--catalog", gen.catalog, "catalog CSV or 'builtin'");
    gen_cmd->add_option("--angles", gen.angles, "render every bolt at this many evenly spaced angles");
    gen_cmd->add_option("--count", gen.count, "render this many random frames");
    gen_cmd->add_option("--bolts-per-frame", gen.bolts_per_frame, "bolts per random frame");
    gen_cmd->add_option("--noise", gen.noise, "salt-and-pepper flip rate");
    gen_cmd->add_option("--seed", gen.seed, "generator seed");
    gen_cmd->add_option("--canvas", gen.canvas, "square canvas side in pixels");
    gen_cmd->add_option("--out", gen.out_dir, "output directory")->required();
    gen_cfg.attach(*gen_cmd);

    auto* bench_cmd = app.add_subcommand("bench", "time the feature-extraction path");
    std::vector<std::string> bench_images;
    bool synthetic = false;
    int reps = 20;
    bench_cmd->add_option("images", bench_images, "PGM frames");
    bench_cmd->add_flag("--synthetic", synthetic, "add a 2048x2048 rendered single-bolt frame");
    bench_cmd->add_option("--reps", reps, "repetitions per image");
    bench_cfg.attach(*bench_cmd);

    std::vector<std::string> argv_store = {"boltid"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kUsage;
    }

    try {
        if (*enroll_cmd) return cmd_enroll(manifest, images_dir, table_out, enroll_cfg.resolve(), out, err);
        if (*identify_cmd)
            return cmd_identify(id_images, table_path, truth_path, id_json, jobs, identify_cfg.resolve(), out, err);
        if (*measure_cmd) return cmd_measure(measure_image, measure_json, measure_cfg.resolve(), out, err);
        if (*gen_cmd) return cmd_gen(gen, gen_cfg.resolve(), out);
        if (*bench_cmd) return cmd_bench(bench_images, synthetic, reps, bench_cfg.resolve(), out);
    } catch (const Exit& e) {
        err << (e.code == kUsage ? "usage error: " : "error: ") << e.message << "\n";
        return e.code;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kRuntime;
    }
    return kUsage;
}

}  // namespace boltid::cli
