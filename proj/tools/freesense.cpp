// Command-line front end: synth, filter, segment, extract, train, identify,
// evaluate. Every command writes into an output directory with a manifest.json.

#include <freesense/config.hpp>
#include <freesense/io.hpp>
#include <freesense/pipeline.hpp>
#include <freesense/report.hpp>

#include <CLI11.hpp>
#include <json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace freesense;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kExitStage = 1;
constexpr int kExitUsage = 2;

void report_error(const std::string& stage, const std::string& message) {
    ojson j;
    j["status"] = "error";
    j["stage"] = stage;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
}

void warn(const std::string& stage, const std::string& message) {
    ojson j;
    j["status"] = "warning";
    j["stage"] = stage;
    j["message"] = message;
    std::cerr << j.dump() << '\n';
}

std::string sha256_file(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DomainError("cannot open '" + path.string() + "'");
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    std::vector<char> buf(1 << 16);
    while (is) {
        is.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        if (is.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(is.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx.get(), digest, &len);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

// Options shared by every subcommand.
struct Common {
    std::string config_file;
    std::vector<std::string> assignments;
    bool print_config = false;
    std::string out_dir;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config_file, "Config file of key = value lines")->check(CLI::ExistingFile);
    app->add_option("--set", c.assignments, "Override one config key (key=value); repeatable");
    app->add_flag("--print-config", c.print_config, "Print the resolved config and exit");
    app->add_option("--out", c.out_dir, "Run directory for outputs (required unless --print-config)");
}

PipelineConfig resolve_config(const Common& c) {
    return run_stage("config", [&] {
        PipelineConfig cfg;
        if (!c.config_file.empty()) {
            std::ifstream is(c.config_file);
            read_config(is, cfg);
        }
        for (const auto& a : c.assignments) apply_assignment(cfg, a);
        cfg.validate();
        return cfg;
    });
}

// Collects what a run read and wrote, then writes manifest.json.
class RunDir {
public:
    RunDir(std::string command, const Common& common, const PipelineConfig& cfg)
        : command_(std::move(command)), dir_(common.out_dir), cfg_(cfg) {
        if (common.out_dir.empty()) throw StageError("config", "--out is required");
        run_stage("output", [&] {
            fs::create_directories(dir_);
            return 0;
        });
    }

    fs::path path(const std::string& name) {
        outputs_.push_back(name);
        return dir_ / name;
    }
    const fs::path& dir() const { return dir_; }

    void input(const fs::path& p) { inputs_.push_back(p); }
    ojson& extra() { return extra_; }

    void finish() {
        run_stage("output", [&] {
            ojson m;
            m["command"] = command_;
            m["config"] = config_map(cfg_);
            m["seeds"] = {{"eval.seed", cfg_.eval.seed}, {"synth.seed", cfg_.synth.seed}};
            auto& in = m["inputs"] = ojson::array();
            for (const auto& p : inputs_) in.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
            m["outputs"] = outputs_;
            for (auto it = extra_.begin(); it != extra_.end(); ++it) m[it.key()] = it.value();
            std::ofstream os(dir_ / "manifest.json", std::ios::binary);
            os << m.dump(2) << '\n';
            if (!os) throw DomainError("cannot write manifest");
            return 0;
        });
    }

private:
    std::string command_;
    fs::path dir_;
    PipelineConfig cfg_;
    std::vector<fs::path> inputs_;
    std::vector<std::string> outputs_;
    ojson extra_ = ojson::object();
};

std::ofstream open_output(const fs::path& p) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw StageError("output", "cannot open '" + p.string() + "' for writing");
    return os;
}

CsiTrace read_trace_input(RunDir& run, const std::string& path) {
    return run_stage("input", [&] {
        auto t = load_trace(path);
        run.input(path);
        return t;
    });
}

std::vector<SegmentLabel> read_labels_input(RunDir& run, const std::string& path) {
    return run_stage("input", [&] {
        std::ifstream is(path);
        if (!is) throw DomainError("cannot open '" + path + "'");
        auto labels = read_labels(is);
        run.input(path);
        return labels;
    });
}

std::vector<Segment> truth_of(std::span<const SegmentLabel> labels) {
    std::vector<Segment> out;
    for (const auto& l : labels) out.push_back(l.segment);
    return out;
}

CorpusSource disk_corpus(RunDir& run, const fs::path& dir) {
    const auto entries = run_stage("input", [&] { return read_corpus_manifest(dir); });
    run.input(dir / "manifest.json");
    for (const auto& e : entries) {
        run.input(dir / e.trace);
        run.input(dir / e.labels);
    }
    return {entries.size(), [dir, entries](std::size_t i) {
                return run_stage("input", [&] { return load_corpus_item(dir, entries.at(i)); });
            }};
}

CorpusSource first_n(CorpusSource source, std::optional<std::size_t> n) {
    if (n) {
        if (*n == 0 || *n > source.size)
            throw StageError("config", "--traces must be in [1, " + std::to_string(source.size) + "]");
        source.size = *n;
    }
    return source;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    bool corpus = false;
    std::size_t index = 0;
    bool csv = false;
};

void cmd_synth(const Common& common, const SynthArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("synth", common, cfg);
    const auto profiles = run_stage("synth", [&] { return corpus_profiles(cfg.synth); });
    auto& extra = run.extra();
    extra["corpus"] = {{"seed", cfg.synth.seed},
                       {"subjects", cfg.synth.subjects},
                       {"samples_per_subject", cfg.synth.samples_per_subject},
                       {"separation", cfg.synth.separation},
                       {"noise_sigma", cfg.synth.noise_sigma},
                       {"duration_s", cfg.synth.duration_s},
                       {"disturbance_probability", cfg.synth.disturbance_probability}};
    auto& profs = extra["profiles"] = ojson::array();
    for (const auto& p : profiles) profs.push_back(profile_json(p));

    auto emit = [&](std::size_t i, const std::string& stem) {
        const auto spec = run_stage("synth", [&] { return corpus_trace_spec(cfg.synth, i); });
        auto [trace, labels] = run_stage("synth", [&] { return synth_trace(profiles, spec); });
        save_trace(run.path(stem + ".csit").string(), trace);
        auto ls = open_output(run.path(stem + ".labels.csv"));
        write_labels(ls, labels);
        if (args.csv) {
            auto cs = open_output(run.path(stem + ".csv"));
            write_trace_csv(cs, trace);
        }
        auto entry = corpus_entry_json({stem + ".csit", stem + ".labels.csv", corpus_subject(i % cfg.synth.subjects),
                                        i / cfg.synth.subjects});
        entry["synth"] = synth_spec_json(spec);
        return entry;
    };

    auto& traces = extra["traces"] = ojson::array();
    if (args.corpus) {
        run_stage("output", [&] { return fs::create_directories(run.dir() / "traces"); });
        for (std::size_t i = 0; i < cfg.synth.size(); ++i) {
            char stem[32];
            std::snprintf(stem, sizeof stem, "traces/%04zu", i);
            traces.push_back(emit(i, stem));
        }
    } else {
        if (args.index >= cfg.synth.size())
            throw StageError("config", "--index must be below " + std::to_string(cfg.synth.size()));
        traces.push_back(emit(args.index, "trace"));
    }
    run.finish();
}

struct TraceArgs {
    std::string trace;
    bool filtered = false;
};

void cmd_filter(const Common& common, const TraceArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("filter", common, cfg);
    const auto raw = read_trace_input(run, args.trace);
    const auto filtered = preprocess(raw, cfg);
    run_stage("output", [&] {
        save_trace(run.path("filtered.csit").string(), filtered);
        return 0;
    });
    run.finish();
}

struct SegmentArgs {
    TraceArgs in;
    std::string corpus;
    std::string labels;
    std::string baseline;
    std::optional<std::size_t> traces;
};

void cmd_segment(const Common& common, const SegmentArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("segment", common, cfg);
    const bool wikey = args.baseline == "wikey";
    const auto tol = cfg.effective_match_tol();
    DetectionCounts ours, theirs;
    bool scored = false;

    if (!args.corpus.empty()) {
        const auto source = first_n(disk_corpus(run, args.corpus), args.traces);
        auto per_trace = open_output(run.path("traces.csv"));
        per_trace << "trace,subject,index,truths,detections,correct,baseline_detections,baseline_correct\n";
        for (std::size_t i = 0; i < source.size; ++i) {
            const auto item = source.item(i);
            const auto analysis = analyze(item.trace, cfg, args.in.filtered);
            const auto truth = truth_of(item.labels);
            const auto a = segmentation_metrics(analysis.segmentation.segments, truth, tol);
            const auto b = segmentation_metrics(analysis.segmentation.baseline_segments, truth, tol);
            ours += a;
            theirs += b;
            per_trace << i << ',' << item.subject << ',' << item.index << ',' << a.truths << ',' << a.detections << ','
                      << a.correct << ',' << b.detections << ',' << b.correct << '\n';
        }
        scored = true;
    } else {
        if (args.in.trace.empty()) throw StageError("config", "segment needs --trace or --corpus");
        const auto trace = read_trace_input(run, args.in.trace);
        const auto analysis = analyze(trace, cfg, args.in.filtered);
        auto os = open_output(run.path("segments.csv"));
        write_segments(os, analysis.segmentation.segments);
        if (wikey) {
            auto bs = open_output(run.path("baseline_segments.csv"));
            write_segments(bs, analysis.segmentation.baseline_segments);
        }
        if (analysis.segmentation.params) {
            const auto& p = *analysis.segmentation.params;
            run.extra()["thresholds"] = {{"t1", p.t1}, {"t2", p.t2}};
        }
        if (!args.labels.empty()) {
            const auto truth = truth_of(read_labels_input(run, args.labels));
            ours = segmentation_metrics(analysis.segmentation.segments, truth, tol);
            theirs = segmentation_metrics(analysis.segmentation.baseline_segments, truth, tol);
            scored = true;
        }
        if (analysis.segmentation.segments.empty()) warn("segment", "no segments detected");
    }

    if (scored) {
        std::vector<SegmentationRow> rows{{"dual_threshold", ours}};
        if (wikey) rows.push_back({"wikey", theirs});
        auto os = open_output(run.path("segmentation.csv"));
        write_segmentation_rows(os, rows);
        write_segmentation_rows(std::cout, rows);
    }
    run.finish();
}

struct ExtractArgs {
    TraceArgs in;
    std::string segments;
    std::string labels;
    std::string subject = "unknown";
};

void cmd_extract(const Common& common, const ExtractArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("extract", common, cfg);
    const auto trace = read_trace_input(run, args.in.trace);
    const auto segments = run_stage("input", [&] {
        std::ifstream is(args.segments);
        if (!is) throw DomainError("cannot open '" + args.segments + "'");
        auto s = read_segments(is);
        run.input(args.segments);
        return s;
    });
    std::vector<SegmentLabel> labels;
    if (!args.labels.empty()) labels = read_labels_input(run, args.labels);
    const auto fallback = run_stage("config", [&] { return SubjectId(args.subject); });

    const auto cs = args.in.filtered ? reduce(trace, cfg) : reduce(preprocess(trace, cfg), cfg);
    const auto tol = cfg.effective_match_tol();
    std::vector<FeatureRecord> records;
    for (const auto& seg : segments) {
        std::optional<SubjectId> subject;
        if (labels.empty()) {
            subject = fallback;
        } else {
            for (const auto& l : labels)
                if (match_segment(seg, std::span<const Segment>(&l.segment, 1), tol)) { subject = l.subject; break; }
        }
        if (!subject) {
            warn("extract", "segment [" + std::to_string(seg.begin) + ", " + std::to_string(seg.end) +
                                ") matches no label; skipped");
            continue;
        }
        records.push_back({*subject, extract_feature(cs, seg, cfg), seg, args.in.trace});
    }
    if (records.empty()) warn("extract", "no features extracted");
    run_stage("output", [&] {
        save_features(run.path("features.csv"), {cs.pairs, cs.components, dwt_level(cfg)}, records);
        run.path("features.json");
        return 0;
    });
    run.finish();
}

struct TrainArgs {
    std::vector<std::string> features;
    std::optional<std::size_t> per_subject;
};

void cmd_train(const Common& common, const TrainArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("train", common, cfg);
    std::optional<FeatureLayout> layout;
    std::vector<FeatureRecord> gallery;
    std::map<SubjectId, std::size_t> taken;
    for (const auto& f : args.features) {
        auto [lay, records] = run_stage("input", [&] { return load_features(f); });
        run.input(f);
        run.input(sidecar_path(f));
        if (layout && !(*layout == lay)) throw StageError("train", "'" + f + "' has a different pairs/components/level");
        layout = lay;
        for (auto& r : records) {
            auto& n = taken[r.subject];
            if (args.per_subject && n >= *args.per_subject) continue;
            ++n;
            gallery.push_back(std::move(r));
        }
    }
    if (gallery.empty()) throw StageError("train", "no labeled features to enroll");
    run_stage("train", [&] { return make_gallery(gallery).size(); });
    run_stage("output", [&] {
        save_features(run.path("gallery.csv"), *layout, gallery);
        run.path("gallery.json");
        return 0;
    });
    run.finish();
}

struct IdentifyArgs {
    TraceArgs in;
    std::string features;
    std::string gallery;
};

void cmd_identify(const Common& common, const IdentifyArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("identify", common, cfg);
    const auto [layout, enrolled] = run_stage("input", [&] { return load_features(args.gallery); });
    run.input(args.gallery);
    run.input(sidecar_path(args.gallery));
    const auto gallery = run_stage("identify", [&] { return make_gallery(enrolled); });

    struct Query { std::optional<Segment> segment; ShapeFeature feature; };
    std::vector<Query> queries;
    if (!args.features.empty()) {
        auto [lay, records] = run_stage("input", [&] { return load_features(args.features); });
        run.input(args.features);
        run.input(sidecar_path(args.features));
        for (auto& r : records) queries.push_back({r.segment, std::move(r.feature)});
    } else {
        if (args.in.trace.empty()) throw StageError("config", "identify needs --trace or --features");
        const auto trace = read_trace_input(run, args.in.trace);
        const auto analysis = analyze(trace, cfg, args.in.filtered);
        for (const auto& seg : analysis.segmentation.segments)
            queries.push_back({seg, extract_feature(analysis.components, seg, cfg)});
    }

    auto os = open_output(run.path("predictions.csv"));
    if (queries.empty()) {
        warn("identify", "no segments detected; no predictions written");
    } else {
        os << "j_begin,j_end,predicted,distance,neighbors\n";
        for (const auto& q : queries) {
            const auto result = run_stage("identify", [&] { return knn_classify(q.feature, gallery, cfg.knn.k, cfg.dtw.band); });
            if (q.segment) os << q.segment->begin << ',' << q.segment->end;
            else os << ',';
            os << ',' << result.predicted << ',' << csv::format_exact(result.neighbors.front().distance) << ',';
            for (std::size_t i = 0; i < result.neighbors.size(); ++i) os << (i ? ";" : "") << result.neighbors[i].subject;
            os << '\n';
        }
    }
    run.finish();
}

struct EvaluateArgs {
    std::string corpus;
    std::optional<std::size_t> traces;
    bool segmentation_only = false;
};

void write_charts(RunDir& run, const EvalReport& report) {
    ChartSeries subj{"mean accuracy", {}, {}};
    for (const auto& r : report.subject_sweep) {
        subj.x.push_back(static_cast<double>(r.subjects));
        subj.y.push_back(r.mean_accuracy);
    }
    ChartSeries train{"accuracy", {}, {}};
    for (const auto& r : report.train_sweep) {
        train.x.push_back(static_cast<double>(r.train));
        train.y.push_back(r.accuracy);
    }
    auto a = open_output(run.path("accuracy_vs_subjects.svg"));
    write_line_chart(a, {"Accuracy vs. number of subjects", "subjects", "accuracy", std::pair{0.0, 1.0}},
                     std::span<const ChartSeries>(&subj, 1));
    auto b = open_output(run.path("accuracy_vs_trainsize.svg"));
    write_line_chart(b, {"Accuracy vs. training samples per subject", "training samples", "accuracy", std::pair{0.0, 1.0}},
                     std::span<const ChartSeries>(&train, 1));
}

void cmd_evaluate(const Common& common, const EvaluateArgs& args) {
    const auto cfg = resolve_config(common);
    RunDir run("evaluate", common, cfg);
    auto source = first_n(args.corpus.empty() ? synthetic_corpus(cfg.synth) : disk_corpus(run, args.corpus), args.traces);
    run.extra()["corpus"] = args.corpus.empty() ? ojson("synthetic") : ojson(args.corpus);
    run.extra()["traces"] = source.size;

    const auto result = evaluate_corpus(source, cfg, !args.segmentation_only);

    run_stage("output", [&] {
        const std::vector<SegmentationRow> rows{{"dual_threshold", result.segmentation}, {"wikey", result.baseline}};
        auto seg = open_output(run.path("segmentation.csv"));
        write_segmentation_rows(seg, rows);

        auto tr = open_output(run.path("traces.csv"));
        tr << "subject,index,truth_begin,truth_end,used_begin,used_end,detections,baseline_detections\n";
        std::vector<FeatureRecord> features;
        for (const auto& r : result.records) {
            tr << r.subject << ',' << r.index << ',';
            if (!r.truth.empty()) tr << r.truth.front().begin << ',' << r.truth.front().end;
            else tr << ',';
            tr << ',';
            if (r.used) tr << r.used->begin << ',' << r.used->end;
            else tr << ',';
            tr << ',' << r.detected.size() << ',' << r.baseline.size() << '\n';
            if (r.feature) features.push_back({r.subject, *r.feature, r.used, std::to_string(r.index)});
        }
        const FeatureLayout layout = features.empty() ? FeatureLayout{0, cfg.pca.components, dwt_level(cfg)}
                                                      : layout_of(features.front().feature);
        save_features(run.path("features.csv"), layout, features);
        run.path("features.json");

        if (result.identification) {
            const auto& rep = *result.identification;
            auto a = open_output(run.path("accuracy_vs_subjects.csv"));
            write_subject_sweep(a, rep.subject_sweep);
            auto b = open_output(run.path("accuracy_vs_trainsize.csv"));
            write_train_sweep(b, rep.train_sweep);
            auto c = open_output(run.path("confusion.csv"));
            write_confusion(c, rep);
            auto p = open_output(run.path("predictions.csv"));
            write_predictions(p, rep.predictions);
            if (std::ranges::any_of(rep.predictions, [](const auto& q) { return !q.direction.empty(); })) {
                auto d = open_output(run.path("accuracy_by_direction.csv"));
                write_direction_accuracy(d, rep.predictions);
            }
            write_charts(run, rep);
        }
        return 0;
    });

    write_segmentation_rows(std::cout, std::vector<SegmentationRow>{{"dual_threshold", result.segmentation},
                                                                    {"wikey", result.baseline}});
    if (result.identification) {
        std::cout << "accuracy," << csv::format_exact(result.identification->accuracy) << '\n';
        write_subject_sweep(std::cout, result.identification->subject_sweep);
    }
    run.finish();
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Device-free human identification from WiFi CSI amplitude traces"};
    app.require_subcommand(1);

    Common common;
    SynthArgs synth_args;
    auto* synth = app.add_subcommand("synth", "Generate a labeled synthetic trace or corpus");
    add_common(synth, common);
    synth->add_flag("--corpus", synth_args.corpus, "Write the whole corpus (synth.subjects x synth.samples traces)");
    synth->add_option("--index", synth_args.index, "Corpus trace to write when not using --corpus");
    synth->add_flag("--csv", synth_args.csv, "Also write each trace in CSV form");

    TraceArgs filter_args;
    auto* filter = app.add_subcommand("filter", "Low-pass filter a trace");
    add_common(filter, common);
    filter->add_option("--trace", filter_args.trace, "Input trace (.csit)")->required();

    SegmentArgs seg_args;
    auto* segment = app.add_subcommand("segment", "Detect crossings in a trace or a corpus");
    add_common(segment, common);
    segment->add_option("--trace", seg_args.in.trace, "Input trace (.csit)");
    segment->add_flag("--filtered", seg_args.in.filtered, "Input is already filtered");
    segment->add_option("--corpus", seg_args.corpus, "Corpus directory (scores against its labels)");
    segment->add_option("--traces", seg_args.traces, "Use only the first N corpus traces");
    segment->add_option("--labels", seg_args.labels, "Label sidecar to score against");
    segment->add_option("--baseline", seg_args.baseline, "Also report a reference segmenter")
        ->check(CLI::IsMember({"wikey"}));

    ExtractArgs ext_args;
    auto* extract = app.add_subcommand("extract", "Compute shape features for given segments");
    add_common(extract, common);
    extract->add_option("--trace", ext_args.in.trace, "Input trace (.csit)")->required();
    extract->add_flag("--filtered", ext_args.in.filtered, "Input is already filtered");
    extract->add_option("--segments", ext_args.segments, "Segment CSV (j_begin,j_end)")->required();
    extract->add_option("--labels", ext_args.labels, "Label sidecar; segments take the subject of the label they match");
    extract->add_option("--subject", ext_args.subject, "Subject for every segment when no labels are given");

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "Build a gallery from labeled feature files");
    add_common(train, common);
    train->add_option("--features", train_args.features, "Feature CSV files")->required();
    train->add_option("--per-subject", train_args.per_subject, "Enroll at most N samples per subject, in file order");

    IdentifyArgs id_args;
    auto* identify = app.add_subcommand("identify", "Identify the walker of every detected segment");
    add_common(identify, common);
    identify->add_option("--trace", id_args.in.trace, "Input trace (.csit)");
    identify->add_flag("--filtered", id_args.in.filtered, "Input is already filtered");
    identify->add_option("--features", id_args.features, "Classify precomputed features instead of a trace");
    identify->add_option("--gallery", id_args.gallery, "Gallery CSV from `train`")->required();

    EvaluateArgs eval_args;
    auto* evaluate = app.add_subcommand("evaluate", "Run the full pipeline and identification protocol on a corpus");
    add_common(evaluate, common);
    evaluate->add_option("--corpus", eval_args.corpus, "Corpus directory; default is the in-memory synthetic corpus");
    evaluate->add_option("--traces", eval_args.traces, "Use only the first N traces");
    evaluate->add_flag("--segmentation-only", eval_args.segmentation_only, "Skip identification");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("cli", e.what());
        return kExitUsage;
    }

    try {
        if (common.print_config) {
            write_config(std::cout, resolve_config(common));
            return 0;
        }
        if (synth->parsed()) cmd_synth(common, synth_args);
        else if (filter->parsed()) cmd_filter(common, filter_args);
        else if (segment->parsed()) cmd_segment(common, seg_args);
        else if (extract->parsed()) cmd_extract(common, ext_args);
        else if (train->parsed()) cmd_train(common, train_args);
        else if (identify->parsed()) cmd_identify(common, id_args);
        else if (evaluate->parsed()) cmd_evaluate(common, eval_args);
    } catch (const StageError& e) {
        report_error(e.stage(), e.what());
        return e.stage() == "config" ? kExitUsage : kExitStage;
    } catch (const std::exception& e) {
        report_error("internal", e.what());
        return kExitStage;
    }
    return 0;
}
