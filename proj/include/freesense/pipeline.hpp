#pragma once

#include <freesense/classifier.hpp>
#include <freesense/config.hpp>
#include <freesense/csi_model.hpp>
#include <freesense/features.hpp>
#include <freesense/pca.hpp>
#include <freesense/preprocess.hpp>
#include <freesense/segmentation.hpp>
#include <freesense/synth.hpp>

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace freesense {

/// Error raised by a pipeline stage, tagged with the stage's name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(what), stage_(std::move(stage)) {}
    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

template <typename F>
auto run_stage(const std::string& stage, F&& body) -> decltype(body()) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

inline FilterCoefficients design_filter(const PipelineConfig& cfg, double sample_rate_hz) {
    return design_lowpass({cutoff_from_hz(cfg.filter.cutoff_hz, sample_rate_hz), cfg.filter.order});
}

inline CsiTrace preprocess(const CsiTrace& raw, const PipelineConfig& cfg) {
    return run_stage("filter", [&] {
        const auto coeffs = design_filter(cfg, raw.sample_rate_hz());
        return filter_trace(raw, coeffs,
                            {cfg.filter.zero_phase, cfg.filter.steady_init ? FilterInit::SteadyState : FilterInit::Zero});
    });
}

/// PCA per pair, then peak-to-peak ordering.
inline ComponentSet reduce(const CsiTrace& filtered, const PipelineConfig& cfg) {
    return run_stage("pca", [&] { return reorder_by_peak_to_peak(pca_project(filtered, cfg.pca.components)); });
}

inline SegmentationOutcome segment(const ComponentSet& cs, const PipelineConfig& cfg) {
    return run_stage("segment", [&] { return segment_components(cs, cfg.seg); });
}

/// DWT level shared by every feature of a run: either dwt.level, or the level
/// that brings the longest admissible segment (seg.timelen2) down to
/// dwt.target_len coefficients.
inline std::size_t dwt_level(const PipelineConfig& cfg) {
    return cfg.dwt.level ? *cfg.dwt.level : level_for_target(cfg.seg.timelen2, cfg.dwt.target_len);
}

inline ShapeFeature extract_feature(const ComponentSet& cs, const Segment& seg, const PipelineConfig& cfg) {
    return run_stage("extract", [&] { return dwt_compress(extract_los_waveform(cs, seg), dwt_level(cfg)); });
}

/// Everything computed from one trace up to (not including) classification.
struct TraceAnalysis {
    ComponentSet components;
    SegmentationOutcome segmentation;
};

inline TraceAnalysis analyze(const CsiTrace& trace, const PipelineConfig& cfg, bool prefiltered = false) {
    TraceAnalysis out;
    out.components = prefiltered ? reduce(trace, cfg) : reduce(preprocess(trace, cfg), cfg);
    out.segmentation = segment(out.components, cfg);
    return out;
}

inline EvalProtocol effective_protocol(const PipelineConfig& cfg) {
    EvalProtocol p = cfg.eval;
    p.k = cfg.knn.k;
    p.band = cfg.dtw.band;
    return p;
}

// ---------------------------------------------------------------------------
// Corpus evaluation
// ---------------------------------------------------------------------------

/// Random-access labeled corpus.
struct CorpusSource {
    std::size_t size = 0;
    std::function<CorpusItem(std::size_t)> item;
};

inline CorpusSource synthetic_corpus(const CorpusSpec& spec) {
    auto profiles = std::make_shared<std::vector<SubjectProfile>>(corpus_profiles(spec));
    return {spec.size(), [spec, profiles](std::size_t i) { return corpus_item(spec, *profiles, i); }};
}

/// Per-trace outcome of the fused pipeline.
struct TraceRecord {
    SubjectId subject;
    std::size_t index = 0;
    std::string direction;
    std::vector<Segment> truth;
    std::vector<Segment> detected;
    std::vector<Segment> baseline;
    std::optional<Segment> used;        // detection matched to the labeled crossing
    std::optional<ShapeFeature> feature; // features of `used`
};

/// Runs filter -> PCA -> segmentation -> DWT on one labeled trace. The
/// feature comes from the first detection that matches a labeled crossing.
inline TraceRecord process_item(const CorpusItem& item, const PipelineConfig& cfg) {
    TraceRecord rec{item.subject, item.index, {}, {}, {}, {}, {}, {}};
    for (const auto& l : item.labels) {
        rec.truth.push_back(l.segment);
        if (rec.direction.empty()) rec.direction = l.direction;
    }
    const auto analysis = analyze(item.trace, cfg);
    rec.detected = analysis.segmentation.segments;
    rec.baseline = analysis.segmentation.baseline_segments;
    for (const auto& d : rec.detected) {
        if (match_segment(d, rec.truth, cfg.effective_match_tol())) {
            rec.used = d;
            rec.feature = extract_feature(analysis.components, d, cfg);
            break;
        }
    }
    return rec;
}

struct CorpusEvaluation {
    std::vector<TraceRecord> records;
    DetectionCounts segmentation;
    DetectionCounts baseline;
    std::optional<EvalReport> identification;
};

inline DetectionCounts count_detections(std::span<const TraceRecord> records, std::int64_t tol, bool baseline) {
    DetectionCounts total;
    for (const auto& r : records) total += segmentation_metrics(baseline ? r.baseline : r.detected, r.truth, tol);
    return total;
}

inline std::vector<LabeledSample> labeled_samples(std::span<const TraceRecord> records) {
    std::vector<LabeledSample> out;
    for (const auto& r : records) out.push_back({r.subject, r.index, r.feature, r.direction});
    return out;
}

/// Processes every corpus trace and, when `identify` is set, runs the
/// identification protocol on the resulting features.
inline CorpusEvaluation evaluate_corpus(const CorpusSource& source, const PipelineConfig& cfg, bool identify = true) {
    cfg.validate();
    CorpusEvaluation out;
    out.records.reserve(source.size);
    for (std::size_t i = 0; i < source.size; ++i) out.records.push_back(process_item(source.item(i), cfg));
    out.segmentation = count_detections(out.records, cfg.effective_match_tol(), false);
    out.baseline = count_detections(out.records, cfg.effective_match_tol(), true);
    if (identify) {
        const auto samples = labeled_samples(out.records);
        out.identification = run_stage("evaluate", [&] { return evaluate_identification(samples, effective_protocol(cfg)); });
    }
    return out;
}

} // namespace freesense
