#pragma once

#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>
#include <freesense/pca.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

namespace freesense {

/// Concrete detector parameters (all in samples except the thresholds).
struct SegmenterParams {
    std::size_t window = 500;
    double t1 = 0.0;
    double t2 = 0.0;
    std::size_t timelen1 = 500;
    std::size_t timelen2 = 4000;

    void validate() const {
        if (window < 2) throw DomainError("seg.window must be >= 2");
        if (!(t1 > t2)) throw DomainError("seg.t1 must be greater than seg.t2");
        if (!(t2 >= 0.0)) throw DomainError("seg.t2 must be nonnegative");
        if (!(timelen1 < timelen2)) throw DomainError("seg.timelen1 must be less than seg.timelen2");
    }
};

/// Detector configuration. Thresholds left unset are derived from the trace's
/// own MAD profile: with lo and hi the t2/t1 percentiles of the pooled
/// before/after values, T = lo + fraction * (hi - lo). Fractions 1 and 0 give
/// T1 and T2 equal to the percentiles themselves.
struct SegmenterConfig {
    std::size_t window = 500;
    std::optional<double> t1;
    std::optional<double> t2;
    double t1_percentile = 0.90;
    double t2_percentile = 0.40;
    double t1_fraction = 0.5;
    double t2_fraction = 0.1;
    std::size_t timelen1 = 500;
    std::size_t timelen2 = 4000;
    bool pool_pairs = true;

    void validate() const {
        if (window < 2) throw DomainError("seg.window must be >= 2");
        if (!(t1_percentile > 0.0 && t1_percentile <= 1.0) || !(t2_percentile >= 0.0 && t2_percentile < 1.0))
            throw DomainError("seg percentiles must lie in [0, 1]");
        if (!(t1_percentile > t2_percentile)) throw DomainError("seg.t1_percentile must exceed seg.t2_percentile");
        if (!(t1_fraction > t2_fraction) || t2_fraction < 0.0 || t1_fraction > 1.0)
            throw DomainError("seg fractions must satisfy 0 <= seg.t2_fraction < seg.t1_fraction <= 1");
        if (t1 && t2 && !(*t1 > *t2)) throw DomainError("seg.t1 must be greater than seg.t2");
        if ((t1 && *t1 <= 0.0) || (t2 && *t2 < 0.0)) throw DomainError("seg thresholds must be positive");
        if (!(timelen1 < timelen2)) throw DomainError("seg.timelen1 must be less than seg.timelen2");
        if (timelen1 == 0) throw DomainError("seg.timelen1 must be positive");
    }
};

/// Summed before/after window MAD per sample. Values are defined on
/// [valid_begin(), valid_end()) and zero elsewhere.
struct MadProfile {
    std::size_t length = 0;
    std::size_t window = 0;
    std::vector<double> before;
    std::vector<double> after;

    std::size_t valid_begin() const noexcept { return window; }
    std::size_t valid_end() const noexcept { return length + 1 - window; }
};

namespace detail {

// Fenwick tree over value ranks carrying counts and sums.
class RankTree {
public:
    explicit RankTree(std::size_t n) : count_(n + 1, 0), sum_(n + 1, 0.0L) {}

    void add(std::size_t rank, long double value, int delta) {
        for (std::size_t i = rank + 1; i < count_.size(); i += i & (~i + 1)) {
            count_[i] += delta;
            sum_[i] += delta * value;
        }
    }
    // Count and sum over ranks [0, rank).
    std::pair<std::int64_t, long double> prefix(std::size_t rank) const {
        std::int64_t c = 0;
        long double s = 0.0L;
        for (std::size_t i = rank; i > 0; i -= i & (~i + 1)) { c += count_[i]; s += sum_[i]; }
        return {c, s};
    }

private:
    std::vector<std::int64_t> count_;
    std::vector<long double> sum_;
};

} // namespace detail

/// Mean absolute deviation (from the window's own mean) of every length-w
/// window: out[s] = MAD(y[s .. s+w)), s in [0, N-w]. O(N log N).
inline std::vector<double> window_mad(std::span<const double> y, std::size_t w) {
    if (w == 0 || w > y.size()) throw DomainError("MAD window must be in [1, N]");
    const std::size_t n = y.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::ranges::stable_sort(order, [&](std::size_t a, std::size_t b) { return y[a] < y[b]; });
    std::vector<double> sorted(n);
    std::vector<std::size_t> rank(n);
    for (std::size_t r = 0; r < n; ++r) { sorted[r] = y[order[r]]; rank[order[r]] = r; }

    detail::RankTree tree(n);
    long double window_sum = 0.0L;
    for (std::size_t i = 0; i < w; ++i) { tree.add(rank[i], y[i], +1); window_sum += y[i]; }

    const auto wl = static_cast<long double>(w);
    std::vector<double> out(n - w + 1);
    for (std::size_t s = 0;; ++s) {
        const long double mean = window_sum / wl;
        const auto below = static_cast<std::size_t>(
            std::ranges::upper_bound(sorted, static_cast<double>(mean)) - sorted.begin());
        const auto [cnt_lo, sum_lo] = tree.prefix(below);
        const long double lo = mean * static_cast<long double>(cnt_lo) - sum_lo;
        const long double hi = (window_sum - sum_lo) - mean * static_cast<long double>(std::int64_t(w) - cnt_lo);
        out[s] = std::max(0.0, static_cast<double>((lo + hi) / wl));
        if (s + w >= n) break;
        tree.add(rank[s], y[s], -1);
        tree.add(rank[s + w], y[s + w], +1);
        window_sum += static_cast<long double>(y[s + w]) - static_cast<long double>(y[s]);
    }
    return out;
}

namespace detail {

inline void accumulate_profile(MadProfile& prof, std::span<const double> y) {
    const auto mad = window_mad(y, prof.window);
    for (std::size_t j = prof.valid_begin(); j < prof.valid_end(); ++j) {
        prof.before[j] += mad[j - prof.window];
        prof.after[j] += mad[j];
    }
}

inline MadProfile empty_profile(const ComponentSet& cs, std::size_t w) {
    cs.validate();
    if (w < 1) throw DomainError("seg.window must be positive");
    if (cs.length < 2 * w)
        throw DomainError("trace of " + std::to_string(cs.length) + " samples is shorter than two MAD windows (" +
                          std::to_string(2 * w) + ")");
    MadProfile prof;
    prof.length = cs.length;
    prof.window = w;
    prof.before.assign(cs.length, 0.0);
    prof.after.assign(cs.length, 0.0);
    return prof;
}

} // namespace detail

/// Trace-wide profile: MAD of the w samples before and after each index,
/// summed over every component of every pair.
inline MadProfile mad_profile(const ComponentSet& cs, std::size_t w) {
    auto prof = detail::empty_profile(cs, w);
    for (const auto& y : cs.waveforms) detail::accumulate_profile(prof, y);
    return prof;
}

/// Profile of a single antenna pair (summed over its components only).
inline MadProfile mad_profile(const ComponentSet& cs, std::size_t w, std::size_t pair) {
    if (pair >= cs.pairs) throw DomainError("pair index out of range");
    auto prof = detail::empty_profile(cs, w);
    for (std::size_t k = 0; k < cs.components; ++k) detail::accumulate_profile(prof, cs.waveform(pair, k));
    return prof;
}

/// Linear-interpolation quantile, q in [0, 1].
inline double quantile(std::vector<double> values, double q) {
    if (values.empty()) throw DomainError("quantile of an empty set");
    std::ranges::sort(values);
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

/// Fills in unset thresholds from percentiles of the pooled before/after MAD
/// values. Returns nullopt when the profile is too flat to separate T1 > T2.
inline std::optional<SegmenterParams> resolve_params(const MadProfile& prof, const SegmenterConfig& cfg) {
    cfg.validate();
    SegmenterParams p;
    p.window = cfg.window;
    p.timelen1 = cfg.timelen1;
    p.timelen2 = cfg.timelen2;
    if (!cfg.t1 || !cfg.t2) {
        std::vector<double> pooled;
        pooled.reserve(2 * (prof.valid_end() - prof.valid_begin()));
        for (std::size_t j = prof.valid_begin(); j < prof.valid_end(); ++j) {
            pooled.push_back(prof.before[j]);
            pooled.push_back(prof.after[j]);
        }
        const double lo = quantile(pooled, cfg.t2_percentile);
        const double hi = quantile(pooled, cfg.t1_percentile);
        p.t1 = cfg.t1 ? *cfg.t1 : lo + cfg.t1_fraction * (hi - lo);
        p.t2 = cfg.t2 ? *cfg.t2 : lo + cfg.t2_fraction * (hi - lo);
    } else {
        p.t1 = *cfg.t1;
        p.t2 = *cfg.t2;
    }
    if (!(p.t1 > p.t2) || !(p.t1 > 0.0)) return std::nullopt;
    return p;
}

inline bool is_start(const MadProfile& prof, const SegmenterParams& p, std::size_t j) {
    return prof.before[j] <= p.t2 && prof.after[j] >= p.t1;
}

inline bool is_end(const MadProfile& prof, const SegmenterParams& p, std::size_t j) {
    return prof.after[j] <= p.t2 && prof.before[j] >= p.t1;
}

/// Dual-threshold start/end detection with a duration gate. Scans left to
/// right; a start is paired with the first end point after it, and the pair is
/// kept only if timelen1 <= end - start <= timelen2. Otherwise the start is
/// dropped and scanning resumes at the next sample.
inline std::vector<Segment> detect_segments(const MadProfile& prof, const SegmenterParams& p) {
    p.validate();
    if (prof.window != p.window) throw DomainError("profile window does not match seg.window");
    std::vector<Segment> out;
    const std::size_t last = prof.valid_end();
    std::size_t j = prof.valid_begin();
    while (j < last) {
        if (!is_start(prof, p, j)) { ++j; continue; }
        const std::size_t horizon = std::min(last, j + p.timelen2 + 1);
        std::size_t e = j + 1;
        while (e < horizon && !is_end(prof, p, e)) ++e;
        if (e < horizon && e - j >= p.timelen1) {
            out.push_back({j, e});
            j = e + 1;
        } else {
            ++j;
        }
    }
    return out;
}

/// Combines per-pair detections: overlapping detections are grouped, and a
/// group survives when at least half of the pairs contributed to it. The
/// surviving segment spans the median begin and median end of the group.
inline std::vector<Segment> merge_pair_detections(std::vector<std::vector<Segment>> per_pair) {
    struct Tagged { Segment seg; std::size_t pair; };
    std::vector<Tagged> all;
    for (std::size_t p = 0; p < per_pair.size(); ++p)
        for (const auto& s : per_pair[p]) all.push_back({s, p});
    std::ranges::sort(all, [](const Tagged& a, const Tagged& b) { return a.seg < b.seg; });

    const std::size_t quorum = (per_pair.size() + 1) / 2;
    std::vector<Segment> out;
    std::size_t i = 0;
    while (i < all.size()) {
        std::size_t group_end = all[i].seg.end;
        std::size_t k = i + 1;
        while (k < all.size() && all[k].seg.begin < group_end) { group_end = std::max(group_end, all[k].seg.end); ++k; }
        std::vector<std::size_t> begins, ends, pairs;
        for (std::size_t m = i; m < k; ++m) {
            begins.push_back(all[m].seg.begin);
            ends.push_back(all[m].seg.end);
            pairs.push_back(all[m].pair);
        }
        std::ranges::sort(pairs);
        const auto distinct = static_cast<std::size_t>(std::ranges::distance(pairs.begin(), std::unique(pairs.begin(), pairs.end())));
        if (distinct >= quorum) {
            std::ranges::sort(begins);
            std::ranges::sort(ends);
            Segment s{begins[(begins.size() - 1) / 2], ends[(ends.size() - 1) / 2]};
            if (s.begin < s.end && (out.empty() || out.back().end <= s.begin)) out.push_back(s);
        }
        i = k;
    }
    return out;
}

/// Reference single-threshold MAD segmenter: every maximal run of samples with
/// MAD_after >= threshold is reported, shifted by half a window so the
/// segment covers the window centres. No dual gate, no duration gate.
inline std::vector<Segment> detect_segments_single_threshold(const MadProfile& prof, double threshold) {
    std::vector<Segment> out;
    const std::size_t half = prof.window / 2;
    std::size_t j = prof.valid_begin();
    while (j < prof.valid_end()) {
        if (prof.after[j] < threshold) { ++j; continue; }
        const std::size_t run_begin = j;
        while (j < prof.valid_end() && prof.after[j] >= threshold) ++j;
        const Segment s{run_begin + half, std::min(j + half, prof.length - 1)};
        if (s.begin < s.end) out.push_back(s);
    }
    return out;
}

/// Detection counts behind DR = correct / truths and ER = false / detections.
struct DetectionCounts {
    std::size_t correct = 0;
    std::size_t false_detections = 0;
    std::size_t truths = 0;
    std::size_t detections = 0;

    /// 1 when there was nothing to detect.
    double detection_ratio() const noexcept {
        return truths == 0 ? 1.0 : static_cast<double>(correct) / static_cast<double>(truths);
    }
    /// 0 when nothing was detected.
    double error_ratio() const noexcept {
        return detections == 0 ? 0.0 : static_cast<double>(false_detections) / static_cast<double>(detections);
    }

    DetectionCounts& operator+=(const DetectionCounts& o) noexcept {
        correct += o.correct;
        false_detections += o.false_detections;
        truths += o.truths;
        detections += o.detections;
        return *this;
    }
};

/// Greedy one-to-one matching in time order: a detection matches the earliest
/// unmatched truth segment whose endpoints are both within match_tol samples.
inline DetectionCounts segmentation_metrics(std::span<const Segment> detected, std::span<const Segment> truth,
                                            std::int64_t match_tol) {
    if (match_tol < 0) throw DomainError("seg.match_tol must be nonnegative");
    const auto close = [match_tol](std::size_t a, std::size_t b) {
        return std::llabs(static_cast<long long>(a) - static_cast<long long>(b)) <= match_tol;
    };
    std::vector<bool> used(truth.size(), false);
    DetectionCounts c;
    c.truths = truth.size();
    c.detections = detected.size();
    for (const auto& d : detected) {
        for (std::size_t t = 0; t < truth.size(); ++t) {
            if (!used[t] && close(d.begin, truth[t].begin) && close(d.end, truth[t].end)) {
                used[t] = true;
                ++c.correct;
                break;
            }
        }
    }
    c.false_detections = c.detections - c.correct;
    return c;
}

/// Index of the truth segment matched by `detection`, using the same rule as
/// segmentation_metrics on a single detection.
inline std::optional<std::size_t> match_segment(const Segment& detection, std::span<const Segment> truth,
                                                std::int64_t match_tol) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
        const auto db = std::llabs(static_cast<long long>(detection.begin) - static_cast<long long>(truth[t].begin));
        const auto de = std::llabs(static_cast<long long>(detection.end) - static_cast<long long>(truth[t].end));
        if (db <= match_tol && de <= match_tol) return t;
    }
    return std::nullopt;
}

/// Full detector over a component set: profile(s), thresholds, detection.
struct SegmentationOutcome {
    std::vector<Segment> segments;
    std::vector<Segment> baseline_segments; // single-threshold reference
    std::optional<SegmenterParams> params;  // pooled mode only
};

inline SegmentationOutcome segment_components(const ComponentSet& cs, const SegmenterConfig& cfg) {
    cfg.validate();
    SegmentationOutcome out;
    if (cfg.pool_pairs) {
        const auto prof = mad_profile(cs, cfg.window);
        out.params = resolve_params(prof, cfg);
        if (out.params) {
            out.segments = detect_segments(prof, *out.params);
            out.baseline_segments = detect_segments_single_threshold(prof, 0.5 * (out.params->t1 + out.params->t2));
        }
        return out;
    }
    std::vector<std::vector<Segment>> per_pair, per_pair_base;
    for (std::size_t pair = 0; pair < cs.pairs; ++pair) {
        const auto prof = mad_profile(cs, cfg.window, pair);
        const auto params = resolve_params(prof, cfg);
        if (!params) { per_pair.emplace_back(); per_pair_base.emplace_back(); continue; }
        per_pair.push_back(detect_segments(prof, *params));
        per_pair_base.push_back(detect_segments_single_threshold(prof, 0.5 * (params->t1 + params->t2)));
    }
    out.segments = merge_pair_detections(std::move(per_pair));
    out.baseline_segments = merge_pair_detections(std::move(per_pair_base));
    return out;
}

} // namespace freesense
