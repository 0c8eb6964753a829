#pragma once

#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>
#include <freesense/features.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace freesense {

/// Dynamic time warping with local cost |x_i - y_j| and steps (1,0), (0,1),
/// (1,1). `band` = 0 evaluates the full matrix; otherwise cells further than
/// `band` from the (length-normalised) diagonal are excluded.
inline double dtw_distance(std::span<const double> x, std::span<const double> y, std::size_t band = 0) {
    if (x.empty() || y.empty()) throw DomainError("DTW needs nonempty sequences");
    if (x.size() < y.size()) std::swap(x, y); // rows = longer sequence
    const std::size_t n = x.size(), m = y.size();
    constexpr double inf = std::numeric_limits<double>::infinity();

    std::vector<double> prev(m, inf), curr(m, inf);
    const double slope = n > 1 ? static_cast<double>(m - 1) / static_cast<double>(n - 1) : 0.0;
    const double radius = std::max<double>(1.0, static_cast<double>(band));
    auto range = [&](std::size_t i) -> std::pair<std::size_t, std::size_t> {
        if (band == 0) return {0, m - 1};
        const double c = slope * static_cast<double>(i);
        const double lo = std::max(0.0, std::ceil(c - radius));
        const double hi = std::min(static_cast<double>(m - 1), std::floor(c + radius));
        return {static_cast<std::size_t>(lo), static_cast<std::size_t>(hi)};
    };

    for (std::size_t i = 0; i < n; ++i) {
        const auto [lo, hi] = range(i);
        std::fill(curr.begin(), curr.end(), inf);
        for (std::size_t j = lo; j <= hi; ++j) {
            const double cost = std::abs(x[i] - y[j]);
            double best;
            if (i == 0 && j == 0) best = 0.0;
            else {
                best = inf;
                if (i > 0) best = std::min(best, prev[j]);
                if (j > 0) best = std::min(best, curr[j - 1]);
                if (i > 0 && j > 0) best = std::min(best, prev[j - 1]);
            }
            curr[j] = best + cost;
        }
        std::swap(prev, curr);
    }
    return prev[m - 1];
}

inline bool compatible(const ShapeFeature& a, const ShapeFeature& b) noexcept {
    return a.pairs == b.pairs && a.components == b.components && a.level == b.level &&
           a.coeffs.size() == b.coeffs.size();
}

/// Sum of DTW distances over every antenna pair and component.
inline double ensemble_distance(const ShapeFeature& a, const ShapeFeature& b, std::size_t band = 0) {
    if (!compatible(a, b))
        throw DomainError("features differ in pair count, component count or DWT level");
    double total = 0.0;
    for (std::size_t i = 0; i < a.coeffs.size(); ++i) total += dtw_distance(a.coeffs[i], b.coeffs[i], band);
    return total;
}

struct GalleryEntry {
    SubjectId subject;
    ShapeFeature feature;
};

/// Enrolled, labeled features. All entries share pair count, component count
/// and DWT level.
class Gallery {
public:
    void add(SubjectId subject, ShapeFeature feature) {
        if (!entries_.empty() && !compatible(entries_.front().feature, feature))
            throw DomainError("gallery entry for '" + subject.str() + "' has incompatible feature parameters");
        entries_.push_back({std::move(subject), std::move(feature)});
    }

    std::span<const GalleryEntry> entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    std::vector<SubjectId> subjects() const {
        std::set<SubjectId> s;
        for (const auto& e : entries_) s.insert(e.subject);
        return {s.begin(), s.end()};
    }

private:
    std::vector<GalleryEntry> entries_;
};

struct Neighbor {
    SubjectId subject;
    double distance = 0.0;
};

struct IdentificationResult {
    SubjectId predicted;
    std::vector<Neighbor> neighbors; // k nearest, ascending distance
};

/// Majority vote among the k nearest candidates. Candidates are ranked by
/// (distance, subject); vote ties go to the smallest summed distance, then to
/// the lexicographically smallest subject.
inline IdentificationResult vote(std::vector<Neighbor> candidates, std::size_t k) {
    if (candidates.empty()) throw DomainError("cannot classify against an empty gallery");
    if (k == 0 || k > candidates.size())
        throw DomainError("knn.k = " + std::to_string(k) + " must be in [1, " + std::to_string(candidates.size()) + "]");
    std::ranges::sort(candidates, [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.subject < b.subject;
    });
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(k), candidates.end());

    struct Tally { std::size_t votes = 0; double distance = 0.0; };
    std::map<SubjectId, Tally> tally;
    for (const auto& c : candidates) {
        auto& t = tally[c.subject];
        ++t.votes;
        t.distance += c.distance;
    }
    auto best = tally.begin();
    for (auto it = std::next(tally.begin()); it != tally.end(); ++it) {
        const auto& [v, d] = it->second;
        if (v > best->second.votes || (v == best->second.votes && d < best->second.distance)) best = it;
    }
    return {best->first, std::move(candidates)};
}

inline IdentificationResult knn_classify(const ShapeFeature& query, const Gallery& gallery, std::size_t k,
                                         std::size_t band = 0) {
    if (gallery.empty()) throw DomainError("cannot classify against an empty gallery");
    if (k == 0 || k > gallery.size())
        throw DomainError("knn.k = " + std::to_string(k) + " must be in [1, " + std::to_string(gallery.size()) + "]");
    std::vector<Neighbor> candidates;
    candidates.reserve(gallery.size());
    for (const auto& e : gallery.entries())
        candidates.push_back({e.subject, ensemble_distance(query, e.feature, band)});
    return vote(std::move(candidates), k);
}

// ---------------------------------------------------------------------------
// Evaluation protocols
// ---------------------------------------------------------------------------

/// One recorded crossing. `feature` is empty when segmentation produced no
/// usable segment; such a sample is skipped for training and counts as a
/// miss when used as a probe.
struct LabeledSample {
    SubjectId subject;
    std::size_t index = 0; // position within the subject's recordings
    std::optional<ShapeFeature> feature;
    std::string direction; // carried through to the per-probe results
};

struct EvalProtocol {
    std::size_t k = 3;
    std::size_t band = 0;
    std::size_t train = 20;                        // per subject, for the subject-count sweep
    std::vector<std::size_t> train_sizes{10, 20, 30}; // per subject, training-set sweep
    std::uint64_t seed = 42;
    std::size_t max_subsets = 200;
    std::size_t min_subjects = 2;
};

struct SubjectSweepRow {
    std::size_t subjects = 0;
    std::size_t subsets = 0;
    std::size_t probes = 0; // summed over subsets
    double mean_accuracy = 0.0;
    double min_accuracy = 0.0;
    double max_accuracy = 0.0;
};

struct TrainSizeRow {
    std::size_t train = 0;
    std::size_t probes = 0;
    double accuracy = 0.0;
};

/// Outcome for one probe of the all-subjects run. `result` is empty when the
/// probe had no feature.
struct ProbeResult {
    SubjectId subject;
    std::size_t index = 0;
    std::string direction;
    std::optional<IdentificationResult> result;
};

struct EvalReport {
    std::vector<SubjectSweepRow> subject_sweep;
    std::vector<TrainSizeRow> train_sweep;
    std::vector<SubjectId> labels;                  // confusion row/column order
    std::vector<std::vector<std::size_t>> confusion; // [true][predicted], last column = no feature
    std::size_t probes = 0;
    double accuracy = 0.0; // all subjects, `train` samples each
    std::vector<ProbeResult> predictions;
};

namespace detail {

inline double binomial(std::size_t n, std::size_t k) {
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return std::round(r);
}

inline std::vector<std::vector<std::size_t>> all_combinations(std::size_t n, std::size_t k) {
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> c(k);
    for (std::size_t i = 0; i < k; ++i) c[i] = i;
    while (true) {
        out.push_back(c);
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + i - 1) --i;
        if (i == 0) break;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
    return out;
}

// Distinct random k-subsets, each sorted; order of generation is the seeded draw order.
inline std::vector<std::vector<std::size_t>> sample_combinations(std::size_t n, std::size_t k, std::size_t count,
                                                                 std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::set<std::vector<std::size_t>> seen;
    std::vector<std::vector<std::size_t>> out;
    std::vector<std::size_t> pool(n);
    while (out.size() < count) {
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        for (std::size_t i = 0; i < k; ++i) std::swap(pool[i], pool[i + rng() % (n - i)]);
        std::vector<std::size_t> pick(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        std::ranges::sort(pick);
        if (seen.insert(pick).second) out.push_back(std::move(pick));
    }
    return out;
}

// Memoised pairwise distances between samples.
class DistanceCache {
public:
    DistanceCache(std::span<const LabeledSample> samples, std::size_t band)
        : samples_(samples), band_(band),
          cache_(samples.size() * samples.size(), std::numeric_limits<double>::quiet_NaN()) {}

    double operator()(std::size_t a, std::size_t b) {
        double& slot = cache_[std::min(a, b) * samples_.size() + std::max(a, b)];
        if (std::isnan(slot)) slot = ensemble_distance(*samples_[a].feature, *samples_[b].feature, band_);
        return slot;
    }

private:
    std::span<const LabeledSample> samples_;
    std::size_t band_;
    std::vector<double> cache_;
};

} // namespace detail

/// Accuracy sweeps over subject count and training-set size plus a confusion
/// matrix. Within each subject, samples are ordered by `index`; the first t
/// form the gallery. Deterministic for a given seed.
inline EvalReport evaluate_identification(std::span<const LabeledSample> samples, const EvalProtocol& protocol) {
    if (protocol.k == 0) throw DomainError("knn.k must be positive");
    if (protocol.max_subsets == 0) throw DomainError("eval.max_subsets must be positive");
    std::map<SubjectId, std::vector<std::size_t>> by_subject;
    for (std::size_t i = 0; i < samples.size(); ++i) by_subject[samples[i].subject].push_back(i);
    if (by_subject.size() < 2) throw DomainError("evaluation needs at least 2 subjects");
    for (auto& [subject, idx] : by_subject)
        std::ranges::sort(idx, [&](std::size_t a, std::size_t b) { return samples[a].index < samples[b].index; });

    std::size_t max_train = protocol.train;
    for (auto t : protocol.train_sizes) max_train = std::max(max_train, t);
    for (const auto& [subject, idx] : by_subject)
        if (idx.size() < max_train + 1)
            throw DomainError("subject '" + subject.str() + "' has " + std::to_string(idx.size()) +
                              " samples; the protocol needs at least " + std::to_string(max_train + 1));

    std::vector<SubjectId> subjects;
    for (const auto& [s, _] : by_subject) subjects.push_back(s);
    detail::DistanceCache dist(samples, protocol.band);

    // Classifies `probe` against the first `train` samples of each subject in `subset`.
    auto identify = [&](std::size_t probe, std::span<const std::size_t> subset,
                        std::size_t train) -> std::optional<IdentificationResult> {
        if (!samples[probe].feature) return std::nullopt;
        std::vector<Neighbor> candidates;
        for (auto s : subset) {
            const auto& idx = by_subject.at(subjects[s]);
            for (std::size_t r = 0; r < train; ++r)
                if (samples[idx[r]].feature) candidates.push_back({subjects[s], dist(probe, idx[r])});
        }
        if (candidates.empty()) return std::nullopt;
        const std::size_t k = std::min(protocol.k, candidates.size());
        return vote(std::move(candidates), k);
    };
    auto classify = [&](std::size_t probe, std::span<const std::size_t> subset,
                        std::size_t train) -> std::optional<SubjectId> {
        auto r = identify(probe, subset, train);
        if (!r) return std::nullopt;
        return r->predicted;
    };

    EvalReport report;
    const std::size_t n_subj = subjects.size();

    for (std::size_t n = std::max<std::size_t>(2, protocol.min_subjects); n <= n_subj; ++n) {
        const auto subsets = detail::binomial(n_subj, n) <= static_cast<double>(protocol.max_subsets)
                                 ? detail::all_combinations(n_subj, n)
                                 : detail::sample_combinations(n_subj, n, protocol.max_subsets, protocol.seed + n);
        SubjectSweepRow row{n, subsets.size(), 0, 0.0, 1.0, 0.0};
        for (const auto& subset : subsets) {
            std::size_t correct = 0, probes = 0;
            for (auto s : subset) {
                const auto& idx = by_subject.at(subjects[s]);
                for (std::size_t r = protocol.train; r < idx.size(); ++r) {
                    ++probes;
                    const auto pred = classify(idx[r], subset, protocol.train);
                    if (pred && *pred == subjects[s]) ++correct;
                }
            }
            const double acc = static_cast<double>(correct) / static_cast<double>(probes);
            row.probes += probes;
            row.mean_accuracy += acc;
            row.min_accuracy = std::min(row.min_accuracy, acc);
            row.max_accuracy = std::max(row.max_accuracy, acc);
        }
        row.mean_accuracy /= static_cast<double>(subsets.size());
        report.subject_sweep.push_back(row);
    }

    std::vector<std::size_t> everyone(n_subj);
    for (std::size_t s = 0; s < n_subj; ++s) everyone[s] = s;

    // Training-set sweep on a fixed probe set: samples past the largest training size.
    std::size_t sweep_max = 0;
    for (auto t : protocol.train_sizes) sweep_max = std::max(sweep_max, t);
    for (auto t : protocol.train_sizes) {
        if (t == 0) throw DomainError("training sizes must be positive");
        TrainSizeRow row{t, 0, 0.0};
        std::size_t correct = 0;
        for (std::size_t s = 0; s < n_subj; ++s) {
            const auto& idx = by_subject.at(subjects[s]);
            for (std::size_t r = sweep_max; r < idx.size(); ++r) {
                ++row.probes;
                const auto pred = classify(idx[r], everyone, t);
                if (pred && *pred == subjects[s]) ++correct;
            }
        }
        row.accuracy = static_cast<double>(correct) / static_cast<double>(row.probes);
        report.train_sweep.push_back(row);
    }

    report.labels = subjects;
    report.confusion.assign(n_subj, std::vector<std::size_t>(n_subj + 1, 0));
    std::size_t correct = 0;
    for (std::size_t s = 0; s < n_subj; ++s) {
        const auto& idx = by_subject.at(subjects[s]);
        for (std::size_t r = protocol.train; r < idx.size(); ++r) {
            ++report.probes;
            auto result = identify(idx[r], everyone, protocol.train);
            const auto& sample = samples[idx[r]];
            report.predictions.push_back({sample.subject, sample.index, sample.direction, result});
            if (!result) { ++report.confusion[s][n_subj]; continue; }
            const auto col =
                static_cast<std::size_t>(std::ranges::find(subjects, result->predicted) - subjects.begin());
            ++report.confusion[s][col];
            if (col == s) ++correct;
        }
    }
    report.accuracy = static_cast<double>(correct) / static_cast<double>(report.probes);
    return report;
}

} // namespace freesense
