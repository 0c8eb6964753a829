#pragma once

#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace freesense {

/// Parameters of one simulated walker. The burst a crossing adds to stream s is
///   A * env(t) * (coupling[s] * (sin(2 pi f1 t + phi1) - dip) + coupling2[s] * r2 * sin(2 pi f2 t + phi2))
/// where env is a flat-top window with raised-cosine rise and fall.
struct SubjectProfile {
    SubjectId subject;
    double duration_mean = 0.0;  // samples
    double duration_sigma = 0.0; // samples
    double rise_fraction = 0.0;  // of the duration
    double fall_fraction = 0.0;
    double band_low_hz = 0.0;    // per-crossing primary frequency range
    double band_high_hz = 0.0;
    double harmonic_ratio = 0.0; // f2 / f1
    double dip = 0.0;            // mean attenuation, relative to the oscillation
    double secondary_ratio = 0.0;
    std::vector<double> coupling{};  // pairs * subcarriers
    std::vector<double> coupling2{}; // pairs * subcarriers

    friend bool operator==(const SubjectProfile&, const SubjectProfile&) = default;
};

struct Crossing {
    double start_s = 0.0;
    SubjectId subject;
};

/// Unlabeled interference (someone moving off the line-of-sight path).
struct Disturbance {
    double start_s = 0.0;
    double duration_s = 0.3;
    double amplitude = 0.5; // relative to SynthSpec::burst_amplitude
};

struct SynthSpec {
    double duration_s = 8.0;
    double sample_rate_hz = 1000.0;
    std::uint32_t n_tx = 2;
    std::uint32_t n_rx = 3;
    std::uint32_t n_subcarriers = 30;
    std::vector<Crossing> schedule;
    std::vector<Disturbance> disturbances;
    double baseline = 20.0;
    double burst_amplitude = 5.0;
    double noise_sigma = 0.8;
    double drift_amplitude = 0.5;
    double drift_period_s = 20.0;
    double min_spacing_s = 4.0; // between crossing starts
    double min_duration_s = 0.7;
    double max_duration_s = 3.0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::mt19937_64 subject_rng(std::uint64_t seed, const SubjectId& subject) {
    std::vector<std::uint32_t> material{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    for (unsigned char c : subject.str()) material.push_back(c);
    std::seed_seq seq(material.begin(), material.end());
    return std::mt19937_64(seq);
}

inline std::mt19937_64 trace_rng(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x7ace5eedu};
    return std::mt19937_64(seq);
}

// Flat-top window on [0, 1) with raised-cosine rise/fall.
inline double envelope(double u, double rise, double fall) {
    if (u < 0.0 || u >= 1.0) return 0.0;
    if (u < rise) return 0.5 * (1.0 - std::cos(std::numbers::pi * u / rise));
    if (u > 1.0 - fall) return 0.5 * (1.0 - std::cos(std::numbers::pi * (1.0 - u) / fall));
    return 1.0;
}

} // namespace detail

inline constexpr std::uint32_t kSynthPairs = 6;
inline constexpr std::uint32_t kSynthSubcarriers = 30;

/// Deterministic profile for (seed, subject). `separation` in [0, 1] scales
/// how far subjects spread around the shared base parameters.
inline SubjectProfile synth_subject_profile(std::uint64_t seed, const SubjectId& subject, double separation,
                                            std::uint32_t pairs = kSynthPairs,
                                            std::uint32_t subcarriers = kSynthSubcarriers) {
    if (!(separation >= 0.0 && separation <= 1.0)) throw DomainError("separation must lie in [0, 1]");
    auto rng = detail::subject_rng(seed, subject);
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    const double s = separation;

    SubjectProfile p{.subject = subject};
    p.duration_mean = 1700.0 + s * 700.0 * sym(rng);
    p.duration_sigma = 100.0;
    p.rise_fraction = 0.12 + s * 0.06 * sym(rng);
    p.fall_fraction = 0.12 + s * 0.06 * sym(rng);
    const double centre = 3.5 + s * 1.0 * sym(rng);
    p.band_low_hz = centre - 0.25;
    p.band_high_hz = centre + 0.25;
    p.harmonic_ratio = 1.6 + s * 0.2 * sym(rng);
    p.dip = 0.6 + s * 0.4 * sym(rng);
    p.secondary_ratio = 0.4 + s * 0.25 * sym(rng);

    const double tilt = s * sym(rng);
    for (std::uint32_t pair = 0; pair < pairs; ++pair) {
        const double gain = 1.0 + s * 0.5 * sym(rng);
        const double gain2 = 1.0 + s * 0.5 * sym(rng);
        for (std::uint32_t sc = 0; sc < subcarriers; ++sc) {
            const double x = static_cast<double>(sc) / static_cast<double>(subcarriers);
            const double shape = 0.8 + 0.2 * std::cos(2.0 * std::numbers::pi * x + tilt) + s * 0.15 * sym(rng);
            const double shape2 = std::cos(std::numbers::pi * x + 0.5 * tilt);
            p.coupling.push_back(gain * shape);
            p.coupling2.push_back(gain2 * shape2);
        }
    }
    return p;
}

/// Generates a trace and its ground-truth crossing labels. A label spans the
/// samples where the crossing's envelope is at least 5% of its peak.
inline std::pair<CsiTrace, std::vector<SegmentLabel>> synth_trace(const std::vector<SubjectProfile>& profiles,
                                                                 const SynthSpec& spec) {
    if (!(spec.sample_rate_hz > 0.0) || !(spec.duration_s >= 0.0)) throw DomainError("invalid synth duration or rate");
    if (spec.noise_sigma < 0.0 || spec.drift_amplitude < 0.0) throw DomainError("noise and drift must be nonnegative");
    if (!(spec.min_duration_s > 0.0 && spec.min_duration_s < spec.max_duration_s))
        throw DomainError("synth duration bounds are invalid");
    const std::size_t frames = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
    const std::size_t pairs = std::size_t{spec.n_tx} * spec.n_rx;
    const std::size_t sc = spec.n_subcarriers;
    const std::size_t streams = pairs * sc;
    const double fs = spec.sample_rate_hz;

    std::map<SubjectId, const SubjectProfile*> lookup;
    for (const auto& p : profiles) {
        if (p.coupling.size() != streams || p.coupling2.size() != streams)
            throw DomainError("profile '" + p.subject.str() + "' does not match the trace geometry");
        lookup.emplace(p.subject, &p);
    }
    auto schedule = spec.schedule;
    std::ranges::sort(schedule, {}, &Crossing::start_s);
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (!lookup.contains(schedule[i].subject))
            throw DomainError("schedule references unknown subject '" + schedule[i].subject.str() + "'");
        if (schedule[i].start_s < 0.0) throw DomainError("crossing starts before the trace");
        if (i > 0 && schedule[i].start_s - schedule[i - 1].start_s < spec.min_spacing_s)
            throw DomainError("crossings at " + std::to_string(schedule[i - 1].start_s) + " s and " +
                              std::to_string(schedule[i].start_s) + " s overlap (minimum spacing " +
                              std::to_string(spec.min_spacing_s) + " s)");
    }

    auto rng = detail::trace_rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double two_pi = 2.0 * std::numbers::pi;

    std::vector<double> level(streams), drift_weight(streams);
    for (std::size_t p = 0; p < pairs; ++p) {
        const double phase = two_pi * unit(rng);
        for (std::size_t s = 0; s < sc; ++s)
            level[p * sc + s] = spec.baseline * (1.0 + 0.2 * std::sin(two_pi * 1.3 * static_cast<double>(s) / static_cast<double>(sc) + phase));
    }
    for (auto& w : drift_weight) w = 0.5 + 0.5 * unit(rng);
    const double drift_phase = two_pi * unit(rng);

    std::vector<double> signal(frames * streams, 0.0);
    for (std::size_t f = 0; f < frames; ++f) {
        const double drift = spec.drift_amplitude * std::sin(two_pi * static_cast<double>(f) / (spec.drift_period_s * fs) + drift_phase);
        for (std::size_t s = 0; s < streams; ++s) signal[f * streams + s] = level[s] + drift_weight[s] * drift;
    }

    std::vector<SegmentLabel> labels;
    std::vector<double> gain(streams), gain2(streams);
    for (const auto& crossing : schedule) {
        const auto& prof = *lookup.at(crossing.subject);
        const double lo = spec.min_duration_s * fs, hi = spec.max_duration_s * fs;
        const double duration = std::clamp(prof.duration_mean + prof.duration_sigma * gauss(rng), lo, hi);
        const double f1 = prof.band_low_hz + (prof.band_high_hz - prof.band_low_hz) * unit(rng);
        const double f2 = f1 * prof.harmonic_ratio;
        const double phi1 = two_pi * unit(rng), phi2 = two_pi * unit(rng);
        const double amp = spec.burst_amplitude * (1.0 + 0.08 * gauss(rng));
        for (std::size_t s = 0; s < streams; ++s) {
            gain[s] = prof.coupling[s] * (1.0 + 0.05 * gauss(rng));
            gain2[s] = prof.coupling2[s] * (1.0 + 0.05 * gauss(rng));
        }
        const auto start = static_cast<std::size_t>(std::llround(crossing.start_s * fs));
        const auto length = static_cast<std::size_t>(std::llround(duration));
        if (start + length > frames)
            throw DomainError("crossing at " + std::to_string(crossing.start_s) + " s runs past the end of the trace");

        std::optional<std::size_t> first, last;
        for (std::size_t k = 0; k < length; ++k) {
            const double u = static_cast<double>(k) / duration;
            const double env = detail::envelope(u, prof.rise_fraction, prof.fall_fraction);
            if (env >= 0.05) { if (!first) first = start + k; last = start + k; }
            if (env == 0.0) continue;
            const double t = static_cast<double>(k) / fs;
            const double primary = std::sin(two_pi * f1 * t + phi1) - prof.dip;
            const double secondary = prof.secondary_ratio * std::sin(two_pi * f2 * t + phi2);
            double* row = &signal[(start + k) * streams];
            for (std::size_t s = 0; s < streams; ++s) row[s] += amp * env * (gain[s] * primary + gain2[s] * secondary);
        }
        if (first && *last > *first) labels.push_back({{*first, *last}, crossing.subject, {}});
    }

    for (const auto& d : spec.disturbances) {
        const auto start = static_cast<std::size_t>(std::llround(d.start_s * fs));
        const auto length = static_cast<std::size_t>(std::llround(d.duration_s * fs));
        if (start + length > frames) throw DomainError("disturbance runs past the end of the trace");
        const double f = 2.0 + 6.0 * unit(rng);
        const double phi = two_pi * unit(rng);
        for (auto& g : gain) g = unit(rng);
        for (std::size_t k = 0; k < length; ++k) {
            const double env = detail::envelope(static_cast<double>(k) / static_cast<double>(length), 0.3, 0.3);
            const double v = spec.burst_amplitude * d.amplitude * env * std::sin(two_pi * f * static_cast<double>(k) / fs + phi);
            double* row = &signal[(start + k) * streams];
            for (std::size_t s = 0; s < streams; ++s) row[s] += gain[s] * v;
        }
    }

    std::vector<float> data(signal.size());
    for (std::size_t i = 0; i < signal.size(); ++i)
        data[i] = static_cast<float>(std::max(0.0, signal[i] + spec.noise_sigma * gauss(rng)));
    return {CsiTrace(fs, spec.n_tx, spec.n_rx, spec.n_subcarriers, std::move(data)), std::move(labels)};
}

// ---------------------------------------------------------------------------
// Labeled corpora: `samples_per_subject` single-crossing traces per subject.
// Trace i belongs to subject i % subjects and is that subject's
// (i / subjects)-th recording.
// ---------------------------------------------------------------------------

struct CorpusSpec {
    std::uint64_t seed = 42;
    std::size_t subjects = 6;
    std::size_t samples_per_subject = 40;
    double separation = 0.7;
    double noise_sigma = 0.8;
    double duration_s = 8.0;
    double disturbance_probability = 0.6;

    void validate() const {
        if (subjects == 0 || subjects > 99) throw DomainError("synth.subjects must be in [1, 99]");
        if (samples_per_subject == 0) throw DomainError("synth.samples must be positive");
        if (!(separation >= 0.0 && separation <= 1.0)) throw DomainError("synth.separation must lie in [0, 1]");
        if (noise_sigma < 0.0) throw DomainError("synth.noise must be nonnegative");
        if (duration_s < 6.5) throw DomainError("synth.duration must be at least 6.5 s");
        if (!(disturbance_probability >= 0.0 && disturbance_probability <= 1.0))
            throw DomainError("synth.disturbance_probability must lie in [0, 1]");
    }
    std::size_t size() const noexcept { return subjects * samples_per_subject; }
};

inline SubjectId corpus_subject(std::size_t s) {
    std::string name = "S";
    if (s + 1 < 10) name += '0';
    return SubjectId(name + std::to_string(s + 1));
}

inline std::vector<SubjectProfile> corpus_profiles(const CorpusSpec& c) {
    c.validate();
    std::vector<SubjectProfile> out;
    for (std::size_t s = 0; s < c.subjects; ++s) out.push_back(synth_subject_profile(c.seed, corpus_subject(s), c.separation));
    return out;
}

/// Synthesis parameters for corpus trace i: one crossing placed at a random
/// time, and possibly one short disturbance well clear of it.
inline SynthSpec corpus_trace_spec(const CorpusSpec& c, std::size_t i) {
    c.validate();
    if (i >= c.size()) throw DomainError("corpus index out of range");
    const std::size_t subject = i % c.subjects;
    const std::size_t sample = i / c.subjects;
    std::seed_seq seq{static_cast<std::uint32_t>(c.seed), static_cast<std::uint32_t>(c.seed >> 32),
                      static_cast<std::uint32_t>(subject), static_cast<std::uint32_t>(sample), 0xc0de5u};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    SynthSpec spec;
    spec.duration_s = c.duration_s;
    spec.noise_sigma = c.noise_sigma;
    spec.seed = rng();
    const double earliest = 1.5;
    const double latest = c.duration_s - 1.2 - spec.max_duration_s;
    const double start = earliest + (latest - earliest) * unit(rng);
    spec.schedule.push_back({start, corpus_subject(subject)});

    if (unit(rng) < c.disturbance_probability) {
        Disturbance d;
        d.duration_s = 0.2 + 0.2 * unit(rng);
        d.amplitude = 0.6 + 0.4 * unit(rng);
        // Either in the lead-in or after the longest possible crossing.
        const double gap = 0.9;
        const double before_hi = start - gap - d.duration_s;
        const double after_lo = start + spec.max_duration_s + gap;
        const double after_hi = c.duration_s - 0.6 - d.duration_s;
        const bool can_before = before_hi > 0.6, can_after = after_hi > after_lo;
        const bool pick_before = can_before && (!can_after || unit(rng) < 0.5);
        if (pick_before) d.start_s = 0.6 + (before_hi - 0.6) * unit(rng);
        else if (can_after) d.start_s = after_lo + (after_hi - after_lo) * unit(rng);
        if (can_before || can_after) spec.disturbances.push_back(d);
    }
    return spec;
}

struct CorpusItem {
    SubjectId subject;
    std::size_t index = 0; // within the subject
    CsiTrace trace;
    std::vector<SegmentLabel> labels;
};

inline CorpusItem corpus_item(const CorpusSpec& c, const std::vector<SubjectProfile>& profiles, std::size_t i) {
    auto [trace, labels] = synth_trace(profiles, corpus_trace_spec(c, i));
    return {corpus_subject(i % c.subjects), i / c.subjects, std::move(trace), std::move(labels)};
}

} // namespace freesense
