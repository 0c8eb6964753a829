#pragma once

#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>
#include <freesense/pca.hpp>

#include <array>
#include <cmath>
#include <span>
#include <vector>

namespace freesense {

/// Component waveforms restricted to one detected crossing.
struct LosWaveform {
    Segment segment;
    std::size_t pairs = 0;
    std::size_t components = 0;
    std::vector<std::vector<double>> series; // pair-major, like ComponentSet

    std::span<const double> waveform(std::size_t pair, std::size_t k) const { return series.at(pair * components + k); }
};

/// D4 approximation coefficients of every pair/component series of a crossing.
struct ShapeFeature {
    std::size_t pairs = 0;
    std::size_t components = 0;
    std::size_t level = 0;
    std::size_t original_length = 0;
    std::vector<std::vector<double>> coeffs; // pair-major

    std::span<const double> series(std::size_t pair, std::size_t k) const { return coeffs.at(pair * components + k); }

    friend bool operator==(const ShapeFeature&, const ShapeFeature&) = default;
};

/// Exact slice [begin, end) of every waveform.
inline LosWaveform extract_los_waveform(const ComponentSet& cs, const Segment& seg) {
    cs.validate();
    if (!seg.valid_for(cs.length))
        throw DomainError("segment [" + std::to_string(seg.begin) + ", " + std::to_string(seg.end) +
                          ") is outside a trace of " + std::to_string(cs.length) + " samples");
    LosWaveform out{seg, cs.pairs, cs.components, {}};
    out.series.reserve(cs.waveforms.size());
    for (const auto& w : cs.waveforms)
        out.series.emplace_back(w.begin() + static_cast<std::ptrdiff_t>(seg.begin),
                                w.begin() + static_cast<std::ptrdiff_t>(seg.end));
    return out;
}

// ---------------------------------------------------------------------------
// Daubechies D4 (4-tap) analysis
// ---------------------------------------------------------------------------

/// Orthonormal D4 low-pass taps, (1+sqrt3, 3+sqrt3, 3-sqrt3, 1-sqrt3) / (4 sqrt2).
inline constexpr std::array<double, 4> kD4LowPass{
    0.482962913144534143, 0.836516303737807906, 0.224143868042013381, -0.129409522551260381};

/// Matching high-pass (quadrature mirror) taps, g[t] = (-1)^t h[3-t].
inline constexpr std::array<double, 4> kD4HighPass{
    kD4LowPass[3], -kD4LowPass[2], kD4LowPass[1], -kD4LowPass[0]};

static_assert([] {
    double norm = 0.0, dc = 0.0;
    for (double h : kD4LowPass) { norm += h * h; dc += h; }
    return norm > 1.0 - 1e-14 && norm < 1.0 + 1e-14 && dc > 1.41421356237309 && dc < 1.41421356237310;
}(), "D4 taps must have unit norm and sqrt(2) DC gain");

/// Half-sample symmetric extension: x[-1-i] = x[i], x[N+i] = x[N-1-i].
inline double symmetric_at(std::span<const double> x, std::ptrdiff_t i) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    while (i < 0 || i >= n) {
        if (i < 0) i = -1 - i;
        if (i >= n) i = 2 * n - 1 - i;
    }
    return x[static_cast<std::size_t>(i)];
}

/// Number of coefficients one analysis step produces from n samples.
constexpr std::size_t dwt_output_length(std::size_t n) noexcept { return (n + 3) / 2; }

/// Coefficient count after `level` analysis steps.
constexpr std::size_t dwt_output_length(std::size_t n, std::size_t level) noexcept {
    for (std::size_t l = 0; l < level; ++l) n = dwt_output_length(n);
    return n;
}

/// One analysis step with taps `filter`: out[k] = sum_t filter[t] * x~[2k + 1 - t].
inline std::vector<double> dwt_step(std::span<const double> x, const std::array<double, 4>& filter) {
    std::vector<double> out(dwt_output_length(x.size()));
    for (std::size_t k = 0; k < out.size(); ++k) {
        double acc = 0.0;
        for (std::size_t t = 0; t < filter.size(); ++t)
            acc += filter[t] * symmetric_at(x, static_cast<std::ptrdiff_t>(2 * k + 1) - static_cast<std::ptrdiff_t>(t));
        out[k] = acc;
    }
    return out;
}

/// Approximation coefficients after `level` D4 analysis steps.
inline std::vector<double> dwt_approximation(std::span<const double> x, std::size_t level) {
    const std::size_t min_len = std::size_t{1} << level;
    if (x.size() < min_len)
        throw DomainError("series of length " + std::to_string(x.size()) + " is too short for DWT level " +
                          std::to_string(level) + " (minimum length " + std::to_string(min_len) + ")");
    std::vector<double> a(x.begin(), x.end());
    for (std::size_t l = 0; l < level; ++l) a = dwt_step(a, kD4LowPass);
    return a;
}

/// Smallest level whose approximation of an n-sample series has at most
/// target_len coefficients.
inline std::size_t level_for_target(std::size_t n, std::size_t target_len) {
    if (target_len < 4) throw DomainError("dwt.target_len must be >= 4");
    std::size_t level = 0;
    while (n > target_len) { n = dwt_output_length(n); ++level; }
    return level;
}

inline ShapeFeature dwt_compress(const LosWaveform& w, std::size_t level) {
    ShapeFeature f{w.pairs, w.components, level, w.segment.length(), {}};
    f.coeffs.reserve(w.series.size());
    for (const auto& s : w.series) f.coeffs.push_back(dwt_approximation(s, level));
    return f;
}

} // namespace freesense
