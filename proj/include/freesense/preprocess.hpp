#pragma once

#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace freesense {

/// Low-pass design request. Cutoff is normalized, in rad/sample.
struct FilterSpec {
    double cutoff_rad_per_sample = 0.0;
    int order = 4;

    void validate() const {
        if (!(cutoff_rad_per_sample > 0.0 && cutoff_rad_per_sample < std::numbers::pi))
            throw DomainError("filter cutoff must lie in (0, pi) rad/sample");
        if (order < 1) throw DomainError("filter order must be >= 1");
    }
};

/// Direct-form transfer function b(z)/a(z) with a[0] == 1.
struct FilterCoefficients {
    std::vector<double> b;
    std::vector<double> a;

    std::size_t order() const noexcept { return a.size() - 1; }
};

enum class FilterInit {
    Zero,        // zero initial state
    SteadyState, // state as if the first sample had been present forever
};

/// Normalized cutoff 2*pi*f/fs.
inline double cutoff_from_hz(double f_hz, double fs_hz) {
    if (!(fs_hz > 0.0) || !std::isfinite(fs_hz)) throw DomainError("sample rate must be positive");
    if (!(f_hz > 0.0)) throw DomainError("cutoff frequency must be positive");
    if (f_hz >= fs_hz / 2.0) throw DomainError("cutoff frequency must be below Nyquist (fs/2)");
    return 2.0 * std::numbers::pi * f_hz / fs_hz;
}

namespace detail {

// Coefficients of prod_k (1 - r_k z^-1), highest power of z^-1 last.
inline std::vector<std::complex<double>> expand_roots(std::span<const std::complex<double>> roots) {
    std::vector<std::complex<double>> c{1.0};
    for (const auto& r : roots) {
        c.push_back(0.0);
        for (std::size_t i = c.size() - 1; i > 0; --i) c[i] -= r * c[i - 1];
    }
    return c;
}

} // namespace detail

/// Complex frequency response at normalized angular frequency w (rad/sample).
inline std::complex<double> frequency_response(const FilterCoefficients& c, double w) {
    std::complex<double> num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < c.b.size(); ++k) num += c.b[k] * std::polar(1.0, -w * static_cast<double>(k));
    for (std::size_t k = 0; k < c.a.size(); ++k) den += c.a[k] * std::polar(1.0, -w * static_cast<double>(k));
    return num / den;
}

inline double magnitude_response(const FilterCoefficients& c, double w) {
    return std::abs(frequency_response(c, w));
}

/// Roots of a(z), from the eigenvalues of its companion matrix.
inline std::vector<std::complex<double>> poles(const FilterCoefficients& c) {
    const auto n = static_cast<Eigen::Index>(c.order());
    if (n == 0) return {};
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) companion(0, i) = -c.a[static_cast<std::size_t>(i) + 1] / c.a[0];
    for (Eigen::Index i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    std::vector<std::complex<double>> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()(i));
    return out;
}

inline bool is_stable(const FilterCoefficients& c) {
    return std::ranges::all_of(poles(c), [](const auto& p) { return std::abs(p) < 1.0; });
}

/// Butterworth low-pass by bilinear transform of the analog prototype, with the
/// analog cutoff pre-warped so that |H(e^{j wc})| = 1/sqrt(2) exactly. Designs
/// whose direct-form coefficients are unstable or deviate from the ideal
/// magnitude by more than 1e-6 are rejected.
inline FilterCoefficients design_lowpass(const FilterSpec& spec) {
    spec.validate();
    const int n = spec.order;
    const double warped = 2.0 * std::tan(spec.cutoff_rad_per_sample / 2.0);

    std::vector<std::complex<double>> poles;
    std::vector<std::complex<double>> zeros(static_cast<std::size_t>(n), {-1.0, 0.0});
    poles.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        const double theta = std::numbers::pi * (2.0 * k + n - 1) / (2.0 * n);
        const std::complex<double> s = warped * std::polar(1.0, theta);
        poles.push_back((2.0 + s) / (2.0 - s));
    }

    const auto a_c = detail::expand_roots(poles);
    const auto b_c = detail::expand_roots(zeros);
    FilterCoefficients coeffs;
    double sum_a = 0.0, sum_b = 0.0;
    for (const auto& v : a_c) { coeffs.a.push_back(v.real()); sum_a += v.real(); }
    for (const auto& v : b_c) { coeffs.b.push_back(v.real()); sum_b += v.real(); }
    const double gain = sum_a / sum_b; // unit DC gain
    for (auto& v : coeffs.b) v *= gain;

    // High orders at low cutoffs lose the response to coefficient rounding.
    const double tan_half_cutoff = std::tan(spec.cutoff_rad_per_sample / 2.0);
    bool faithful = is_stable(coeffs);
    for (int i = 0; faithful && i < 256; ++i) {
        const double w = std::numbers::pi * i / 256.0;
        const double ideal = 1.0 / std::sqrt(1.0 + std::pow(std::tan(w / 2.0) / tan_half_cutoff, 2.0 * n));
        faithful = std::abs(magnitude_response(coeffs, w) - ideal) <= 1e-6;
    }
    if (!faithful)
        throw DomainError("filter order " + std::to_string(n) + " is numerically unrealizable at cutoff " +
                          std::to_string(spec.cutoff_rad_per_sample) + " rad/sample; lower filter.order or raise the cutoff");
    return coeffs;
}

/// Causal single pass, transposed direct form II.
inline std::vector<double> apply_filter(const FilterCoefficients& c, std::span<const double> x,
                                        FilterInit init = FilterInit::Zero) {
    if (c.a.empty() || c.a[0] != 1.0 || c.b.size() != c.a.size())
        throw DomainError("filter coefficients must have a[0] == 1 and len(b) == len(a)");
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("filter input contains a non-finite sample");

    const std::size_t n = c.order();
    std::vector<double> state(n, 0.0);
    if (init == FilterInit::SteadyState && !x.empty() && n > 0) {
        double sum_a = 0.0, sum_b = 0.0;
        for (std::size_t k = 0; k <= n; ++k) { sum_a += c.a[k]; sum_b += c.b[k]; }
        const double x0 = x.front();
        const double y0 = x0 * sum_b / sum_a;
        double acc = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            acc += c.b[i + 1] * x0 - c.a[i + 1] * y0;
            state[i] = acc;
        }
    }

    std::vector<double> y(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double xt = x[t];
        const double yt = c.b[0] * xt + (n > 0 ? state[0] : 0.0);
        for (std::size_t i = 0; i + 1 < n; ++i) state[i] = state[i + 1] + c.b[i + 1] * xt - c.a[i + 1] * yt;
        if (n > 0) state[n - 1] = c.b[n] * xt - c.a[n] * yt;
        y[t] = yt;
    }
    return y;
}

/// Forward-backward application: zero phase, squared magnitude response.
inline std::vector<double> apply_filter_zero_phase(const FilterCoefficients& c, std::span<const double> x,
                                                   FilterInit init = FilterInit::Zero) {
    auto forward = apply_filter(c, x, init);
    std::ranges::reverse(forward);
    auto backward = apply_filter(c, forward, init);
    std::ranges::reverse(backward);
    return backward;
}

struct FilterOptions {
    bool zero_phase = false;
    FilterInit init = FilterInit::SteadyState;
};

/// Filters every stream of a trace independently. The result is stored at the
/// trace's float precision; values that ring below zero are clamped to 0 so
/// the output remains a valid amplitude trace.
inline CsiTrace filter_trace(const CsiTrace& trace, const FilterCoefficients& c, FilterOptions opts = {}) {
    const std::size_t frames = trace.frames();
    const std::size_t streams = trace.streams();
    std::vector<float> out(trace.data().size());
    std::vector<double> series(frames);
    const auto data = trace.data();
    for (std::size_t s = 0; s < streams; ++s) {
        for (std::size_t f = 0; f < frames; ++f) series[f] = data[f * streams + s];
        const auto y = opts.zero_phase ? apply_filter_zero_phase(c, series, opts.init)
                                       : apply_filter(c, series, opts.init);
        for (std::size_t f = 0; f < frames; ++f) out[f * streams + s] = static_cast<float>(std::max(0.0, y[f]));
    }
    return CsiTrace(trace.sample_rate_hz(), trace.n_tx(), trace.n_rx(), trace.n_subcarriers(), std::move(out));
}

} // namespace freesense
