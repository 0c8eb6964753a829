#pragma once

#include <freesense/csi_model.hpp>
#include <freesense/error.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace freesense {

/// Principal-component fit of one frames x streams block.
struct PcaFit {
    Eigen::MatrixXd basis;                     // streams x p, orthonormal columns
    std::vector<double> variances;             // p sample variances, non-increasing
    double total_variance = 0.0;               // trace of the sample covariance
    std::vector<std::vector<double>> projected; // p series, one per basis column
};

/// Fits the top-p covariance directions of a row-major frames x streams block.
/// Each stream is mean-centred and the covariance uses the N-1 denominator.
/// Every component is oriented so that its largest-magnitude sample is
/// positive, which makes the result deterministic.
inline PcaFit pca_fit(std::span<const double> samples, std::size_t frames, std::size_t streams, std::size_t p) {
    if (p == 0 || p > streams)
        throw DomainError("component count must be in [1, " + std::to_string(streams) + "]");
    if (frames < 2) throw DomainError("PCA needs at least 2 frames");
    if (samples.size() != frames * streams) throw DomainError("sample block has the wrong size");

    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::Map<const RowMajor> raw(samples.data(), static_cast<Eigen::Index>(frames),
                                   static_cast<Eigen::Index>(streams));
    const Eigen::RowVectorXd mean = raw.colwise().mean();
    const Eigen::MatrixXd centred = raw.rowwise() - mean;
    const Eigen::MatrixXd cov =
        (centred.transpose() * centred) / static_cast<double>(frames - 1);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw DomainError("covariance eigendecomposition failed");

    PcaFit fit;
    const auto n = static_cast<Eigen::Index>(streams);
    const auto k = static_cast<Eigen::Index>(p);
    fit.basis.resize(n, k);
    fit.total_variance = cov.trace();
    for (Eigen::Index c = 0; c < k; ++c) {
        // Eigen returns ascending eigenvalues.
        fit.basis.col(c) = solver.eigenvectors().col(n - 1 - c);
        fit.variances.push_back(std::max(0.0, solver.eigenvalues()(n - 1 - c)));
    }

    const Eigen::MatrixXd projected = centred * fit.basis;
    for (Eigen::Index c = 0; c < k; ++c) {
        Eigen::Index argmax = 0;
        projected.col(c).cwiseAbs().maxCoeff(&argmax);
        const double sign = projected(argmax, c) < 0.0 ? -1.0 : 1.0;
        fit.basis.col(c) *= sign;
        std::vector<double> series(frames);
        for (std::size_t t = 0; t < frames; ++t) series[t] = sign * projected(static_cast<Eigen::Index>(t), c);
        fit.projected.push_back(std::move(series));
    }
    return fit;
}

/// p projected waveforms for each antenna pair, pair-major.
struct ComponentSet {
    std::size_t pairs = 0;
    std::size_t components = 0;
    std::size_t length = 0;
    std::vector<std::vector<double>> waveforms; // index pair * components + k
    std::vector<double> variances;              // variance of each waveform's PCA direction
    bool ordered_by_peak_to_peak = false;

    std::span<const double> waveform(std::size_t pair, std::size_t k) const {
        return waveforms.at(pair * components + k);
    }

    void validate() const {
        if (waveforms.size() != pairs * components) throw DomainError("component set has the wrong waveform count");
        for (const auto& w : waveforms)
            if (w.size() != length) throw DomainError("component waveform length mismatch");
    }
};

inline double peak_to_peak(std::span<const double> x) {
    if (x.empty()) return 0.0;
    const auto [lo, hi] = std::ranges::minmax_element(x);
    return *hi - *lo;
}

/// Per-pair PCA of the subcarrier streams. Components come out in
/// decreasing-variance order; see reorder_by_peak_to_peak.
inline ComponentSet pca_project(const CsiTrace& trace, std::size_t p) {
    const std::size_t sc = trace.n_subcarriers();
    if (p == 0 || p > sc) throw DomainError("pca.components must be in [1, " + std::to_string(sc) + "]");
    if (trace.frames() < 2) throw DomainError("PCA needs a trace with at least 2 frames");

    ComponentSet out;
    out.pairs = trace.pairs();
    out.components = p;
    out.length = trace.frames();
    std::vector<double> block(trace.frames() * sc);
    const auto data = trace.data();
    for (std::size_t pair = 0; pair < trace.pairs(); ++pair) {
        for (std::size_t f = 0; f < trace.frames(); ++f) {
            const auto src = data.subspan(f * trace.streams() + pair * sc, sc);
            std::copy(src.begin(), src.end(), block.begin() + static_cast<std::ptrdiff_t>(f * sc));
        }
        auto fit = pca_fit(block, trace.frames(), sc, p);
        for (std::size_t k = 0; k < p; ++k) {
            out.waveforms.push_back(std::move(fit.projected[k]));
            out.variances.push_back(fit.variances[k]);
        }
    }
    return out;
}

/// Within each pair, stable-sorts waveforms by descending peak-to-peak value.
inline ComponentSet reorder_by_peak_to_peak(ComponentSet cs) {
    cs.validate();
    std::vector<std::size_t> order(cs.components);
    std::vector<double> ptp(cs.components);
    for (std::size_t pair = 0; pair < cs.pairs; ++pair) {
        const std::size_t base = pair * cs.components;
        for (std::size_t k = 0; k < cs.components; ++k) ptp[k] = peak_to_peak(cs.waveforms[base + k]);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::ranges::stable_sort(order, [&](std::size_t l, std::size_t r) { return ptp[l] > ptp[r]; });

        std::vector<std::vector<double>> waves(cs.components);
        std::vector<double> vars(cs.components);
        for (std::size_t k = 0; k < cs.components; ++k) {
            waves[k] = std::move(cs.waveforms[base + order[k]]);
            vars[k] = cs.variances[base + order[k]];
        }
        for (std::size_t k = 0; k < cs.components; ++k) {
            cs.waveforms[base + k] = std::move(waves[k]);
            cs.variances[base + k] = vars[k];
        }
    }
    cs.ordered_by_peak_to_peak = true;
    return cs;
}

} // namespace freesense
