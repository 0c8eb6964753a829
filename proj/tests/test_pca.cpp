#include "oracles.hpp"

#include <freesense/pca.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace freesense;

namespace {

// Trace whose subcarriers in every pair are c_s * s(t) + offset.
CsiTrace rank_one_trace(std::size_t frames) {
    std::vector<float> data;
    for (std::size_t f = 0; f < frames; ++f) {
        const double s = std::sin(0.01 * static_cast<double>(f)) + 0.3 * std::sin(0.037 * static_cast<double>(f));
        for (std::size_t p = 0; p < 6; ++p)
            for (std::size_t sc = 0; sc < 30; ++sc)
                data.push_back(static_cast<float>(20.0 + (1.0 + 0.1 * static_cast<double>(sc + p)) * s));
    }
    return CsiTrace(1000.0, 2, 3, 30, std::move(data));
}

ComponentSet with_ptp(std::vector<double> ptps) {
    ComponentSet cs;
    cs.pairs = 1;
    cs.components = ptps.size();
    cs.length = 2;
    for (double v : ptps) {
        cs.waveforms.push_back({0.0, v});
        cs.variances.push_back(v);
    }
    return cs;
}

} // namespace

TEST(Pca, RankOneInputConcentratesInTheFirstComponent) {
    const auto t = rank_one_trace(1500);
    const auto cs = pca_project(t, 4);
    ASSERT_EQ(cs.waveforms.size(), 24u);
    for (std::size_t p = 0; p < 6; ++p) {
        double total = 0.0;
        for (std::size_t k = 0; k < 4; ++k) total += cs.variances[p * 4 + k];
        for (std::size_t k = 1; k < 4; ++k) EXPECT_LT(cs.variances[p * 4 + k], 1e-9 * total + 1e-12);
        // First component is proportional to s(t): correlation with the raw stream.
        const auto raw = t.stream(p, 0);
        const auto w = cs.waveform(p, 0);
        double mr = 0, mw = 0;
        for (std::size_t i = 0; i < raw.size(); ++i) { mr += raw[i]; mw += w[i]; }
        mr /= static_cast<double>(raw.size());
        mw /= static_cast<double>(raw.size());
        double sxy = 0, sxx = 0, syy = 0;
        for (std::size_t i = 0; i < raw.size(); ++i) {
            sxy += (raw[i] - mr) * (w[i] - mw);
            sxx += (raw[i] - mr) * (raw[i] - mr);
            syy += (w[i] - mw) * (w[i] - mw);
        }
        EXPECT_GT(std::abs(sxy) / std::sqrt(sxx * syy), 0.999999);
    }
}

TEST(Pca, SixPairsFourComponentsGive24Waveforms) {
    const auto cs = pca_project(rank_one_trace(50), 4);
    EXPECT_EQ(cs.pairs, 6u);
    EXPECT_EQ(cs.components, 4u);
    EXPECT_EQ(cs.waveforms.size(), 24u);
    for (const auto& w : cs.waveforms) EXPECT_EQ(w.size(), 50u);
}

TEST(Pca, MatchesJacobiOracleOnRandomBlocks) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const std::size_t frames = 400, streams = 30, p = 6;
        const auto x = oracle::random_vector(rng, frames * streams, 0.0, 3.0);
        const auto fit = pca_fit(x, frames, streams, p);
        const auto ref = oracle::jacobi(oracle::covariance(x, frames, streams));
        for (std::size_t k = 0; k < p; ++k) {
            EXPECT_NEAR(fit.variances[k], ref.values[k], 1e-9);
            // Same direction up to sign.
            double dot = 0.0;
            for (std::size_t s = 0; s < streams; ++s) dot += fit.basis(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(k)) * ref.vectors[k][s];
            EXPECT_NEAR(std::abs(dot), 1.0, 1e-6);
        }
        const Eigen::MatrixXd gram = fit.basis.transpose() * fit.basis;
        EXPECT_LT((gram - Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p))).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(Pca, ExplainedVarianceIsNonIncreasingAndBounded) {
    std::mt19937_64 rng(8);
    const auto x = oracle::random_vector(rng, 300 * 30);
    const auto fit = pca_fit(x, 300, 30, 30);
    double sum = 0.0;
    for (std::size_t k = 0; k < fit.variances.size(); ++k) {
        if (k > 0) { EXPECT_LE(fit.variances[k], fit.variances[k - 1]); }
        sum += fit.variances[k];
    }
    EXPECT_NEAR(sum, fit.total_variance, 1e-9);
    const auto top4 = pca_fit(x, 300, 30, 4);
    EXPECT_LE(top4.variances[0] + top4.variances[1] + top4.variances[2] + top4.variances[3], top4.total_variance);
}

TEST(Pca, TopVariancesEqualTotalWhenRankIsSmall) {
    // Rank-2 block: every stream is a mix of two series.
    std::mt19937_64 rng(9);
    const auto a = oracle::random_vector(rng, 200), b = oracle::random_vector(rng, 200);
    const auto wa = oracle::random_vector(rng, 30), wb = oracle::random_vector(rng, 30);
    std::vector<double> x(200 * 30);
    for (std::size_t t = 0; t < 200; ++t)
        for (std::size_t s = 0; s < 30; ++s) x[t * 30 + s] = wa[s] * a[t] + wb[s] * b[t];
    const auto fit = pca_fit(x, 200, 30, 4);
    EXPECT_NEAR(fit.variances[0] + fit.variances[1] + fit.variances[2] + fit.variances[3], fit.total_variance, 1e-9);
}

TEST(Pca, ProjectedVarianceEqualsEigenvalue) {
    std::mt19937_64 rng(10);
    const auto x = oracle::random_vector(rng, 500 * 30);
    const auto fit = pca_fit(x, 500, 30, 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const auto& y = fit.projected[k];
        double m = 0, q = 0;
        for (double v : y) m += v;
        m /= static_cast<double>(y.size());
        for (double v : y) q += (v - m) * (v - m);
        EXPECT_NEAR(q / static_cast<double>(y.size() - 1), fit.variances[k], 1e-9);
    }
}

TEST(Pca, SignConventionMakesLargestSamplePositive) {
    std::mt19937_64 rng(11);
    const auto x = oracle::random_vector(rng, 100 * 30);
    const auto fit = pca_fit(x, 100, 30, 4);
    for (const auto& y : fit.projected) {
        const auto it = std::ranges::max_element(y, {}, [](double v) { return std::abs(v); });
        EXPECT_GT(*it, 0.0);
    }
}

TEST(Pca, IsDeterministic) {
    const auto t = rank_one_trace(300);
    const auto a = pca_project(t, 4), b = pca_project(t, 4);
    EXPECT_EQ(a.waveforms, b.waveforms);
}

TEST(Pca, RejectsBadArguments) {
    const auto t = rank_one_trace(10);
    EXPECT_THROW(pca_project(t, 31), DomainError);
    EXPECT_THROW(pca_project(t, 0), DomainError);
    EXPECT_THROW(pca_project(rank_one_trace(1), 4), DomainError);
}

TEST(Reorder, IsAStableDescendingSort) {
    const auto cs = reorder_by_peak_to_peak(with_ptp({1, 3, 2, 2}));
    std::vector<double> ptps;
    for (const auto& w : cs.waveforms) ptps.push_back(peak_to_peak(w));
    EXPECT_EQ(ptps, (std::vector<double>{3, 2, 2, 1}));
    EXPECT_TRUE(cs.ordered_by_peak_to_peak);

    auto tie = with_ptp({1, 2, 2});
    tie.waveforms[1] = {5.0, 7.0}; // ptp 2, distinguishable
    const auto sorted = reorder_by_peak_to_peak(tie);
    EXPECT_EQ(sorted.waveforms[0], (std::vector<double>{5.0, 7.0}));
    EXPECT_EQ(sorted.waveforms[1], (std::vector<double>{0.0, 2.0}));
}

TEST(Reorder, IsIdempotentAndAPermutation) {
    const auto once = reorder_by_peak_to_peak(pca_project(rank_one_trace(400), 4));
    const auto twice = reorder_by_peak_to_peak(once);
    EXPECT_EQ(once.waveforms, twice.waveforms);
    const auto sorted_input = with_ptp({4, 3, 2, 1});
    EXPECT_EQ(reorder_by_peak_to_peak(sorted_input).waveforms, sorted_input.waveforms);

    auto raw = pca_project(rank_one_trace(400), 4);
    auto a = raw.waveforms, b = reorder_by_peak_to_peak(raw).waveforms;
    std::ranges::sort(a);
    std::ranges::sort(b);
    EXPECT_EQ(a, b);
    for (std::size_t p = 0; p < once.pairs; ++p)
        for (std::size_t k = 0; k + 1 < once.components; ++k)
            EXPECT_GE(peak_to_peak(once.waveform(p, k)), peak_to_peak(once.waveform(p, k + 1)));
}
