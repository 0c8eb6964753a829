#include "oracles.hpp"

#include <freesense/features.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace freesense;

namespace {

double energy(std::span<const double> x) {
    double e = 0.0;
    for (double v : x) e += v * v;
    return e;
}

} // namespace

TEST(LosWaveform, IsAnExactSlice) {
    ComponentSet cs;
    cs.pairs = 2;
    cs.components = 2;
    cs.length = 10;
    for (int i = 0; i < 4; ++i) {
        std::vector<double> w(10);
        for (int t = 0; t < 10; ++t) w[static_cast<std::size_t>(t)] = 100.0 * i + t;
        cs.waveforms.push_back(w);
        cs.variances.push_back(1.0);
    }
    const auto los = extract_los_waveform(cs, {3, 7});
    ASSERT_EQ(los.series.size(), 4u);
    EXPECT_EQ(los.waveform(1, 0).size(), 4u);
    EXPECT_EQ(los.waveform(1, 0)[0], 203.0);
    EXPECT_EQ(los.waveform(1, 1)[3], 306.0);
    EXPECT_THROW(extract_los_waveform(cs, {3, 11}), DomainError);
    EXPECT_THROW(extract_los_waveform(cs, {5, 5}), DomainError);
}

TEST(Dwt, FilterTapsAreOrthonormal) {
    double hh = 0, gg = 0, hg = 0, shift = 0;
    for (std::size_t t = 0; t < 4; ++t) {
        hh += kD4LowPass[t] * kD4LowPass[t];
        gg += kD4HighPass[t] * kD4HighPass[t];
        hg += kD4LowPass[t] * kD4HighPass[t];
    }
    shift = kD4LowPass[0] * kD4LowPass[2] + kD4LowPass[1] * kD4LowPass[3];
    EXPECT_NEAR(hh, 1.0, 1e-15);
    EXPECT_NEAR(gg, 1.0, 1e-15);
    EXPECT_NEAR(hg, 0.0, 1e-15);
    EXPECT_NEAR(shift, 0.0, 1e-15);
}

TEST(Dwt, ConstantInputGainsSqrtTwoPerLevel) {
    for (std::size_t level = 1; level <= 5; ++level)
        for (double c : {1.0, -2.5, 37.0}) {
            const std::vector<double> x(300, c);
            const auto a = dwt_approximation(x, level);
            const double gain = c * std::pow(2.0, static_cast<double>(level) / 2.0);
            for (double v : a) ASSERT_NEAR(v, gain, 1e-9 * std::abs(gain));
        }
}

TEST(Dwt, LevelZeroIsIdentity) {
    std::mt19937_64 rng(30);
    const auto x = oracle::random_vector(rng, 17);
    EXPECT_EQ(dwt_approximation(x, 0), x);
}

TEST(Dwt, StepMatchesExplicitPaddingAndConvolution) {
    std::mt19937_64 rng(31);
    for (std::size_t n = 3; n <= 64; ++n) {
        const auto x = oracle::random_vector(rng, n);
        const auto a = dwt_step(x, kD4LowPass), ra = oracle::dwt_direct(x, kD4LowPass);
        const auto d = dwt_step(x, kD4HighPass), rd = oracle::dwt_direct(x, kD4HighPass);
        ASSERT_EQ(a.size(), ra.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            ASSERT_NEAR(a[k], ra[k], 1e-12);
            ASSERT_NEAR(d[k], rd[k], 1e-12);
        }
    }
}

TEST(Dwt, AnalysisIsPerfectlyInvertible) {
    std::mt19937_64 rng(32);
    for (std::size_t n : {4u, 5u, 16u, 33u, 128u, 1001u}) {
        const auto x = oracle::random_vector(rng, n, -10.0, 10.0);
        const auto y = oracle::idwt(dwt_step(x, kD4LowPass), dwt_step(x, kD4HighPass), n);
        for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(y[i], x[i], 1e-9) << "n " << n << " i " << i;
    }
}

TEST(Dwt, ApproximationEnergyIsBounded) {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 8 + static_cast<std::size_t>(trial);
        const auto x = oracle::random_vector(rng, n, -5.0, 5.0);
        // The mirrored boundary samples can add energy: at most the first and last three.
        double edge = 0.0;
        for (std::size_t i = 0; i < 3; ++i) edge += x[i] * x[i] + x[n - 1 - i] * x[n - 1 - i];
        EXPECT_LE(energy(dwt_step(x, kD4LowPass)), energy(x) + edge + 1e-9);

        // With zero edges the extension is inert and the plain bound holds.
        std::vector<double> padded(3, 0.0);
        padded.insert(padded.end(), x.begin(), x.end());
        padded.insert(padded.end(), 3, 0.0);
        EXPECT_LE(energy(dwt_step(padded, kD4LowPass)), energy(padded) + 1e-9);
    }
}

TEST(Dwt, EachLevelRoughlyHalvesTheLength) {
    for (std::size_t n : {4u, 5u, 100u, 4000u}) {
        std::size_t len = n;
        for (std::size_t level = 1; level <= 2; ++level) {
            len = (len + 3) / 2;
            EXPECT_EQ(dwt_approximation(std::vector<double>(n, 1.0), level).size(), len);
            EXPECT_EQ(dwt_output_length(n, level), len);
        }
    }
}

TEST(Dwt, IsLinear) {
    std::mt19937_64 rng(34);
    const auto x = oracle::random_vector(rng, 257), y = oracle::random_vector(rng, 257);
    std::vector<double> mix(257);
    for (std::size_t i = 0; i < 257; ++i) mix[i] = 2.0 * x[i] - 0.5 * y[i];
    const auto ax = dwt_approximation(x, 4), ay = dwt_approximation(y, 4), am = dwt_approximation(mix, 4);
    for (std::size_t k = 0; k < am.size(); ++k) ASSERT_NEAR(am[k], 2.0 * ax[k] - 0.5 * ay[k], 1e-12);
}

TEST(Dwt, TooShortSeriesNamesTheMinimumLength) {
    try {
        dwt_approximation(std::vector<double>(31, 0.0), 5);
        FAIL() << "expected a domain error";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("32"), std::string::npos) << e.what();
    }
    EXPECT_NO_THROW(dwt_approximation(std::vector<double>(32, 0.0), 5));
}

TEST(Dwt, LevelForTarget) {
    EXPECT_EQ(level_for_target(4000, 128), 5u);
    EXPECT_EQ(level_for_target(128, 128), 0u);
    EXPECT_EQ(level_for_target(129, 128), 1u);
    EXPECT_THROW(level_for_target(100, 3), DomainError);
}

TEST(ShapeFeatureTest, CompressKeepsLayout) {
    LosWaveform w{{10, 110}, 2, 3, {}};
    std::mt19937_64 rng(35);
    for (int i = 0; i < 6; ++i) w.series.push_back(oracle::random_vector(rng, 100));
    const auto f = dwt_compress(w, 3);
    EXPECT_EQ(f.pairs, 2u);
    EXPECT_EQ(f.components, 3u);
    EXPECT_EQ(f.level, 3u);
    EXPECT_EQ(f.original_length, 100u);
    ASSERT_EQ(f.coeffs.size(), 6u);
    EXPECT_EQ(f.series(1, 2).data(), f.coeffs[5].data());
    EXPECT_EQ(f.coeffs[5], dwt_approximation(w.series[5], 3));
}
