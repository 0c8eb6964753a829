#include "oracles.hpp"

#include <freesense/classifier.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace freesense;

namespace {

ShapeFeature feature(std::vector<std::vector<double>> series) {
    ShapeFeature f;
    f.pairs = 1;
    f.components = series.size();
    f.level = 0;
    f.original_length = series.front().size();
    f.coeffs = std::move(series);
    return f;
}

std::vector<Neighbor> neighbors(std::initializer_list<std::pair<const char*, double>> list) {
    std::vector<Neighbor> out;
    for (const auto& [s, d] : list) out.push_back({SubjectId(s), d});
    return out;
}

} // namespace

TEST(Dtw, Examples) {
    EXPECT_EQ(dtw_distance(std::vector<double>{0, 0}, std::vector<double>{1, 1}), 2.0);
    EXPECT_EQ(dtw_distance(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 2, 3}), 0.0);
    EXPECT_EQ(dtw_distance(std::vector<double>{5}, std::vector<double>{1, 2, 3}), 9.0);
    EXPECT_THROW(dtw_distance(std::vector<double>{}, std::vector<double>{1}), DomainError);
}

TEST(Dtw, MatchesExhaustivePathSearch) {
    std::mt19937_64 rng(40);
    for (std::size_t m = 1; m <= 7; ++m)
        for (std::size_t n = 1; n <= 7; ++n) {
            const auto x = oracle::random_vector(rng, m, -3, 3), y = oracle::random_vector(rng, n, -3, 3);
            ASSERT_NEAR(dtw_distance(x, y), oracle::dtw_exhaustive(x, y), 1e-12) << m << "x" << n;
        }
}

TEST(Dtw, IsSymmetricNonNegativeAndZeroOnSelf) {
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<std::size_t> len(1, 60);
    for (int trial = 0; trial < 200; ++trial) {
        const auto x = oracle::random_vector(rng, len(rng)), y = oracle::random_vector(rng, len(rng));
        EXPECT_EQ(dtw_distance(x, y), dtw_distance(y, x));
        EXPECT_GE(dtw_distance(x, y), 0.0);
        EXPECT_EQ(dtw_distance(x, x), 0.0);
    }
}

TEST(Dtw, NeverExceedsTheDiagonalPath) {
    std::mt19937_64 rng(42);
    for (int trial = 0; trial < 100; ++trial) {
        const auto x = oracle::random_vector(rng, 40), y = oracle::random_vector(rng, 40);
        double diag = 0.0;
        for (std::size_t i = 0; i < 40; ++i) diag += std::abs(x[i] - y[i]);
        EXPECT_LE(dtw_distance(x, y), diag + 1e-12);
    }
}

TEST(Dtw, BandOnlyRestrictsPaths) {
    std::mt19937_64 rng(43);
    for (int trial = 0; trial < 50; ++trial) {
        const auto x = oracle::random_vector(rng, 50), y = oracle::random_vector(rng, 37);
        const double full = dtw_distance(x, y);
        EXPECT_GE(dtw_distance(x, y, 3), full - 1e-12);
        EXPECT_EQ(dtw_distance(x, y, 50), full);
        EXPECT_TRUE(std::isfinite(dtw_distance(x, y, 1)));
    }
}

TEST(Ensemble, SumsPerSeriesDistances) {
    const auto a = feature({{0, 0}, {1, 2, 3}});
    const auto b = feature({{1, 1}, {1, 2, 2, 3}});
    EXPECT_EQ(ensemble_distance(a, b), 2.0);
    auto other = b;
    other.level = 1;
    EXPECT_THROW(ensemble_distance(a, other), DomainError);
}

TEST(Vote, MajorityAmongNearest) {
    const auto r = vote(neighbors({{"A", 1.0}, {"B", 2.0}, {"B", 3.0}, {"A", 9.0}}), 3);
    EXPECT_EQ(r.predicted, SubjectId("B"));
    ASSERT_EQ(r.neighbors.size(), 3u);
    EXPECT_EQ(r.neighbors[0].distance, 1.0);
    EXPECT_EQ(vote(neighbors({{"A", 1.0}, {"B", 2.0}, {"B", 3.0}}), 1).predicted, SubjectId("A"));
}

TEST(Vote, TiesGoToSmallerSummedDistanceThenName) {
    EXPECT_EQ(vote(neighbors({{"A", 1.0}, {"B", 2.0}, {"C", 1.5}, {"B", 0.5}}), 4).predicted, SubjectId("B"));
    EXPECT_EQ(vote(neighbors({{"Z", 1.0}, {"A", 1.0}}), 2).predicted, SubjectId("A"));
    EXPECT_EQ(vote(neighbors({{"Z", 1.0}, {"A", 1.0}}), 1).predicted, SubjectId("A"));
}

TEST(Vote, IgnoresCandidateOrder) {
    auto c = neighbors({{"A", 1.0}, {"B", 1.0}, {"C", 2.0}, {"B", 2.5}, {"A", 3.0}, {"C", 0.5}});
    const auto ref = vote(c, 3).predicted;
    std::mt19937_64 rng(44);
    for (int i = 0; i < 50; ++i) {
        std::ranges::shuffle(c, rng);
        EXPECT_EQ(vote(c, 3).predicted, ref);
    }
}

TEST(Vote, RejectsBadK) {
    EXPECT_THROW(vote(neighbors({{"A", 1.0}}), 2), DomainError);
    EXPECT_THROW(vote(neighbors({{"A", 1.0}}), 0), DomainError);
    EXPECT_THROW(vote({}, 1), DomainError);
}

TEST(Knn, ClassifiesAgainstAGallery) {
    Gallery g;
    g.add(SubjectId("low"), feature({{0, 0, 0, 0}}));
    g.add(SubjectId("low"), feature({{0, 0.1, 0, 0}}));
    g.add(SubjectId("high"), feature({{5, 5, 5, 5}}));
    g.add(SubjectId("high"), feature({{5, 4.9, 5, 5}}));
    EXPECT_EQ(knn_classify(feature({{0.2, 0, 0.1, 0}}), g, 3).predicted, SubjectId("low"));
    EXPECT_EQ(knn_classify(feature({{4, 4, 4, 6}}), g, 3).predicted, SubjectId("high"));
    EXPECT_EQ(g.subjects(), (std::vector<SubjectId>{SubjectId("high"), SubjectId("low")}));
    EXPECT_THROW(knn_classify(feature({{0, 0}}), Gallery{}, 1), DomainError);
    EXPECT_THROW(g.add(SubjectId("x"), feature({{1}, {2}})), DomainError);
}

TEST(Evaluate, SeparableSubjectsScorePerfectly) {
    std::vector<LabeledSample> samples;
    for (int s = 0; s < 4; ++s)
        for (std::size_t i = 0; i < 12; ++i) {
            const double level = 10.0 * s;
            samples.push_back({SubjectId("S" + std::to_string(s)), i,
                               feature({{level, level + 1, level}, {level, level}}), {}});
        }
    EvalProtocol p;
    p.train = 5;
    p.train_sizes = {2, 5, 10};
    const auto r = evaluate_identification(samples, p);
    EXPECT_EQ(r.accuracy, 1.0);
    EXPECT_EQ(r.probes, 4u * 7u);
    ASSERT_EQ(r.subject_sweep.size(), 3u);
    EXPECT_EQ(r.subject_sweep[0].subjects, 2u);
    EXPECT_EQ(r.subject_sweep[0].subsets, 6u);
    for (const auto& row : r.subject_sweep) EXPECT_EQ(row.mean_accuracy, 1.0);
    for (const auto& row : r.train_sweep) {
        EXPECT_EQ(row.accuracy, 1.0);
        EXPECT_EQ(row.probes, 4u * 2u);
    }
    for (std::size_t s = 0; s < 4; ++s) EXPECT_EQ(r.confusion[s][s], 7u);
    EXPECT_EQ(r.predictions.size(), r.probes);
}

TEST(Evaluate, MissingFeaturesCountAsMisses) {
    std::vector<LabeledSample> samples;
    for (int s = 0; s < 2; ++s)
        for (std::size_t i = 0; i < 4; ++i) samples.push_back({SubjectId(s ? "B" : "A"), i, feature({{double(s)}}), {}});
    samples[3].feature.reset();
    EvalProtocol p;
    p.k = 1;
    p.train = 2;
    p.train_sizes = {2};
    const auto r = evaluate_identification(samples, p);
    EXPECT_EQ(r.confusion[0][2], 1u);
    EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 4.0);
    EXPECT_FALSE(r.predictions[1].result.has_value());
}

TEST(Evaluate, RejectsTooFewSamplesOrSubjects) {
    std::vector<LabeledSample> samples;
    for (std::size_t i = 0; i < 5; ++i) samples.push_back({SubjectId("A"), i, feature({{0.0}}), {}});
    EvalProtocol p;
    p.train = 2;
    p.train_sizes = {2};
    EXPECT_THROW(evaluate_identification(samples, p), DomainError);
    for (std::size_t i = 0; i < 2; ++i) samples.push_back({SubjectId("B"), i, feature({{1.0}}), {}});
    EXPECT_THROW(evaluate_identification(samples, p), DomainError);
}

TEST(Evaluate, IsDeterministic) {
    std::mt19937_64 rng(45);
    std::vector<LabeledSample> samples;
    for (int s = 0; s < 5; ++s)
        for (std::size_t i = 0; i < 8; ++i)
            samples.push_back({SubjectId("S" + std::to_string(s)), i, feature({oracle::random_vector(rng, 10)}), {}});
    EvalProtocol p;
    p.train = 3;
    p.train_sizes = {1, 3};
    p.max_subsets = 4;
    const auto a = evaluate_identification(samples, p), b = evaluate_identification(samples, p);
    EXPECT_EQ(a.accuracy, b.accuracy);
    EXPECT_EQ(a.confusion, b.confusion);
    ASSERT_EQ(a.subject_sweep.size(), b.subject_sweep.size());
    for (std::size_t i = 0; i < a.subject_sweep.size(); ++i) {
        EXPECT_EQ(a.subject_sweep[i].mean_accuracy, b.subject_sweep[i].mean_accuracy);
        EXPECT_LE(a.subject_sweep[i].subsets, 5u);
    }
}
