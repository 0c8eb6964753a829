#include <freesense/config.hpp>

#include <gtest/gtest.h>

#include <sstream>

using namespace freesense;

TEST(Config, DefaultsAreValid) {
    const PipelineConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    EXPECT_EQ(cfg.filter.order, 4);
    EXPECT_EQ(cfg.filter.cutoff_hz, 10.0);
    EXPECT_EQ(cfg.pca.components, 4u);
    EXPECT_EQ(cfg.seg.window, 500u);
    EXPECT_EQ(cfg.seg.timelen1, 500u);
    EXPECT_EQ(cfg.seg.timelen2, 4000u);
    EXPECT_EQ(cfg.knn.k, 3u);
    EXPECT_EQ(cfg.effective_match_tol(), 500);
}

TEST(Config, WriteThenReadRoundTrips) {
    PipelineConfig cfg;
    cfg.filter.cutoff_hz = 12.345678901234567;
    cfg.seg.t1 = 3.25;
    cfg.dwt.level = 4;
    cfg.eval.train_sizes = {5, 15};
    std::stringstream ss;
    write_config(ss, cfg);
    PipelineConfig back;
    read_config(ss, back);
    EXPECT_EQ(config_map(back), config_map(cfg));
    EXPECT_EQ(back.filter.cutoff_hz, cfg.filter.cutoff_hz);
    EXPECT_EQ(back.seg.t1, cfg.seg.t1);
    EXPECT_FALSE(back.seg.t2.has_value());
}

TEST(Config, ReadsCommentsAndAuto) {
    PipelineConfig cfg;
    cfg.seg.t1 = 2.0;
    std::stringstream ss("# tuning\n\nknn.k = 5   # more neighbours\nseg.t1 = auto\nfilter.zero_phase = true\n");
    read_config(ss, cfg);
    EXPECT_EQ(cfg.knn.k, 5u);
    EXPECT_FALSE(cfg.seg.t1.has_value());
    EXPECT_TRUE(cfg.filter.zero_phase);
}

TEST(Config, ErrorsNameTheLineOrKey) {
    PipelineConfig cfg;
    std::stringstream unknown("knn.k = 3\nnot.a.key = 1\n");
    try {
        read_config(unknown, cfg);
        FAIL() << "expected a parse error";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.offset(), 2u);
        EXPECT_NE(std::string(e.what()).find("not.a.key"), std::string::npos);
    }
    EXPECT_THROW(set_config_value(cfg, "knn.k", "three"), DomainError);
    EXPECT_THROW(set_config_value(cfg, "filter.zero_phase", "maybe"), DomainError);
    EXPECT_THROW(apply_assignment(cfg, "knn.k"), ParseError);
}

TEST(Config, ValidationCatchesBadCombinations) {
    PipelineConfig cfg;
    cfg.seg.timelen1 = 5000;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = {};
    cfg.eval.train_sizes.clear();
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = {};
    cfg.filter.order = 0;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = {};
    cfg.seg.t1_fraction = 0.05;
    EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Config, EveryKeyIsSettableAndPrintable) {
    const PipelineConfig defaults;
    for (const auto& [key, value] : config_map(defaults)) {
        PipelineConfig cfg;
        EXPECT_NO_THROW(set_config_value(cfg, key, value)) << key;
        EXPECT_EQ(config_map(cfg), config_map(defaults)) << key;
    }
}
