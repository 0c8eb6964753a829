#include <freesense/io.hpp>
#include <freesense/pipeline.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace freesense;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("freesense_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(root_);
        fs::create_directories(root_);
    }

    fs::path dir(const std::string& name) const { return root_ / name; }

    CliResult run(const std::string& args) const {
        const auto out = root_ / "stdout.txt", err = root_ / "stderr.txt";
        const std::string cmd = std::string(FREESENSE_CLI) + " " + args + " >" + out.string() + " 2>" + err.string();
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path root_;
};

} // namespace

TEST_F(Cli, StagesComposeToTheInProcessPipeline) {
    const std::string small = " --set synth.subjects=2 --set synth.samples=2";
    ASSERT_EQ(run("synth --index 1" + small + " --out " + dir("synth").string()).exit_code, 0);
    const auto raw = dir("synth") / "trace.csit";
    const auto labels = dir("synth") / "trace.labels.csv";
    ASSERT_TRUE(fs::exists(raw));
    ASSERT_TRUE(fs::exists(labels));
    EXPECT_TRUE(fs::exists(dir("synth") / "manifest.json"));

    ASSERT_EQ(run("filter --trace " + raw.string() + " --out " + dir("filter").string()).exit_code, 0);
    ASSERT_EQ(run("segment --filtered --trace " + (dir("filter") / "filtered.csit").string() + " --labels " +
                  labels.string() + " --out " + dir("seg_staged").string())
                  .exit_code,
              0);
    ASSERT_EQ(run("segment --trace " + raw.string() + " --out " + dir("seg_direct").string()).exit_code, 0);
    const auto staged_segments = slurp(dir("seg_staged") / "segments.csv");
    EXPECT_EQ(staged_segments, slurp(dir("seg_direct") / "segments.csv"));

    ASSERT_EQ(run("extract --trace " + raw.string() + " --segments " + (dir("seg_staged") / "segments.csv").string() +
                  " --labels " + labels.string() + " --out " + dir("extract").string())
                  .exit_code,
              0);
    const auto [layout, records] = load_features(dir("extract") / "features.csv");

    PipelineConfig cfg;
    cfg.synth.subjects = 2;
    cfg.synth.samples_per_subject = 2;
    const auto rec = process_item(synthetic_corpus(cfg.synth).item(1), cfg);
    ASSERT_TRUE(rec.feature.has_value());
    ASSERT_EQ(records.size(), 1u);
    EXPECT_EQ(records[0].subject, SubjectId("S02"));
    EXPECT_EQ(records[0].segment, rec.used);
    const auto& want = *rec.feature;
    const auto& got = records[0].feature;
    ASSERT_EQ(got.coeffs.size(), want.coeffs.size());
    for (std::size_t i = 0; i < want.coeffs.size(); ++i) {
        ASSERT_EQ(got.coeffs[i].size(), want.coeffs[i].size());
        for (std::size_t k = 0; k < want.coeffs[i].size(); ++k) ASSERT_NEAR(got.coeffs[i][k], want.coeffs[i][k], 1e-9);
    }

    ASSERT_EQ(run("train --features " + (dir("extract") / "features.csv").string() + " --out " + dir("train").string())
                  .exit_code,
              0);
    const auto id = run("identify --set knn.k=1 --gallery " + (dir("train") / "gallery.csv").string() + " --trace " +
                        raw.string() + " --out " + dir("identify").string());
    ASSERT_EQ(id.exit_code, 0) << id.err;
    const auto predictions = slurp(dir("identify") / "predictions.csv");
    EXPECT_NE(predictions.find(",S02,0,S02\n"), std::string::npos) << predictions;
}

TEST_F(Cli, IdentifyWithNoSegmentsWarnsAndWritesAnEmptyFile) {
    ASSERT_EQ(run("synth --index 0 --set synth.subjects=1 --set synth.samples=1 --out " + dir("synth").string()).exit_code, 0);
    const auto raw = dir("synth") / "trace.csit";
    ASSERT_EQ(run("segment --trace " + raw.string() + " --out " + dir("seg").string()).exit_code, 0);
    ASSERT_EQ(run("extract --subject S01 --trace " + raw.string() + " --segments " + (dir("seg") / "segments.csv").string() +
                  " --out " + dir("extract").string())
                  .exit_code,
              0);
    ASSERT_EQ(run("train --features " + (dir("extract") / "features.csv").string() + " --out " + dir("train").string())
                  .exit_code,
              0);

    {
        std::ofstream os(dir("flat.csit"), std::ios::binary);
        write_trace(os, CsiTrace(1000.0, 2, 3, 30, std::vector<float>(3000 * 180, 20.0f)));
    }
    const auto r = run("identify --set knn.k=1 --gallery " + (dir("train") / "gallery.csv").string() + " --trace " +
                       dir("flat.csit").string() + " --out " + dir("identify").string());
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_TRUE(fs::exists(dir("identify") / "predictions.csv"));
    EXPECT_EQ(fs::file_size(dir("identify") / "predictions.csv"), 0u);
    const auto warning = nlohmann::json::parse(r.err);
    EXPECT_EQ(warning["status"], "warning");
    EXPECT_EQ(warning["stage"], "identify");
}

TEST_F(Cli, StageFailuresAreJsonOnStderr) {
    ASSERT_EQ(run("synth --index 0 --set synth.subjects=1 --set synth.samples=1 --out " + dir("synth").string()).exit_code, 0);
    const auto r = run("filter --set filter.cutoff_hz=600 --trace " + (dir("synth") / "trace.csit").string() + " --out " +
                       dir("filter").string());
    EXPECT_EQ(r.exit_code, 1);
    const auto err = nlohmann::json::parse(r.err);
    EXPECT_EQ(err["status"], "error");
    EXPECT_EQ(err["stage"], "filter");
    EXPECT_FALSE(err["message"].get<std::string>().empty());

    const auto missing = run("filter --trace " + dir("nope.csit").string() + " --out " + dir("f2").string());
    EXPECT_NE(missing.exit_code, 0);

    const auto bad_key = run("synth --set no.such=1 --out " + dir("s2").string());
    EXPECT_EQ(bad_key.exit_code, 2);
    EXPECT_EQ(nlohmann::json::parse(bad_key.err)["stage"], "config");

    std::ofstream(dir("trunc.csit"), std::ios::binary) << "CSIT\x01";
    const auto trunc = run("filter --trace " + dir("trunc.csit").string() + " --out " + dir("f3").string());
    EXPECT_EQ(trunc.exit_code, 1);
    EXPECT_EQ(nlohmann::json::parse(trunc.err)["stage"], "input");
}

TEST_F(Cli, PrintConfigShowsResolvedValues) {
    std::ofstream(dir("run.cfg")) << "knn.k = 5\nseg.window = 400\n";
    const auto r = run("evaluate --print-config --config " + dir("run.cfg").string() + " --set knn.k=7");
    EXPECT_EQ(r.exit_code, 0) << r.err;
    EXPECT_NE(r.out.find("knn.k = 7\n"), std::string::npos);
    EXPECT_NE(r.out.find("seg.window = 400\n"), std::string::npos);

    PipelineConfig parsed;
    std::stringstream ss(r.out);
    read_config(ss, parsed);
    EXPECT_EQ(parsed.knn.k, 7u);
}

TEST_F(Cli, ManifestRecordsInputsAndOutputs) {
    ASSERT_EQ(run("synth --index 0 --set synth.subjects=1 --set synth.samples=1 --out " + dir("synth").string()).exit_code, 0);
    ASSERT_EQ(run("filter --trace " + (dir("synth") / "trace.csit").string() + " --out " + dir("filter").string()).exit_code, 0);
    const auto m = nlohmann::json::parse(slurp(dir("filter") / "manifest.json"));
    EXPECT_EQ(m["command"], "filter");
    ASSERT_FALSE(m["inputs"].empty());
    EXPECT_EQ(m["inputs"][0]["sha256"].get<std::string>().size(), 64u);
    EXPECT_EQ(m["config"]["filter.order"], "4");
}
