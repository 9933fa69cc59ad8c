// End-to-end checks of the installed command-line surface: golden encode
// output, byte-identical reruns, pipeline composition and exit codes.
#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "support/builders.hpp"
#include "synmine/pipeline.hpp"

#ifndef SYNMINE_CLI_PATH
#define SYNMINE_CLI_PATH "synmine"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
    int exit_code;
    std::string out;
};

fs::path scratch_dir() {
    static fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "synmine_cli_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

RunResult run_cli(const std::string& args) {
    fs::path out = scratch_dir() / "cmd_out.txt";
    std::string cmd = std::string(SYNMINE_CLI_PATH) + " " + args + " > " + out.string() + " 2>&1";
    int rc = std::system(cmd.c_str());
    std::ifstream in(out);
    std::ostringstream ss;
    ss << in.rdbuf();
    return {WEXITSTATUS(rc), ss.str()};
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

} // namespace

TEST(Cli, EncodeMatchesGolden) {
    auto r = run_cli("encode --program " + q(testsupport::fixture_path("fig4.json")));
    EXPECT_EQ(r.exit_code, 0);
    EXPECT_EQ(r.out, testsupport::slurp(testsupport::fixture_path("fig4_rules.golden")));
}

TEST(Cli, WalkIsByteIdenticalAcrossRuns) {
    fs::path a = scratch_dir() / "corpus_a.txt";
    fs::path b = scratch_dir() / "corpus_b.txt";
    std::string common = "walk --program " + q(testsupport::fixture_path("fig4.json")) +
                         " --gamma 5 --walk-length 20 --seed 7 --out ";
    EXPECT_EQ(run_cli(common + q(a)).exit_code, 0);
    EXPECT_EQ(run_cli(common + q(b) + " --workers 4").exit_code, 0);
    EXPECT_EQ(testsupport::slurp(a.string()), testsupport::slurp(b.string()));
}

TEST(Cli, PipelineMinesFig2Specs) {
    fs::path dir = scratch_dir() / "fig2_pipeline";
    auto r = run_cli("pipeline --program " + q(testsupport::fixture_path("fig2.json")) +
                     " --gamma 5 --walk-length 10 --dim 8 --min-support 2 --out-dir " + q(dir));
    ASSERT_EQ(r.exit_code, 0) << r.out;
    for (const char* artifact : {"rules.txt", "corpus.txt", "vectors.txt", "handlers.json",
                                 "transactions.txt", "specs.json", "specs.txt", "violations.json"})
        EXPECT_TRUE(fs::exists(dir / artifact)) << artifact;

    auto doc = nlohmann::ordered_json::parse(testsupport::slurp((dir / "specs.json").string()));
    bool s1 = false, s3 = false;
    for (const auto& s : doc.at("specs")) {
        auto ctx = s.at("context").get<std::vector<std::string>>();
        auto rsp = s.at("response").get<std::vector<std::string>>();
        if (ctx == std::vector<std::string>{"pci_enable_device"} &&
            rsp == std::vector<std::string>{"pci_disable_device"} && s.at("support") == 2)
            s1 = true;
        if (ctx == std::vector<std::string>{"kzalloc", "pci_enable_device", "pci_request_regions"} &&
            rsp == std::vector<std::string>{"snd_atiixp_free"} && s.at("support") == 2)
            s3 = true;
    }
    EXPECT_TRUE(s1);
    EXPECT_TRUE(s3);
}

TEST(Cli, HandlersThenMineThenCheckComposes) {
    fs::path handlers = scratch_dir() / "gfs2_handlers.json";
    auto r1 = run_cli("handlers --program " + q(testsupport::fixture_path("gfs2.json")) +
                      " --out " + q(handlers));
    ASSERT_EQ(r1.exit_code, 0);

    auto r2 = run_cli("check --specs " + q(testsupport::fixture_path("gfs2_specs.json")) +
                      " --handlers " + q(handlers) + " --format json");
    ASSERT_EQ(r2.exit_code, 0);
    auto doc = nlohmann::ordered_json::parse(r2.out);
    ASSERT_EQ(doc.at("violations").size(), 1u);
    EXPECT_EQ(doc.at("violations")[0].at("missing"),
              (std::vector<std::string>{"gfs2_holder_uninit"}));

    fs::path fixed_handlers = scratch_dir() / "gfs2_fixed_handlers.json";
    run_cli("handlers --program " + q(testsupport::fixture_path("gfs2_fixed.json")) + " --out " +
            q(fixed_handlers));
    auto r3 = run_cli("check --specs " + q(testsupport::fixture_path("gfs2_specs.json")) +
                      " --handlers " + q(fixed_handlers) + " --format json");
    ASSERT_EQ(r3.exit_code, 0);
    EXPECT_TRUE(nlohmann::ordered_json::parse(r3.out).at("violations").empty());
}

TEST(Cli, QueryNeighborsWorksOnTrainedVectors) {
    fs::path corpus = scratch_dir() / "fig4_corpus.txt";
    fs::path vectors = scratch_dir() / "fig4_vectors.txt";
    ASSERT_EQ(run_cli("walk --program " + q(testsupport::fixture_path("fig4.json")) +
                      " --gamma 20 --walk-length 20 --seed 3 --out " + q(corpus))
                  .exit_code,
              0);
    ASSERT_EQ(run_cli("train --corpus " + q(corpus) + " --dim 8 --epochs 2 --out " + q(vectors))
                  .exit_code,
              0);
    auto r = run_cli("query --vectors " + q(vectors) + " --neighbors atiixp --n 3 --format json");
    ASSERT_EQ(r.exit_code, 0);
    auto doc = nlohmann::ordered_json::parse(r.out);
    EXPECT_EQ(doc.at("results").size(), 3u);
}

TEST(Cli, DistinctExitCodes) {
    EXPECT_EQ(run_cli("encode --program /nonexistent/prog.json").exit_code, 2);

    fs::path bad = scratch_dir() / "bad.json";
    synmine::write_file(bad.string(), "{ not json");
    EXPECT_EQ(run_cli("encode --program " + q(bad)).exit_code, 3);

    fs::path invalid = scratch_dir() / "invalid.json";
    synmine::write_file(invalid.string(), R"({"functions": [{"name": "f", "entry": "a",
        "nodes": {"a": {"instr": {"kind": "call", "callee": "nope"}, "succ": []}}}]})");
    EXPECT_EQ(run_cli("encode --program " + q(invalid)).exit_code, 3);

    EXPECT_EQ(run_cli("walk --program " + q(testsupport::fixture_path("fig4.json")) +
                      " --gamma 0")
                  .exit_code,
              4);
    EXPECT_EQ(run_cli("frobnicate").exit_code, 4);
}

TEST(Cli, PipelineEqualsComposedStages) {
    fs::path dir = scratch_dir() / "composed";
    fs::create_directories(dir);
    std::string prog = q(testsupport::fixture_path("fig2.json"));
    std::string params = " --gamma 4 --walk-length 8 --dim 8 --seed 2 --min-support 2";

    fs::path pdir = scratch_dir() / "pipe_out";
    ASSERT_EQ(run_cli("pipeline --program " + prog + params + " --out-dir " + q(pdir)).exit_code, 0);

    fs::path corpus = dir / "corpus.txt";
    fs::path vectors = dir / "vectors.txt";
    fs::path handlers = dir / "handlers.json";
    ASSERT_EQ(run_cli("walk --program " + prog + params + " --out " + q(corpus)).exit_code, 0);
    ASSERT_EQ(run_cli("train --corpus " + q(corpus) + params + " --out " + q(vectors)).exit_code, 0);
    ASSERT_EQ(run_cli("handlers --program " + prog + " --out " + q(handlers)).exit_code, 0);
    auto mined = run_cli("mine --handlers " + q(handlers) + params + " --format json");
    ASSERT_EQ(mined.exit_code, 0);

    EXPECT_EQ(testsupport::slurp((pdir / "corpus.txt").string()),
              testsupport::slurp(corpus.string()));
    EXPECT_EQ(testsupport::slurp((pdir / "vectors.txt").string()),
              testsupport::slurp(vectors.string()));
    EXPECT_EQ(testsupport::slurp((pdir / "handlers.json").string()),
              testsupport::slurp(handlers.string()));
    EXPECT_EQ(nlohmann::ordered_json::parse(mined.out),
              nlohmann::ordered_json::parse(testsupport::slurp((pdir / "specs.json").string())));
}
