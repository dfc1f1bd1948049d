#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "fracscale/cli.hpp"
#include "fixture_data.hpp"

using namespace fracscale;
namespace fs = std::filesystem;

namespace {

class RunTest : public ::testing::Test {
protected:
    void SetUp() override {
        root_ = fs::temp_directory_path() /
                ("fracscale_cli_" + std::to_string(getpid()) + "_" +
                 ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    RunConfig config(Command c, const std::string& out_name) const {
        RunConfig cfg;
        cfg.command = c;
        cfg.out = (root_ / out_name).string();
        return cfg;
    }

    static std::string slurp(const fs::path& p) {
        std::ifstream in(p, std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        return s.str();
    }

    fs::path root_;
};

} // namespace

TEST_F(RunTest, GoldenTreeOnTwoBumpFixture) {
    RunConfig cfg = config(Command::tree, "tree");
    cfg.input = fixture_data::path("two_bump.csv");
    cfg.spec.p = 0.0;
    cfg.kind = TreeKind::tw;
    std::ostringstream log, out;
    const RunResult r = run(cfg, log, out);
    ASSERT_EQ(r.status, 0) << r.message;
    EXPECT_EQ(slurp(root_ / "tree" / "tree.txt"), std::string(fixture_data::two_bump_tw_p0) + "\n");
    EXPECT_EQ(out.str(), std::string(fixture_data::two_bump_tw_p0) + "\n");
    for (const char* f : {"config.txt", "tree.json", "tree.dot", "tree.txt"}) EXPECT_TRUE(fs::exists(root_ / "tree" / f)) << f;
}

TEST_F(RunTest, EmptyInputFailsWithoutOutput) {
    const fs::path empty = root_ / "empty.csv";
    std::ofstream(empty).close();
    RunConfig cfg = config(Command::field, "out");
    cfg.input = empty.string();
    std::ostringstream log;
    const RunResult r = run(cfg, log);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.message.find("empty.csv"), std::string::npos);
    EXPECT_NE(log.str().find("error: "), std::string::npos);
    EXPECT_FALSE(fs::exists(root_ / "out"));
}

TEST_F(RunTest, MissingInputIsAnInputError) {
    RunConfig cfg = config(Command::tree, "out");
    std::ostringstream log;
    EXPECT_EQ(run(cfg, log).status, 2);
    EXPECT_NE(log.str().find("--input"), std::string::npos);
}

TEST_F(RunTest, InvalidParametersAreRejected) {
    RunConfig cfg = config(Command::tree, "out");
    cfg.input = fixture_data::path("two_bump.csv");
    std::ostringstream log;
    cfg.spec.p = -0.5;
    EXPECT_EQ(run(cfg, log).status, 2);
    cfg.spec.p = 1.0;
    cfg.threads = 0;
    EXPECT_EQ(run(cfg, log).status, 2);
    cfg.threads = 1;
    cfg.spec.a = 0.0;
    EXPECT_EQ(run(cfg, log).status, 2);
    EXPECT_FALSE(fs::exists(root_ / "out"));
}

TEST_F(RunTest, UnknownConfigKeyIsRejected) {
    EXPECT_THROW(apply_key_values(RunConfig{}, KeyValues{{"sigma", "1"}}), input_error);
    EXPECT_THROW(apply_key_values(RunConfig{}, KeyValues{{"command", "plot"}}), input_error);
    const RunConfig c = apply_key_values(RunConfig{}, KeyValues{{"p-min", "0.7"}, {"rho_count", "12"}});
    EXPECT_EQ(c.p_min, 0.7);
    EXPECT_EQ(c.rho_count, 12u);
}

TEST_F(RunTest, ConfigEchoReproducesTheRun) {
    RunConfig cfg = config(Command::contours, "first");
    cfg.input = fixture_data::path("smooth.csv");
    cfg.spec.p = 1.35;
    cfg.rho_count = 24;
    std::ostringstream log;
    ASSERT_EQ(run(cfg, log).status, 0);

    KeyValues kv = read_key_values_file((root_ / "first" / "config.txt").string());
    kv["out"] = (root_ / "second").string();
    const RunConfig again = apply_key_values(RunConfig{}, kv);
    ASSERT_EQ(run(again, log).status, 0);
    for (const char* f : {"contours.csv", "contours.json"}) {
        EXPECT_EQ(slurp(root_ / "first" / f), slurp(root_ / "second" / f)) << f;
    }
    // The echo differs only in the output directory.
    EXPECT_EQ(to_config_text(apply_key_values(again, KeyValues{{"out", cfg.out}})), slurp(root_ / "first" / "config.txt"));
}

TEST_F(RunTest, TopologyErrorRollsBackOutput) {
    // Mirror-symmetric bump pairs give tied arch apexes.
    BumpSum f{{{-2.0, 1.0, 1.0}, {-5.0, -0.7, 1.0}}};
    for (const auto& b : f.mirrored().bumps) f.bumps.push_back(b);
    const fs::path in = root_ / "sym.csv";
    write_signal_csv(sample(f), in.string());
    RunConfig cfg = config(Command::tree, "out");
    cfg.input = in.string();
    cfg.spec.p = 1.0;
    cfg.rho_min = 0.1;
    cfg.rho_max = 31.41592653589793;
    std::ostringstream log;
    const RunResult r = run(cfg, log);
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.message.find("tied"), std::string::npos);
    EXPECT_FALSE(fs::exists(root_ / "out"));

    // An existing directory survives, minus the files of the failed run.
    fs::create_directories(root_ / "keep");
    std::ofstream(root_ / "keep" / "mine.txt") << "x\n";
    cfg.out = (root_ / "keep").string();
    EXPECT_EQ(run(cfg, log).status, 2);
    EXPECT_TRUE(fs::exists(root_ / "keep" / "mine.txt"));
    EXPECT_FALSE(fs::exists(root_ / "keep" / "config.txt"));
}

TEST_F(RunTest, VerifyWithoutInputPasses) {
    RunConfig cfg = config(Command::verify, "verify");
    cfg.rho_count = 32;
    std::ostringstream log, out;
    const RunResult r = run(cfg, log, out);
    EXPECT_EQ(r.status, 0) << log.str();
    EXPECT_EQ(out.str(), slurp(root_ / "verify" / "verify.txt"));
    const std::string txt = slurp(root_ / "verify" / "verify.txt");
    EXPECT_EQ(txt.find("FAIL"), std::string::npos) << txt;
    EXPECT_NE(txt.find("PASS heat identity"), std::string::npos);
}

TEST_F(RunTest, SweepAndFieldArtifacts) {
    RunConfig cfg = config(Command::sweep, "sweep");
    cfg.input = fixture_data::path("pair_a.csv");
    cfg.p_min = 1.0;
    cfg.p_max = 1.5;
    cfg.p_step = 0.05;
    cfg.rho_min = 0.1;
    cfg.rho_max = 31.41592653589793;
    std::ostringstream log;
    ASSERT_EQ(run(cfg, log).status, 0);
    const auto j = nlohmann::json::parse(slurp(root_ / "sweep" / "sweep.json"));
    EXPECT_GE(j["segments"].size(), 2u);

    cfg = config(Command::field, "field");
    cfg.input = fixture_data::path("smooth.csv");
    cfg.rho_count = 8;
    cfg.derivatives = true;
    const RunResult r = run(cfg, log);
    ASSERT_EQ(r.status, 0) << r.message;
    EXPECT_GE(r.artifacts.size(), 3u);
    for (const auto& a : r.artifacts) EXPECT_TRUE(fs::exists(a)) << a;
}
