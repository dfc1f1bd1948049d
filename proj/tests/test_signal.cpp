#include <filesystem>
#include <fstream>
#include <unistd.h>

#include <gtest/gtest.h>

#include "fracscale/config.hpp"
#include "fracscale/fixtures.hpp"
#include "fracscale/signal.hpp"

using namespace fracscale;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() : path(std::filesystem::temp_directory_path() / ("fracscale_io_" + std::to_string(::getpid()))) {
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name, const std::string& content) const {
        const auto p = path / name;
        std::ofstream(p, std::ios::binary) << content;
        return p.string();
    }
};

} // namespace

TEST(SignalIo, CsvRoundTrip) {
    TempDir t;
    const Signal s = smooth_fixture(SamplingSpec{64, 0.05});
    const std::string path = (t.path / "s.csv").string();
    write_signal_csv(s, path);
    const Signal r = read_signal(path);
    EXPECT_EQ(r.samples, s.samples);
    EXPECT_NEAR(r.dx, s.dx, 1e-15);
    EXPECT_EQ(r.x0, s.x0);
}

TEST(SignalIo, RawRoundTripIsBitwise) {
    TempDir t;
    Signal s = smooth_fixture(SamplingSpec{40, 0.1});
    s.x0 = 1.0 / 3.0;
    const std::string path = (t.path / "s.fsig").string();
    write_signal_raw(s, path);
    const Signal r = read_signal(path);
    EXPECT_EQ(r.samples, s.samples);
    EXPECT_EQ(r.dx, s.dx);
    EXPECT_EQ(r.x0, s.x0);
}

TEST(SignalIo, SingleColumnWithMetadataComment) {
    TempDir t;
    std::string body = "# dx=0.25 x0=-1\n";
    for (int i = 0; i < 10; ++i) body += std::to_string(i) + "\n";
    const Signal s = read_signal(t.file("one.csv", body));
    EXPECT_EQ(s.size(), 10u);
    EXPECT_EQ(s.dx, 0.25);
    EXPECT_EQ(s.x0, -1.0);
    EXPECT_EQ(s.samples[9], 9.0);
}

TEST(SignalIo, Errors) {
    TempDir t;
    const std::string empty = t.file("empty.csv", "");
    try {
        read_signal(empty);
        FAIL() << "expected input_error";
    } catch (const fracscale::input_error& e) {
        EXPECT_NE(std::string(e.what()).find(empty), std::string::npos);
    }
    EXPECT_THROW(read_signal((t.path / "missing.csv").string()), fracscale::input_error);
    EXPECT_THROW(read_signal(t.file("short.csv", "1\n2\n3\n")), fracscale::input_error);
    EXPECT_THROW(read_signal(t.file("nan.csv", "1\n2\n3\n4\nnan\n6\n7\n8\n")), fracscale::input_error);
    EXPECT_THROW(read_signal(t.file("cols.csv", "1,2,3\n")), fracscale::input_error);
    EXPECT_THROW(read_signal(t.file("uneven.csv", "0,1\n1,1\n2,1\n3,1\n4,1\n5,1\n6,1\n7.5,1\n")), fracscale::input_error);
    EXPECT_THROW(read_signal(t.file("raw.fsig", "FSIG n=8 dx=1 x0=0\nabc")), fracscale::input_error);
    EXPECT_THROW(read_signal(t.file("dx.csv", "# dx=0\n1\n2\n3\n4\n5\n6\n7\n8\n")), fracscale::input_error);
}

TEST(Config, KeyValueParsing) {
    const KeyValues kv = parse_key_values("# comment\n a = 1 \n\nb=two\n");
    EXPECT_EQ(kv.at("a"), "1");
    EXPECT_EQ(kv.at("b"), "two");
    EXPECT_THROW(parse_key_values("novalue\n"), fracscale::input_error);
    EXPECT_EQ(parse_double("1e-3", "x"), 1e-3);
    EXPECT_THROW(parse_double("1e-3x", "x"), fracscale::input_error);
    EXPECT_TRUE(parse_bool("true", "b"));
    EXPECT_FALSE(parse_bool("0", "b"));
    EXPECT_THROW(parse_bool("maybe", "b"), fracscale::input_error);
    for (double v : {0.1, 1.0 / 3.0, 2.0e-300, -7.25, 1.35}) EXPECT_EQ(parse_double(format_double(v), "v"), v);
}
