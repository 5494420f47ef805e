#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vampce/channel.hpp"

using namespace vampce;

TEST_SUITE_BEGIN("channel");

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("vampce_unit_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

} // namespace

TEST_CASE("bg params validation") {
    CHECK_NOTHROW((BgParams{0.1, 100.0}.validate()));
    CHECK_THROWS_AS((BgParams{0.0, 100.0}.validate()), ConfigError);
    CHECK_THROWS_AS((BgParams{1.0, 100.0}.validate()), ConfigError);
    CHECK_THROWS_AS((BgParams{0.5, 0.0}.validate()), ConfigError);
    SeedStream s(1);
    CHECK_THROWS_AS(sample_bg_channel({1, 1, 4}, {0.0, 1.0}, s), ConfigError);
}

TEST_CASE("degenerate sparsity limits") {
    SeedStream s(3);
    ChannelSamplingOptions opt;
    opt.allow_degenerate = true;

    const ChannelRealization zero = sample_bg_channel({2, 2, 50}, {0.0, 10.0}, s, opt);
    CHECK(zero.support_size() == 0);
    CHECK(zero.energy() == 0.0);

    const double gamma_h = 4.0;
    const ChannelRealization full = sample_bg_channel({1, 1, 1000000}, {1.0, gamma_h}, s, opt);
    CHECK(full.support_size() == 1000000);
    const double power = full.energy() / 1e6;
    CHECK(std::abs(power * gamma_h - 1.0) < 0.01);
}

TEST_CASE("support fraction follows lambda") {
    SeedStream s(17);
    const ChannelRealization small = sample_bg_channel({2, 1, 10000}, {0.05, 100.0}, s);
    const double frac = double(small.support_size()) / 20000.0;
    CHECK(frac >= 0.045);
    CHECK(frac <= 0.055);

    const ChannelRealization big = sample_bg_channel({1, 1, 1000000}, {0.05, 100.0}, s);
    const double frac_big = double(big.support_size()) / 1e6;
    CHECK(std::abs(frac_big / 0.05 - 1.0) < 0.1);
}

TEST_CASE("nonempty guarantee redraws empty channels") {
    SeedStream s(8);
    ChannelSamplingOptions opt;
    opt.guarantee_nonempty = true;
    for (int t = 0; t < 50; ++t) {
        const ChannelRealization c = sample_bg_channel({1, 3, 2}, {0.02, 1.0}, s, opt);
        for (std::size_t m = 0; m < 3; ++m) {
            CHECK(c.stacked(m).squaredNorm() > 0.0);
        }
    }
}

TEST_CASE("stacking order concatenates transducer blocks") {
    ChannelRealization c({3, 2, 4});
    for (std::size_t m = 0; m < 2; ++m) {
        for (std::size_t n = 0; n < 3; ++n) {
            CVector t(4);
            for (int l = 0; l < 4; ++l) {
                t(l) = cdouble(double(100 * m + 10 * n + l), 0.0);
            }
            c.set_taps(m, n, t);
        }
    }
    for (std::size_t m = 0; m < 2; ++m) {
        const CVector h = c.stacked(m);
        REQUIRE(h.size() == 12);
        for (std::size_t n = 0; n < 3; ++n) {
            for (std::size_t l = 0; l < 4; ++l) {
                CHECK(h(Eigen::Index(n * 4 + l)).real() == double(100 * m + 10 * n + l));
            }
        }
        ChannelRealization d({3, 2, 4});
        d.set_stacked(m, h);
        CHECK(d.stacked(m) == h);
        CHECK(d.taps(m, 1) == c.taps(m, 1));
    }
    CHECK_THROWS_AS(c.set_taps(0, 0, CVector::Zero(3)), ConfigError);
    CHECK_THROWS_AS(c.set_stacked(0, CVector::Zero(11)), ConfigError);
}

TEST_CASE("tap file round trip is exact") {
    SeedStream s(21);
    const ChannelRealization c = sample_bg_channel({2, 3, 17}, {0.3, 7.0}, s);
    const auto path = temp_file("roundtrip.txt");
    save_channel(c, path);
    const ChannelRealization back = load_channel(path);
    CHECK(back == c);
    std::filesystem::remove(path);
}

TEST_CASE("tap file errors") {
    const auto path = temp_file("bad.txt");

    // one row short
    write_text(path, "1 1 3\n0 0 0 1 0\n0 0 1 0.5 -0.5\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "1 1 2\n0 0 0 1 0\n0 0 1 inf 0\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "1 1 2\n0 0 0 1 0\n0 0 1 nan 0\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "1 1 2\n0 0 0 1 0\n0 0 2 1 0\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "1 1 2\n0 0 0 1 0\n0 0 0 1 0\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "1 1 2\n0 0 0 1\n0 0 1 1 0\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "0 1 2\n");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "");
    CHECK_THROWS_AS(load_channel(path), FormatError);

    write_text(path, "1 1 1\n\n0 0 0 -2.5 1e-3\n");
    const ChannelRealization ok = load_channel(path);
    CHECK(ok.taps(0, 0)(0) == cdouble(-2.5, 1e-3));

    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_channel(path), FormatError);
}

TEST_SUITE_END();
