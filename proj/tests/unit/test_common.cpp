#include "cos3d/common.hpp"

#include <sstream>

#include "cos3d/config.hpp"
#include "doctest.h"

using namespace cos3d;

TEST_SUITE_BEGIN("common");

TEST_CASE("fixed2 formatting") {
    CHECK(fixed2(0.0) == "0.00");
    CHECK(fixed2(-0.0001) == "0.00");
    CHECK(fixed2(1.234) == "1.23");
    CHECK(fixed2(5.678) == "5.68");
    CHECK(fixed2(-1.235) == "-1.24");   // half away from zero
    CHECK(fixed2(2.675) == "2.68");
    CHECK(fixed2(0.005) == "0.01");
    CHECK(fixed2(123.0) == "123.00");
    CHECK(fixed2(-0.004) == "0.00");
    CHECK_THROWS_AS(fixed2(std::nan("")), std::invalid_argument);
}

TEST_CASE("fixed2 reprint stability") {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) CHECK(isFixed2Stable(rng.uniform(-100, 100)));
}

TEST_CASE("rng determinism and ranges") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next() == b.next());
        const double u = a.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        (void)b.uniform01();
    }
    Rng c(7);
    for (int i = 0; i < 1000; ++i) CHECK(c.below(13) < 13);
    CHECK_THROWS_AS(c.below(0), std::invalid_argument);
}

TEST_CASE("derived seeds differ per key") {
    CHECK(deriveSeed(1, "a") != deriveSeed(1, "b"));
    CHECK(deriveSeed(1, "a") != deriveSeed(2, "a"));
    CHECK(deriveSeed(1, "a") == deriveSeed(1, "a"));
}

TEST_CASE("json escaping") {
    CHECK(jsonEscape("plain") == "plain");
    CHECK(jsonEscape("a\"b\\c") == "a\\\"b\\\\c");
    CHECK(jsonEscape("line\nbreak\ttab") == "line\\nbreak\\ttab");
    CHECK(jsonEscape(std::string("\x01", 1)) == "\\u0001");
}

TEST_CASE("config parsing") {
    const Config cfg = Config::fromString("# comment\nseed = 42\npolicy= near_to_far,euler \n\nbudget=16384\nflag=true\n");
    CHECK(cfg.getUint("seed", 0) == 42);
    CHECK(cfg.getOr("policy", "") == "near_to_far,euler");
    CHECK(cfg.getInt("budget", 0) == 16384);
    CHECK(cfg.getBool("flag", false));
    CHECK(cfg.getInt("missing", 7) == 7);
    CHECK_THROWS_AS(Config::fromString("not-a-pair"), std::invalid_argument);
}

TEST_CASE("line splitting") {
    std::istringstream in("a\nb\r\nc");
    std::vector<std::string> lines;
    forEachLine(in, [&](std::string_view l, std::size_t) { lines.emplace_back(l); });
    CHECK(lines == std::vector<std::string>{"a", "b", "c"});
}

TEST_SUITE_END();
