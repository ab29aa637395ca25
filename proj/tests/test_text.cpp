#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "trajrep/text.hpp"

using namespace trajrep;

TEST_SUITE("text") {
  TEST_CASE("format_double round-trips every value exactly") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 2000; ++i) {
      const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
      const auto back = parse_double(format_double(v));
      REQUIRE(back);
      CHECK(*back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(-2.0) == "-2");
  }

  TEST_CASE("parse_double rejects partial and empty fields") {
    CHECK(parse_double(" 12.5 ") == 12.5);
    CHECK(parse_double("+3") == 3.0);
    CHECK_FALSE(parse_double(""));
    CHECK_FALSE(parse_double("1.5m"));
    CHECK_FALSE(parse_double("abc"));
    CHECK(parse_integer("42") == 42);
    CHECK_FALSE(parse_integer("4.2"));
  }

  TEST_CASE("split keeps empty fields") {
    const auto f = split("a,,b,", ',');
    REQUIRE(f.size() == 4);
    CHECK(f[1].empty());
    CHECK(f[3].empty());
  }

  TEST_CASE("utf8 validation") {
    CHECK(is_valid_utf8("plain"));
    CHECK(is_valid_utf8("\xC3\xA9t\xC3\xA9"));
    CHECK_FALSE(is_valid_utf8("\xC3"));
    CHECK_FALSE(is_valid_utf8("\xFF\xFE"));
  }

  TEST_CASE("key-value files with sections") {
    const auto kv = parse_key_values("# comment\nouter = 1\n[sec]\n a = b c \n\nk=v\n");
    REQUIRE(kv.size() == 3);
    CHECK(kv[0].section.empty());
    CHECK(kv[0].key == "outer");
    CHECK(kv[1].section == "sec");
    CHECK(kv[1].value == "b c");
    CHECK(kv[2].line == 6);
    CHECK_THROWS_AS(parse_key_values("[broken\n"), ParseError);
    CHECK_THROWS_AS(parse_key_values("novalue\n"), ParseError);
  }

  TEST_CASE("ParseError carries the line") {
    const ParseError e(12, "boom");
    CHECK(e.line() == 12);
    CHECK(std::string(e.what()) == "line 12: boom");
  }
}
