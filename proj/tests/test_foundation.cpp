#include <set>

#include "doctest.h"
#include "symscreen/date.hpp"
#include "symscreen/error.hpp"
#include "symscreen/rng.hpp"
#include "symscreen/text.hpp"
#include "symscreen/toml_lite.hpp"

using namespace symscreen;

TEST_CASE("date parse and format round trip") {
  const Date d = Date::parse("2006-02-28");
  CHECK(d.to_string() == "2006-02-28");
  CHECK(d.plus_days(1).to_string() == "2006-03-01");
  CHECK(Date(2024, 2, 28).plus_days(1).to_string() == "2024-02-29");
  CHECK_THROWS_AS(Date::parse("2006-02-30"), ValidationError);
  CHECK_THROWS_AS(Date::parse("2006-2-3"), ValidationError);
  CHECK_THROWS_AS(Date::parse(""), ValidationError);
}

TEST_CASE("date arithmetic") {
  CHECK(days_between(Date(2006, 1, 20), Date(2006, 1, 1)) == 19);
  CHECK(days_between(Date(2006, 1, 1), Date(2006, 1, 20)) == -19);
  CHECK(Date(2020, 3, 31).minus_months(1).to_string() == "2020-02-29");
  CHECK(Date(2021, 8, 15).minus_months(18).to_string() == "2020-02-15");
  CHECK(age_in_years(Date(2006, 5, 10), Date(2021, 5, 9)) == 14);
  CHECK(age_in_years(Date(2006, 5, 10), Date(2021, 5, 10)) == 15);
}

TEST_CASE("utf8 helpers") {
  const std::string s = "caf\xC3\xA9 ok";  // "café ok"
  CHECK(text::utf8_length(s) == 7);
  CHECK(text::utf8_offset(s, 4) == 5);
  CHECK(text::utf8_offset(s, 100) == s.size());
}

TEST_CASE("word tokens and sentences") {
  const auto toks = text::word_tokens("He's going, to SCHOOL!");
  REQUIRE(toks.size() == 5);
  CHECK(toks[0].word == "he");
  CHECK(toks[4].word == "school");
  CHECK(toks[4].range == text::ByteRange{15, 21});

  const std::string note = "First one. Second?  Third\nFourth";
  const auto ss = text::sentences(note);
  REQUIRE(ss.size() == 4);
  CHECK(note.substr(ss[1].start, ss[1].end - ss[1].start) == "Second?");
  CHECK(note.substr(ss[3].start, ss[3].end - ss[3].start) == "Fourth");
}

TEST_CASE("normalized search ignores case and whitespace runs") {
  const std::string hay = "Mother said He  had to be\nhome-schooled.";
  const auto r = text::find_normalized(hay, "he had to be home-schooled");
  REQUIRE(r);
  CHECK(hay.substr(r->start, r->end - r->start) == "He  had to be\nhome-schooled");
  CHECK_FALSE(text::find_normalized(hay, "not there"));
  CHECK(text::normalize_whitespace("  a \t b\n") == "a b");
}

TEST_CASE("toml subset round trip") {
  const char* src = R"(title = "x"
[[item]]
name = 'literal \n'
count = 3
flag = true
tags = [["a", "b"], ["c"]]
)";
  const auto doc = toml::parse(src);
  const auto items = doc.array("item");
  REQUIRE(items.size() == 1);
  CHECK(items[0]->at("name").as_string() == "literal \\n");
  CHECK(items[0]->at("count").as_int() == 3);
  CHECK(items[0]->at("flag").as_bool());
  CHECK(items[0]->at("tags").as_array().size() == 2);
  const auto again = toml::parse(toml::serialize(doc));
  CHECK(again.array("item")[0]->entries == items[0]->entries);
}

TEST_CASE("toml rejects unsupported syntax with a line number") {
  CHECK_THROWS_AS(toml::parse("a = { b = 1 }"), ValidationError);
  try {
    (void)toml::parse("a = 1\nb = \"unterminated\n");
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("2") != std::string::npos);
  }
  CHECK_THROWS_AS((void)toml::Table{}.at("missing"), ValidationError);
}

TEST_CASE("rng is deterministic and bounded") {
  Rng a(42), b(42), c(43);
  std::vector<std::uint64_t> xa, xb, xc;
  for (int i = 0; i < 8; ++i) {
    xa.push_back(a.next());
    xb.push_back(b.next());
    xc.push_back(c.next());
  }
  CHECK(xa == xb);
  CHECK(xa != xc);
  Rng r(1);
  std::set<std::int64_t> seen;
  for (int i = 0; i < 2000; ++i) {
    const double u = r.uniform();
    CHECK((u >= 0.0 && u < 1.0));
    seen.insert(r.between(-2, 2));
  }
  CHECK(seen == std::set<std::int64_t>{-2, -1, 0, 1, 2});
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
}
