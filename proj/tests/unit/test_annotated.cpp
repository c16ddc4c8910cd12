#include <doctest.h>

#include "fixtures.hpp"
#include "gedprobe/annotated.hpp"
#include "gedprobe/error.hpp"

using namespace gedprobe;

TEST_SUITE("annotated") {
  TEST_CASE("jsonl round trip keeps every field") {
    auto a = fixtures::sentence("s1", "The author laugh .", {2});
    a.verb_positions = std::vector<std::size_t>{2};
    a.construction = Construction::SimpleAgreement;
    a.eval_mask = std::vector<std::size_t>{};
    auto b = fixtures::sentence("s2", "He go to the school yesterday", {1});
    const std::vector<AnnotatedSentence> corpus{a, b};
    CHECK(parse_corpus(serialize_corpus(corpus)) == corpus);
  }

  TEST_CASE("round trip over random corpora") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto corpus = fixtures::random_corpus(15, 1 + seed % 7, 0.5, seed, "r");
      CHECK(parse_corpus(serialize_corpus(corpus)) == corpus);
    }
  }

  TEST_CASE("parse errors carry the line number") {
    const std::string text = to_jsonl_line(fixtures::sentence("a", "x y")) + "\n{not json}\n";
    try {
      parse_corpus(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(e.line() == 2);
    }
  }

  TEST_CASE("label and token lengths must agree") {
    auto s = fixtures::sentence("a", "x y z");
    s.labels.pop_back();
    CHECK_THROWS_AS(validate(s), DataError);
    s = fixtures::sentence("a", "x y z");
    s.verb_positions = std::vector<std::size_t>{3};
    CHECK_THROWS_AS(validate(s), DataError);
  }

  TEST_CASE("error counts") {
    auto s = fixtures::sentence("a", "a b c d e", {1, 2, 4});
    CHECK(s.error_count() == 3);
    CHECK(s.error_span_count() == 2);
    CHECK(s.has_error());
    CHECK_FALSE(fixtures::sentence("b", "a b").has_error());
  }

  TEST_CASE("construction names") {
    for (auto c : all_constructions()) {
      CHECK(parse_construction(construction_name(c)) == c);
    }
    CHECK(parse_construction("simple_agrmt") == Construction::SimpleAgreement);
    CHECK(parse_construction("obj_rel_no_comp_within_inanim") == Construction::WithinObjectRelativeNoComp);
    CHECK(parse_construction("prep_inanim") == Construction::AcrossPrepositionalPhrase);
    CHECK_FALSE(parse_construction("nonsense").has_value());
    CHECK(template_verb_count(Construction::SimpleAgreement) == 1);
    CHECK(template_verb_count(Construction::LongVpCoordination) == 3);
    CHECK(all_constructions().size() == 10);
  }
}
