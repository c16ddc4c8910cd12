#include <doctest.h>

#include <set>

#include "fixtures.hpp"
#include "gedprobe/error.hpp"
#include "gedprobe/m2corpus.hpp"
#include "gedprobe/stimuli.hpp"

using namespace gedprobe;
using fixtures::words;

namespace {

Edit edit(std::size_t s, std::size_t e, const std::string& repl, const std::string& type) {
  return Edit{s, e, words(repl), type, 0};
}

M2Entry entry(const std::string& src, std::vector<Edit> edits) { return M2Entry{"e", words(src), std::move(edits)}; }

CorpusSplit pool_of(std::size_t n) {
  return CorpusSplit{fixtures::random_corpus(n, 6, 1.0, 3, "w"), Provenance::WikEd, std::nullopt};
}

}  // namespace

TEST_SUITE("m2corpus") {
  TEST_CASE("single block") {
    const auto r = parse_m2("S The train are good\nA 2 3|||R:VERB:SVA|||is|||REQUIRED|||-NONE-|||0\n");
    REQUIRE(r.entries.size() == 1);
    REQUIRE(r.entries[0].edits.size() == 1);
    CHECK(r.entries[0].edits[0] == edit(2, 3, "is", "R:VERB:SVA"));
    CHECK(r.warnings.empty());
  }

  TEST_CASE("unannotated sentence, noop and deletions") {
    const auto r = parse_m2(
        "S Fine sentence\n\n"
        "S Also fine\nA -1 -1|||noop|||-NONE-|||REQUIRED|||-NONE-|||0\n\n"
        "S A very big dog\nA 1 2|||U:ADV|||-NONE-|||REQUIRED|||-NONE-|||0\n");
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].edits.empty());
    CHECK(r.entries[1].edits.empty());
    CHECK(r.entries[2].edits[0].replacement.empty());
    CHECK(r.entries[0].id == "s0");
    CHECK(r.entries[2].id == "s2");
  }

  TEST_CASE("annotator selection") {
    const std::string block =
        "S He go to school\n"
        "A 1 2|||R:VERB:SVA|||goes|||REQUIRED|||-NONE-|||0\n"
        "A 3 3|||M:DET|||the|||REQUIRED|||-NONE-|||1\n"
        "A 1 2|||R:VERB:TENSE|||went|||REQUIRED|||-NONE-|||1\n";
    CHECK(parse_m2(block).entries[0].edits.size() == 1);
    M2Options one;
    one.annotator = 1;
    const auto r = parse_m2(block, one);
    REQUIRE(r.entries[0].edits.size() == 2);
    CHECK(r.entries[0].edits[0].error_type == "R:VERB:TENSE");
    CHECK(r.entries[0].edits[1].error_type == "M:DET");
  }

  TEST_CASE("overlapping edit is dropped with a warning") {
    const auto r = parse_m2(
        "S a b c d\n"
        "A 1 3|||R:OTHER|||x|||REQUIRED|||-NONE-|||0\n"
        "A 2 4|||R:OTHER|||y|||REQUIRED|||-NONE-|||0\n");
    REQUIRE(r.entries[0].edits.size() == 1);
    CHECK(r.entries[0].edits[0].span_start == 1);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].line == 3);
  }

  TEST_CASE("malformed spans are parse errors") {
    CHECK_THROWS_AS(parse_m2("S a b\nA x 1|||R:X|||y|||REQUIRED|||-NONE-|||0\n"), ParseError);
    CHECK_THROWS_AS(parse_m2("S a b\nA 1 5|||R:X|||y|||REQUIRED|||-NONE-|||0\n"), ParseError);
    CHECK_THROWS_AS(parse_m2("S a b\nA 2 1|||R:X|||y|||REQUIRED|||-NONE-|||0\n"), ParseError);
  }

  TEST_CASE("overlap predicate") {
    CHECK(edits_overlap(edit(1, 3, "", "X"), edit(2, 4, "", "X")));
    CHECK_FALSE(edits_overlap(edit(1, 2, "", "X"), edit(2, 3, "", "X")));
    CHECK(edits_overlap(edit(2, 2, "a", "X"), edit(2, 2, "b", "X")));
    CHECK_FALSE(edits_overlap(edit(2, 2, "a", "X"), edit(2, 3, "b", "X")));
    CHECK(edits_overlap(edit(2, 2, "a", "X"), edit(1, 3, "b", "X")));
  }

  TEST_CASE("apply edits") {
    const auto e = entry("He go to school", {edit(1, 2, "goes", "R:VERB:SVA")});
    CHECK(apply_edits(e, e.edits) == words("He goes to school"));
    CHECK(apply_edits(e, {}) == words("He go to school"));
    const auto ins = entry("The birth of new star", {edit(3, 3, "a", "M:DET")});
    CHECK(apply_edits(ins, ins.edits) == words("The birth of a new star"));
    const std::vector<Edit> bad{edit(1, 3, "x", "X"), edit(2, 4, "y", "X")};
    CHECK_THROWS_AS(apply_edits(entry("a b c d e", {}), bad), DataError);
  }

  TEST_CASE("selective correction keeps target errors at remapped offsets") {
    const auto e = entry("He go to school yesterday", {edit(1, 2, "goes", "R:VERB:SVA"), edit(3, 3, "the", "M:DET")});
    const auto s = selective_correct(e, {"R:VERB:SVA"});
    REQUIRE(s.has_value());
    CHECK(s->tokens == words("He go to the school yesterday"));
    CHECK(s->labels == std::vector<std::string>{"OK", "R:VERB:SVA", "OK", "OK", "OK", "OK"});

    const auto c = correct_except(e, {"M:DET"});
    CHECK(c.tokens == words("He goes to school yesterday"));
    REQUIRE(c.retained.size() == 1);
    // the insertion labels the token that follows it
    CHECK(c.labels[3] == "M:DET");
  }

  TEST_CASE("selective correction edge cases") {
    const auto only = entry("The train are good", {edit(2, 3, "is", "R:VERB:SVA")});
    const auto s = selective_correct(only, {"R:VERB:SVA"});
    REQUIRE(s.has_value());
    CHECK(s->tokens == only.source_tokens);
    CHECK(s->error_count() == 1);

    const auto none = entry("He go to school", {edit(3, 3, "the", "M:DET")});
    CHECK_FALSE(selective_correct(none, {"R:VERB:SVA"}).has_value());

    const auto trailing = entry("I like", {edit(2, 2, "it", "M:PRON")});
    const auto t = correct_except(trailing, {"M:PRON"});
    CHECK(t.labels == std::vector<std::string>{"OK", "M:PRON"});
  }

  TEST_CASE("full application equals correcting everything") {
    const auto e = entry("He go to school yesterday", {edit(1, 2, "goes", "R:VERB:SVA"), edit(3, 3, "the", "M:DET")});
    CHECK(correct_except(e, {}).tokens == apply_edits(e, e.edits));
    CHECK_FALSE(selective_correct(e, {}).has_value());
  }

  TEST_CASE("sampling") {
    const auto pool = pool_of(100);
    const auto a = sample_training_sets(pool, 5, 20, 11);
    const auto b = sample_training_sets(pool, 5, 20, 11);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].sentences == b[i].sentences);
      CHECK(a[i].sample_seed == 11 + i);
      std::set<std::string> ids;
      for (const auto& s : a[i].sentences) {
        ids.insert(s.source_id);
      }
      CHECK(ids.size() == 20);
    }
    CHECK(a[0].sentences != a[1].sentences);

    const auto full = sample_training_sets(pool, 1, 100, 2);
    std::set<std::string> all;
    for (const auto& s : full[0].sentences) {
      all.insert(s.source_id);
    }
    CHECK(all.size() == 100);
    CHECK_THROWS_AS(sample_training_sets(pool, 1, 101, 2), DataError);
  }

  TEST_CASE("dev split is disjoint from the pool") {
    const auto pool = pool_of(50);
    const auto split = split_dev(pool, 10, 4);
    CHECK(split.dev.sentences.size() == 10);
    CHECK(split.pool.sentences.size() == 40);
    std::set<std::string> ids;
    for (const auto* part : {&split.dev, &split.pool}) {
      for (const auto& s : part->sentences) {
        ids.insert(s.source_id);
      }
    }
    CHECK(ids.size() == 50);
  }

  TEST_CASE("verb holdout") {
    const CorpusSplit c{{fixtures::sentence("a", "The author smiles ."), fixtures::sentence("b", "The movie is good ."),
                         fixtures::sentence("c", "A dog barks .")},
                        Provenance::WikEd,
                        std::nullopt};
    const std::set<std::string> held{"smile", "smiles", "smiled", "is", "are"};
    const auto& be = be_forms();
    const auto out = verb_holdout(c, held, be);
    REQUIRE(out.sentences.size() == 2);
    CHECK(out.sentences[0].source_id == "b");
    CHECK(verb_holdout(out, held, be).sentences == out.sentences);
    CHECK(verb_holdout(c, {}, be).sentences == c.sentences);
  }

  TEST_CASE("corpus stats") {
    const std::vector<AnnotatedSentence> one{fixtures::sentence("a", "a b c d e", {2})};
    const auto s = corpus_stats(one);
    CHECK(s.sentence_count == 1);
    CHECK(s.mean_length == 5.0);
    CHECK(s.mean_errors == 1.0);
    CHECK(s.std_errors == 0.0);
    CHECK(corpus_stats({}).sentence_count == 0);
  }

  TEST_CASE("provenance names") {
    for (auto p : {Provenance::WiFce, Provenance::WikEd, Provenance::Synthetic}) {
      CHECK(parse_provenance(provenance_name(p)) == p);
    }
  }
}
