#include "normpipe/corpus.hpp"
#include "test_support.hpp"

#include <doctest.h>

using namespace normpipe;
using namespace normpipe::corpus;

TEST_SUITE("corpus") {

TEST_CASE("parses a well-formed record") {
    auto r = parse_corpus(R"({"id":"ad_72_f","age":72,"gender":"Female","mmse":22.0,"category":"AD","text":"a boy on a stool"})",
                          Source::Real, "real");
    REQUIRE(r.corpus.size() == 1);
    const Transcript& t = r.corpus.records()[0];
    CHECK(t.id() == "ad_72_f");
    CHECK(t.participant().age == 72);
    CHECK(t.participant().gender == Gender::Female);
    CHECK(t.participant().mmse == 22);
    CHECK(t.participant().category == Category::AD);
    CHECK(t.tokens().size() == 5);
    CHECK(r.warnings.empty());
}

TEST_CASE("malformed lines are skipped with a warning") {
    ScopedWarningCapture cap;
    const std::string content =
        "{\"id\":\"a\",\"category\":\"AD\",\"text\":\"one\"}\n"
        "not json\n"
        "\n"
        "{\"id\":\"b\",\"category\":\"Dementia\",\"text\":\"two\"}\n"
        "{\"id\":\"c\",\"category\":\"MCI\",\"mmse\":20.5,\"text\":\"three\"}\n"
        "{\"id\":\"d\",\"category\":\"MCI\",\"mmse\":31,\"text\":\"four\"}\n"
        "{\"id\":\"e\",\"category\":\"Control\",\"text\":\"   \"}\n"
        "{\"id\":\"f\",\"text\":\"six\"}\n"
        "{\"id\":\"g\",\"category\":\"Control\",\"age\":140,\"gender\":\"x\",\"text\":\"seven\"}\n";
    auto r = parse_corpus(content, Source::Real, "real", "mem.jsonl");
    REQUIRE(r.corpus.size() == 2);
    CHECK(r.corpus.records()[0].id() == "a");
    CHECK(r.corpus.records()[1].id() == "g");
    CHECK_FALSE(r.corpus.records()[1].participant().gender.has_value());
    CHECK(r.corpus.records()[1].participant().age == 140);
    CHECK(r.warnings.size() == 8);
    CHECK(cap.contains("WARN corpus: mem.jsonl:2: malformed JSON"));
    CHECK(cap.contains("unknown category \"Dementia\""));
}

TEST_CASE("duplicate ids are fatal") {
    const std::string content = "{\"id\":\"a\",\"category\":\"AD\",\"text\":\"one\"}\n"
                                "{\"id\":\"a\",\"category\":\"AD\",\"text\":\"two\"}\n";
    CHECK_THROWS_WITH_AS(parse_corpus(content, Source::Real, "real"), doctest::Contains("duplicate id 'a'"), DataError);
}

TEST_CASE("transcripts reject blank text") {
    CHECK_THROWS_AS(Transcript({"x", {}, {}, {}, Category::AD}, " \n", Source::Real), DataError);
}

TEST_CASE("missing file is a data error") {
    CHECK_THROWS_AS(load_corpus("/nonexistent/corpus.jsonl", Source::Real), DataError);
}

TEST_CASE("write then load round-trips records") {
    auto r = parse_corpus("{\"id\":\"a\",\"age\":70,\"gender\":\"male\",\"mmse\":0,\"category\":\"AD\",\"text\":\"x y\"}\n"
                          "{\"id\":\"b\",\"category\":\"Control\",\"text\":\"z\"}\n",
                          Source::Synthetic, "syn");
    const auto dir = testing::scratch_dir("corpus");
    write_corpus(r.corpus, (dir / "out.jsonl").string());
    auto back = load_corpus((dir / "out.jsonl").string(), Source::Synthetic);
    CHECK(back.corpus.label() == "out");
    REQUIRE(back.corpus.size() == 2);
    CHECK(back.corpus.records()[0] == r.corpus.records()[0]);
    CHECK(back.corpus.records()[1] == r.corpus.records()[1]);
    CHECK(back.corpus.records()[0].participant().mmse == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("pairing by participant id") {
    auto real = parse_corpus("{\"id\":\"a\",\"category\":\"AD\",\"text\":\"x\"}\n{\"id\":\"b\",\"category\":\"AD\",\"text\":\"y\"}\n",
                             Source::Real, "real");
    auto syn = parse_corpus("{\"id\":\"b\",\"category\":\"AD\",\"text\":\"y2\"}\n{\"id\":\"c\",\"category\":\"AD\",\"text\":\"z\"}\n",
                            Source::Synthetic, "syn");
    ScopedWarningCapture cap;
    Pairing p = pair_by_participant(real.corpus, syn.corpus);
    REQUIRE(p.pairs.size() == 1);
    CHECK(p.pairs[0].first->id() == "b");
    CHECK(p.pairs[0].second->text() == "y2");
    CHECK(p.unpaired_real == std::vector<std::string>{"a"});
    CHECK(p.unpaired_synthetic == std::vector<std::string>{"c"});
    CHECK(cap.lines().size() == 2);
}

TEST_CASE("pairing with nothing in common names both sizes") {
    auto real = parse_corpus("{\"id\":\"a\",\"category\":\"AD\",\"text\":\"x\"}\n", Source::Real, "real");
    auto syn = parse_corpus("{\"id\":\"b\",\"category\":\"AD\",\"text\":\"y\"}\n", Source::Synthetic, "syn");
    CHECK_THROWS_WITH_AS(pair_by_participant(real.corpus, syn.corpus), doctest::Contains("zero pairs"), DataError);
}

TEST_CASE("a corpus cannot mix sources") {
    std::vector<Transcript> recs{Transcript({"a", {}, {}, {}, Category::AD}, "x", Source::Real),
                                 Transcript({"b", {}, {}, {}, Category::AD}, "y", Source::Synthetic)};
    CHECK_THROWS_AS(CorpusHandle("mixed", Source::Real, recs), DataError);
}

}
