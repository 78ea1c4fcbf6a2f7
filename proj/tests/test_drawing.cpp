#include "teachsize/drawing.hpp"
#include "teachsize/errors.hpp"
#include "teachsize/rng.hpp"

#include "support/synth.hpp"
#include "support/temp_dir.hpp"

#include <doctest.h>

#include <fstream>

using namespace teachsize;

namespace {

Drawing load_fixture_drawing(const std::string& name) {
    std::ifstream in(std::string(TEACHSIZE_FIXTURES) + "/" + name);
    REQUIRE(in.good());
    std::string line;
    REQUIRE(std::getline(in, line));
    return parse_dataset_line(line);
}

} // namespace

TEST_CASE("parse_dataset_line: minimal valid record") {
    const auto d = parse_dataset_line(
        R"({"key_id":"k1","word":"cat","recognized":true,"drawing":[[[0,10],[0,0]]]})");
    CHECK(d.id == "k1");
    CHECK(d.concept_name == "cat");
    CHECK(d.recognized);
    REQUIRE(d.strokes.size() == 1);
    CHECK(d.strokes[0].points.size() == 2);
    CHECK(segment_count(d) == 1);
}

TEST_CASE("parse_dataset_line: cat sample has 8 strokes and 20 segments") {
    const auto d = load_fixture_drawing("cat_sample.ndjson");
    CHECK(d.strokes.size() == 8);
    CHECK(segment_count(d) == 20);
    CHECK(d.strokes[0].points.size() == 13);
    CHECK(d.strokes[7].points.size() == 3);
}

TEST_CASE("parse_dataset_line: rejects degenerate strokes") {
    CHECK_THROWS_AS(parse_dataset_line(
                        R"({"word":"cat","recognized":true,"drawing":[[[5],[5]]]})"),
                    ParseError);
    // identical consecutive points collapse to a single point
    CHECK_THROWS_AS(parse_dataset_line(
                        R"({"word":"cat","recognized":true,"drawing":[[[5,5],[7,7]]]})"),
                    ParseError);
}

TEST_CASE("parse_dataset_line: rejects out-of-range coordinates") {
    try {
        parse_dataset_line(
            R"({"word":"cat","recognized":true,"drawing":[[[0,300],[0,1]]]})");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("drawing[0].x[1]") != std::string::npos);
    }
}

TEST_CASE("parse_dataset_line: collapses consecutive duplicates") {
    const auto d = parse_dataset_line(
        R"({"word":"cat","recognized":true,"drawing":[[[1,1,2,2,3],[1,1,2,2,3]]]})");
    REQUIRE(d.strokes.size() == 1);
    CHECK(d.strokes[0].points.size() == 3);
    CHECK(segment_count(d) == 2);
}

TEST_CASE("parse_dataset_line: content-hash id is stable when key is absent") {
    const char* rec = R"({"word":"cat","recognized":true,"drawing":[[[0,10],[0,0]]]})";
    const auto a = parse_dataset_line(rec);
    const auto b = parse_dataset_line(rec);
    CHECK(a.id == b.id);
    CHECK(a.id.front() == 'h');
}

TEST_CASE("parse/serialize round trip is identity on normalized drawings") {
    SplitRng rng(2024);
    for (int i = 0; i < 50; ++i) {
        const auto d = synth::random_drawing(rng, "cat");
        const auto back = parse_dataset_line(to_dataset_line(d));
        CHECK(back == d);
    }
}

TEST_CASE("segment_count >= stroke count, equal iff all strokes are 2 points") {
    SplitRng rng(7);
    for (int i = 0; i < 50; ++i) {
        const auto d = synth::random_drawing(rng, "cat");
        const int segs = segment_count(d);
        CHECK(segs >= static_cast<int>(d.strokes.size()));
        bool all_two = true;
        for (const auto& s : d.strokes) all_two &= s.points.size() == 2;
        CHECK((segs == static_cast<int>(d.strokes.size())) == all_two);
    }
}

TEST_CASE("load_corpus: recognized filter, concept filter, empty file") {
    testutil::TempDir tmp;
    const std::string path = tmp.file(
        "data.ndjson",
        R"({"key_id":"a","word":"cat","recognized":true,"drawing":[[[0,10],[0,0]]]})"
        "\n"
        R"({"key_id":"b","word":"cat","recognized":false,"drawing":[[[0,10],[0,0]]]})"
        "\n"
        R"({"key_id":"c","word":"cat","recognized":true,"drawing":[[[0,9],[0,0]]]})"
        "\n"
        R"({"key_id":"d","word":"dog","recognized":true,"drawing":[[[0,8],[0,0]]]})"
        "\n");

    CorpusStats stats;
    auto only_cat = load_corpus(path, {"cat"}, true, &stats);
    REQUIRE(only_cat.size() == 1);
    CHECK(only_cat[0].concept_name == "cat");
    CHECK(only_cat[0].drawings.size() == 2);
    CHECK(stats.skipped_unknown_concept == 1);
    CHECK(stats.skipped_unrecognized == 1);

    auto all_cat = load_corpus(path, {"cat"}, false);
    CHECK(all_cat[0].drawings.size() == 3);

    // recognized_only output is a subset of the unfiltered output
    for (const auto& d : only_cat[0].drawings) {
        bool found = false;
        for (const auto& e : all_cat[0].drawings) found |= e == d;
        CHECK(found);
    }

    const std::string empty = tmp.file("empty.ndjson", "");
    CHECK(load_corpus(empty, {}, true).empty());
}

TEST_CASE("load_corpus: groups all concepts when the filter is empty") {
    testutil::TempDir tmp;
    const std::string path = tmp.file(
        "data.ndjson",
        R"({"word":"cat","recognized":true,"drawing":[[[0,10],[0,0]]]})"
        "\n"
        R"({"word":"dog","recognized":true,"drawing":[[[0,8],[0,0]]]})"
        "\n");
    const auto corpora = load_corpus(path, {}, false);
    REQUIRE(corpora.size() == 2);
    CHECK(corpora[0].concept_name == "cat");
    CHECK(corpora[1].concept_name == "dog");
}
