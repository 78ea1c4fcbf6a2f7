#include "teachsize/learner.hpp"
#include "teachsize/errors.hpp"

#include "support/temp_dir.hpp"

#include <doctest.h>

using namespace teachsize;

namespace {

HyponymTable demo_table() {
    HyponymTable t({"car", "cat", "house", "envelope"});
    t.add("car", "police car");
    t.add("car", "ambulance");
    t.add("cat", "cat face");
    t.add("house", "triangle and house");
    t.validate();
    return t;
}

Stimulus demo_stimulus(const std::string& concept_name, int segments,
                       Modality m = Modality::coordinates) {
    Stimulus st;
    st.drawing_id = "d1";
    st.concept_name = concept_name;
    st.epsilon = 2.0;
    st.modality = m;
    st.segment_count = segments;
    st.payload = m == Modality::coordinates ? "\\draw (0, 0) -- (10, 0);" : std::string("png");
    return st;
}

} // namespace

TEST_CASE("judge: hyponyms, refusals, normalization") {
    const auto table = demo_table();
    CHECK(judge("Police Car", "car", table).verdict == Verdict::correct);
    CHECK(judge("I don't know", "cat", table).verdict == Verdict::other);
    CHECK(judge("HOUSE.", "house", table).verdict == Verdict::correct);
    CHECK(judge("  envelope\n", "envelope", table).verdict == Verdict::correct);

    const auto wrong = judge("ambulance", "cat", table);
    CHECK(wrong.verdict == Verdict::wrong_concept);
    CHECK(wrong.predicted == "car");

    CHECK(judge("police car!", "car", table).verdict == Verdict::correct);
    CHECK(judge("something else entirely", "car", table).verdict == Verdict::other);
}

TEST_CASE("judge is exact-match after normalization, never fuzzy") {
    const auto table = demo_table();
    CHECK(judge("police", "car", table).verdict == Verdict::other);
    CHECK(judge("cat-like animal", "cat", table).verdict == Verdict::other);
}

TEST_CASE("normalize_answer strips terminal punctuation only") {
    CHECK(normalize_answer(" House. ") == "house");
    CHECK(normalize_answer("car!!") == "car");
    CHECK(normalize_answer("it's a cat") == "it's a cat"); // inner quote kept
}

TEST_CASE("hyponym table rejects overlapping accepted sets") {
    HyponymTable t({"car", "van"});
    t.add("car", "delivery van");
    t.add("van", "delivery van");
    CHECK_THROWS_AS(t.validate(), ConfigError);

    // a hyponym equal to another concept's name also collides
    HyponymTable t2({"car", "truck"});
    t2.add("car", "truck");
    CHECK_THROWS_AS(t2.validate(), ConfigError);
}

TEST_CASE("hyponym table loads the shipped CSV") {
    const std::vector<std::string> concepts{
        "apple", "banana", "car", "cat", "computer", "cup", "door", "envelope",
        "fish", "grass", "hockey puck", "house", "key", "radio", "string bean",
        "sun", "sword", "television", "the great wall of china", "tree"};
    const auto table = HyponymTable::load_csv(std::string(TEACHSIZE_DATA) + "/hyponyms.csv", concepts);
    CHECK(table.accepted("car").count("police car") == 1);
    CHECK(table.accepted("envelope").size() == 1); // just the concept itself
    CHECK(judge("Whale", "fish", table).verdict == Verdict::correct);
}

TEST_CASE("build_prompt: coordinates template wraps the TikZ code in backticks") {
    const auto stim = demo_stimulus("cat", 1);
    const auto prompt = build_prompt(stim);
    CHECK(prompt.image_base64.empty());
    CHECK(prompt.text.find("```\\draw (0, 0) -- (10, 0);```") != std::string::npos);
    CHECK(prompt.text.find("triple backticks") != std::string::npos);
    const std::string ending = "Please reply only with the name of the concept.";
    CHECK(prompt.text.substr(prompt.text.size() - ending.size()) == ending);
}

TEST_CASE("build_prompt: bitmap template carries the base64 image") {
    auto stim = demo_stimulus("cat", 1, Modality::bitmap);
    stim.payload = "PNGDATA";
    const auto prompt = build_prompt(stim);
    CHECK(prompt.image_base64 == encode_image_payload("PNGDATA"));
    const std::string ending = "Please reply only with the name of the concept.";
    CHECK(prompt.text.substr(prompt.text.size() - ending.size()) == ending);
    CHECK(prompt.text.find("provided picture") != std::string::npos);
}

TEST_CASE("oracle_identify: threshold and probability contract") {
    SplitRng rng(1);
    CHECK(oracle_identify(5, 1.0, demo_stimulus("house", 7), rng) == "house");
    CHECK(oracle_identify(5, 1.0, demo_stimulus("house", 3), rng) == "unknown");
    CHECK(oracle_identify(1, 1.0, demo_stimulus("cat", 1), rng) == "cat");
    CHECK(oracle_identify(INT64_MAX, 1.0, demo_stimulus("cat", 500), rng) == "unknown");

    // p = 0.6 on an 8-segment stimulus: empirical rate within 0.6 +/- 0.02
    int hits = 0;
    const int trials = 10000;
    SplitRng mc(777);
    for (int i = 0; i < trials; ++i) {
        hits += oracle_identify(6, 0.6, demo_stimulus("cat", 8), mc) == "cat" ? 1 : 0;
    }
    const double rate = static_cast<double>(hits) / trials;
    CHECK(rate > 0.58);
    CHECK(rate < 0.62);
}

TEST_CASE("stochastic oracle with p=1 behaves like the deterministic one") {
    LearnerConfig det;
    det.name = "det";
    det.kind = LearnerKind::oracle_deterministic;
    det.threshold = 5;
    LearnerConfig sto = det;
    sto.name = "sto";
    sto.kind = LearnerKind::oracle_stochastic;
    sto.success_probability = 1.0;

    OracleLearner a(det), b(sto);
    SplitRng r1(9), r2(9);
    for (int i = 0; i < 100; ++i) {
        const auto stim = demo_stimulus("cat", static_cast<int>(i % 12));
        CHECK(a.identify_raw(stim, 0.0, &r1) == b.identify_raw(stim, 0.0, &r2));
    }
}

TEST_CASE("identify appends to the cache before returning") {
    testutil::TempDir tmp;
    ResponseCache cache(tmp.sub("cache.ndjson"));
    const auto table = demo_table();

    LearnerConfig cfg;
    cfg.name = "oracle";
    cfg.kind = LearnerKind::oracle_deterministic;
    cfg.threshold = 1;
    OracleLearner learner(cfg);

    const auto stim = demo_stimulus("cat", 3);
    const auto record = identify(learner, stim, 0.0, table, cache, 0, 1234, nullptr);
    CHECK(record.raw_answer == "cat");
    CHECK(record.judgment.verdict == Verdict::correct);
    REQUIRE(cache.size() == 1);
    CHECK(cache.records()[0].raw_answer == record.raw_answer);
    CHECK(cache.count(record.cache_key()) == 1);

    // reload from disk: the record survived
    ResponseCache reloaded(tmp.sub("cache.ndjson"));
    REQUIRE(reloaded.size() == 1);
    CHECK(reloaded.records()[0].raw_answer == "cat");
}

TEST_CASE("trial records round trip and judgments re-derive") {
    const auto table = demo_table();
    TrialRecord r;
    r.model = "m";
    r.modality = Modality::coordinates;
    r.concept_name = "car";
    r.drawing_id = "d9";
    r.epsilon = 7.0;
    r.segments = 12;
    r.temperature = 1.0;
    r.trial = 3;
    r.raw_answer = "Police Car";
    r.judgment = judge(r.raw_answer, r.concept_name, table);
    r.timestamp = 99;

    const auto back = trial_record_from_json(trial_record_to_json(r));
    CHECK(back.model == r.model);
    CHECK(back.modality == r.modality);
    CHECK(back.concept_name == r.concept_name);
    CHECK(back.epsilon == r.epsilon);
    CHECK(back.trial == r.trial);
    CHECK(back.raw_answer == r.raw_answer);
    CHECK(back.judgment.verdict == r.judgment.verdict);
    CHECK(back.cache_key() == r.cache_key());

    // re-deriving the judgment from the raw answer is idempotent
    const auto again = judge(back.raw_answer, back.concept_name, table);
    CHECK(again.verdict == back.judgment.verdict);
    CHECK(again.predicted == back.judgment.predicted);
}

TEST_CASE("learner config validation") {
    LearnerConfig bad;
    bad.name = "x";
    bad.kind = LearnerKind::oracle_stochastic;
    bad.success_probability = 1.5;
    CHECK_THROWS_AS(bad.validate(), ConfigError);

    LearnerConfig remote;
    remote.name = "r";
    remote.kind = LearnerKind::remote;
    remote.temperature = 3.0;
    remote.endpoint = "http://localhost:1";
    CHECK_THROWS_AS(remote.validate(), ConfigError);
}
