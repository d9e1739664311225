#include <doctest.h>

#include <cmath>

#include "rcts/backends.hpp"
#include "rcts/error.hpp"
#include "rcts/reasoning.hpp"

using namespace rcts;

namespace {

KbEntry sample_entry() {
    KbEntry e;
    e.id = "k1";
    e.question = "Which planet is largest?";
    e.options = std::vector<std::string>{"Mars", "Jupiter", "Venus"};
    e.answer = "B";
    return e;
}

// Rule answering correctly on the first `correct` seeds of 1..10.
MockRule scored_rule(const std::string& needle, int correct) {
    MockRule r;
    r.contains = {needle, "THOUGHT PROCESS"};
    for (int s = 1; s <= 10; ++s) r.responses_by_seed[s] = s <= correct ? "The answer is B." : "The answer is A.";
    return r;
}

MockRule candidate_rule(std::map<std::int64_t, std::string> by_seed) {
    MockRule r;
    r.contains = {"step-by-step"};
    r.responses_by_seed = std::move(by_seed);
    return r;
}

}  // namespace

TEST_CASE("score_candidate counts matching predictions") {
    const auto e = sample_entry();
    ReasoningConfig cfg;
    MockGenerator mock({scored_rule("cand-x", 7)}, std::string("garbage"));
    ReasoningCandidate c{"k1", "cand-x reasoning", 0.0, 0, 0};
    CHECK(score_candidate(e, c, mock, cfg) == doctest::Approx(0.7));

    MockGenerator perfect({scored_rule("cand-x", 10)});
    CHECK(score_candidate(e, c, perfect, cfg) == 1.0);
    MockGenerator junk({}, std::string("no answer here"));
    CHECK(score_candidate(e, c, junk, cfg) == 0.0);
    CallbackGenerator down([](const GenRequest&) -> std::string { throw GenerationError("down"); });
    CHECK(score_candidate(e, c, down, cfg) == 0.0);

    c.text.clear();
    CHECK_THROWS_AS(score_candidate(e, c, perfect, cfg), KbError);
}

TEST_CASE("scores are correct-count fractions") {
    const auto e = sample_entry();
    for (int np = 1; np <= 10; ++np) {
        for (int k = 0; k <= np; ++k) {
            ReasoningConfig cfg;
            cfg.n_predictions = np;
            MockGenerator mock({scored_rule("c", k)});
            const double s = score_candidate(e, {"k1", "c", 0.0, 0, 0}, mock, cfg);
            CHECK(s == static_cast<double>(k) / np);
            CHECK(std::abs(s * np - std::round(s * np)) < 1e-12);
        }
    }
}

TEST_CASE("build picks the best candidate with the tie rule") {
    auto e = sample_entry();
    ReasoningConfig cfg;
    cfg.n_candidates = 3;
    MockGenerator mock({candidate_rule({{1, "  cand-one, medium  "}, {2, "cand-two"}, {3, "cand-three longer"}}),
                        scored_rule("cand-one", 5), scored_rule("cand-two", 9), scored_rule("cand-three", 9)});
    const auto out = build_reasoning_context(e, mock, cfg);
    REQUIRE(out.candidates.size() == 3);
    CHECK(out.candidates[0].text == "cand-one, medium");
    CHECK(out.candidates[0].score == 0.5);
    CHECK(out.candidates[1].score == 0.9);
    CHECK(out.candidates[2].n_eval == 10);
    CHECK(out.text == "cand-two");
    CHECK(out.score == 0.9);
    CHECK(e.reasoning == "cand-two");

    auto again = sample_entry();
    CHECK(build_reasoning_context(again, mock, cfg).text == out.text);
}

TEST_CASE("single candidate is chosen even at score zero") {
    auto e = sample_entry();
    ReasoningConfig cfg;
    cfg.n_candidates = 1;
    MockGenerator mock({candidate_rule({{1, "lonely"}})}, std::string("no"));
    const auto out = build_reasoning_context(e, mock, cfg);
    CHECK(out.text == "lonely");
    CHECK(out.score == 0.0);
}

TEST_CASE("failed candidates are dropped and none left is an error") {
    auto e = sample_entry();
    e.reasoning = "original";
    ReasoningConfig cfg;
    cfg.n_candidates = 4;
    MockGenerator empty({candidate_rule({{1, "   "}, {2, ""}}), MockRule{{"step-by-step"}, std::nullopt, {}, std::string("x")}});
    CHECK_THROWS_AS(build_reasoning_context(e, empty, cfg), KbError);
    CHECK(e.reasoning == "original");

    MockGenerator partial({candidate_rule({{3, "third"}}), MockRule{{"step-by-step"}, std::nullopt, {}, std::string("x")}});
    const auto c = generate_reasoning_candidates(e, partial, cfg);
    REQUIRE(c.size() == 1);
    CHECK(c[0].index == 2);
}

TEST_CASE("best_candidate tie-breaks") {
    std::vector<ReasoningCandidate> c = {{"e", "aaaa", 0.5, 10, 0}, {"e", "bbb", 0.5, 10, 1}, {"e", "ccc", 0.5, 10, 2}};
    CHECK(best_candidate(c).index == 1);
    c[0].score = 0.6;
    CHECK(best_candidate(c).index == 0);
    CHECK_THROWS_AS(best_candidate({}), KbError);
}
