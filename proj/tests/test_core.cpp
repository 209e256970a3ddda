#include <doctest.h>

#include <cstdio>
#include <functional>

#include "rlaif/core/serialization.hpp"
#include "rlaif/core/types.hpp"

using namespace rlaif;

namespace {

PreferencePair make_semantic_pair() {
    PreferencePair pair;
    pair.positive = {{2, 3, 4}, StreamTag::text};
    pair.negative = {{5, 6}, StreamTag::text};
    pair.reward_kind = RewardKind::semantic;
    pair.margin = 1.5;
    return pair;
}

bool throws_code(const std::function<void()>& fn, const char* code) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

}  // namespace

TEST_CASE("validate_pair rejects identical members") {
    PreferencePair pair = make_semantic_pair();
    pair.negative = pair.positive;
    CHECK(throws_code([&] { validate_pair(pair); }, errc::identical_members));
}

TEST_CASE("validate_pair: semantic pair needs no conditioning text") {
    const PreferencePair pair = make_semantic_pair();
    CHECK_NOTHROW(validate_pair(pair));
}

TEST_CASE("validate_pair: audio-family pairs require conditioning text") {
    PreferencePair pair = make_semantic_pair();
    pair.reward_kind = RewardKind::intelligibility;
    pair.positive.stream_tag = StreamTag::speech;
    pair.negative.stream_tag = StreamTag::speech;
    CHECK(throws_code([&] { validate_pair(pair); }, errc::missing_conditioning));

    pair.conditioning_text = TokenSequence{{7, 8}, StreamTag::text};
    CHECK_NOTHROW(validate_pair(pair));
}

TEST_CASE("validate_pair flags vocabulary overflow when a bound is given") {
    PreferencePair pair = make_semantic_pair();
    CHECK_NOTHROW(validate_pair(pair, 16));
    CHECK(throws_code([&] { validate_pair(pair, 4); }, errc::vocab_overflow));
}

TEST_CASE("thresholds validate their ordering constraints") {
    Thresholds t;
    CHECK_NOTHROW(t.validate());
    t.tau_neg = t.tau_pos;
    CHECK_THROWS_AS(t.validate(), Error);
}

TEST_CASE("flatten_history delimits prompt and turns") {
    TurnHistory history;
    history.speaker_prompt = {{9}, StreamTag::text};
    DialogueTurn turn;
    turn.turn_index = 1;
    turn.user = {{2, 3}, StreamTag::text};
    turn.system = {{4}, StreamTag::text};
    history.prior_turns.push_back(turn);
    DialogueTurn open_turn;
    open_turn.turn_index = 2;
    open_turn.user = {{5}, StreamTag::text};
    history.prior_turns.push_back(open_turn);

    const std::vector<int> flat = flatten_history(history);
    CHECK(flat == std::vector<int>{9, kEndOfSegment, 2, 3, kEndOfSegment, 4, kEndOfSegment, 5,
                                   kEndOfSegment, kEndOfSegment});
}

TEST_CASE("domain types round-trip through json") {
    CandidatePool pool;
    pool.dialogue_id = "d3";
    pool.turn_index = 2;
    pool.history.speaker_prompt = {{11}, StreamTag::text};
    DialogueTurn turn;
    turn.turn_index = 1;
    turn.user = {{2, 3}, StreamTag::text};
    turn.system = {{4, 5}, StreamTag::speech};
    turn.asr_text = TokenSequence{{6}, StreamTag::asr};
    pool.history.prior_turns.push_back(turn);
    ScoreSet scores;
    scores.llm_judge = 7.25;
    scores.autobleu = 12.5;
    pool.candidates.push_back({{{2, 3, 4}, StreamTag::text}, scores});
    ScoreSet speech_scores;
    speech_scores.utmos = 3.5;
    speech_scores.wer = 0.125;
    speech_scores.emo_sim = 0.75;
    pool.candidates.push_back({{{7, 8}, StreamTag::speech}, speech_scores});
    pool.shared_text = TokenSequence{{2, 3}, StreamTag::text};

    CHECK(candidate_pool_from_json(to_json(pool)) == pool);

    PreferencePair pair = make_semantic_pair();
    pair.conditioning_text = TokenSequence{{2}, StreamTag::text};
    CHECK(preference_pair_from_json(to_json(pair)) == pair);

    Thresholds t;
    t.tau_pos = 6.5;
    const Thresholds back = thresholds_from_json(to_json(t));
    CHECK(back.tau_pos == 6.5);
    CHECK(back.delta_wer == t.delta_wer);
}

TEST_CASE("jsonl files round-trip") {
    const std::string path = "core_roundtrip.jsonl";
    std::vector<PreferencePair> pairs{make_semantic_pair(), make_semantic_pair()};
    pairs[1].margin = -0.25;
    write_pairs_jsonl(path, pairs);
    CHECK(read_pairs_jsonl(path) == pairs);
    std::remove(path.c_str());
}

TEST_CASE("malformed jsonl reports the line") {
    const std::string path = "core_bad.jsonl";
    {
        std::ofstream out(path);
        out << "{not json\n";
    }
    CHECK(throws_code([&] { read_pairs_jsonl(path); }, errc::malformed_input));
    std::remove(path.c_str());
}
