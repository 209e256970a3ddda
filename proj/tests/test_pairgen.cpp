#include <doctest.h>

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"
#include "rlaif/pairgen/builders.hpp"
#include "rlaif/pairgen/dataset.hpp"

using namespace rlaif;

namespace {

CandidatePool text_pool(const std::vector<std::pair<double, double>>& judge_autobleu) {
    CandidatePool pool;
    pool.dialogue_id = "d0";
    pool.turn_index = 1;
    int id = 2;
    for (const auto& [judge, autobleu] : judge_autobleu) {
        ScoreSet scores;
        scores.llm_judge = judge;
        scores.autobleu = autobleu;
        pool.candidates.push_back({{{id, id + 1}, StreamTag::text}, scores});
        id += 2;
    }
    return pool;
}

CandidatePool speech_pool(const std::vector<ScoreSet>& scores) {
    CandidatePool pool;
    pool.dialogue_id = "d0";
    pool.turn_index = 1;
    pool.shared_text = TokenSequence{{2, 3}, StreamTag::text};
    int id = 40;
    for (const auto& s : scores) {
        pool.candidates.push_back({{{id, id + 1}, StreamTag::speech}, s});
        id += 2;
    }
    return pool;
}

ScoreSet utmos_score(double v) {
    ScoreSet s;
    s.utmos = v;
    return s;
}
ScoreSet wer_score(double v) {
    ScoreSet s;
    s.wer = v;
    return s;
}
ScoreSet emo_score(double v) {
    ScoreSet s;
    s.emo_sim = v;
    return s;
}

}  // namespace

TEST_CASE("semantic rule with default thresholds") {
    const auto pool = text_pool({{7.2, 12.0}, {4.0, 10.0}, {6.5, 45.0}});
    const auto pairs = pairgen::build_semantic_pairs(pool, Thresholds{}, 1);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].positive == pool.candidates[0].tokens);  // only c0 qualifies as positive
    CHECK(pairs[0].negative == pool.candidates[1].tokens);  // c1 has the lowest judge score
    CHECK(pairs[0].reward_kind == RewardKind::semantic);
    CHECK(pairs[0].margin == doctest::Approx(3.2));
    CHECK_NOTHROW(validate_pair(pairs[0]));
}

TEST_CASE("semantic rule: mid-band scores produce no pairs") {
    const auto pool = text_pool({{5.5, 10.0}, {5.5, 12.0}, {5.5, 20.0}});
    CHECK(pairgen::build_semantic_pairs(pool, Thresholds{}, 4).empty());
}

TEST_CASE("semantic builder matches an exhaustive-filter oracle on random pools") {
    Rng rng(101);
    const Thresholds thresholds;
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::pair<double, double>> scores;
        const std::size_t n = 2 + rng.uniform_int(9);
        for (std::size_t i = 0; i < n; ++i) {
            scores.emplace_back(10.0 * rng.uniform_double(), 100.0 * rng.uniform_double());
        }
        const auto pool = text_pool(scores);
        const std::size_t cap = 1 + rng.uniform_int(3);
        const auto pairs = pairgen::build_semantic_pairs(pool, thresholds, cap);

        // oracle: filter both sets by definition, order, and pair greedily
        std::vector<std::size_t> pos, neg;
        for (std::size_t i = 0; i < n; ++i) {
            if (scores[i].first > thresholds.tau_pos && scores[i].second < thresholds.delta_low) {
                pos.push_back(i);
            }
            if (scores[i].first < thresholds.tau_neg || scores[i].second > thresholds.delta_high) {
                neg.push_back(i);
            }
        }
        std::stable_sort(pos.begin(), pos.end(),
                         [&](auto a, auto b) { return scores[a].first > scores[b].first; });
        std::stable_sort(neg.begin(), neg.end(),
                         [&](auto a, auto b) { return scores[a].first < scores[b].first; });
        std::vector<std::pair<std::size_t, std::size_t>> expected;
        for (std::size_t pi = 0; pi < pos.size() && expected.size() < cap; ++pi) {
            for (std::size_t ni = 0; ni < neg.size() && expected.size() < cap; ++ni) {
                if (pos[pi] != neg[ni]) expected.emplace_back(pos[pi], neg[ni]);
            }
        }
        REQUIRE(pairs.size() == expected.size());
        for (std::size_t i = 0; i < pairs.size(); ++i) {
            CHECK(pairs[i].positive == pool.candidates[expected[i].first].tokens);
            CHECK(pairs[i].negative == pool.candidates[expected[i].second].tokens);
        }
    }
}

TEST_CASE("audio-quality rule picks argmax against argmin") {
    const auto pool = speech_pool({utmos_score(2.1), utmos_score(3.4), utmos_score(2.8)});
    const auto pairs = pairgen::build_audio_quality_pairs(pool);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].positive == pool.candidates[1].tokens);
    CHECK(pairs[0].negative == pool.candidates[0].tokens);
    CHECK(pairs[0].conditioning_text == pool.shared_text);
    CHECK_NOTHROW(validate_pair(pairs[0]));
}

TEST_CASE("audio-quality rule: all-equal scores yield nothing") {
    const auto pool = speech_pool({utmos_score(3.0), utmos_score(3.0), utmos_score(3.0)});
    CHECK(pairgen::build_audio_quality_pairs(pool).empty());
}

TEST_CASE("audio-quality ties break toward the lowest index") {
    const auto pool =
        speech_pool({utmos_score(3.4), utmos_score(3.4), utmos_score(1.0), utmos_score(1.0)});
    const auto pairs = pairgen::build_audio_quality_pairs(pool);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].positive == pool.candidates[0].tokens);
    CHECK(pairs[0].negative == pool.candidates[2].tokens);
}

TEST_CASE("audio-quality rule requires shared text") {
    auto pool = speech_pool({utmos_score(1.0), utmos_score(2.0)});
    pool.shared_text.reset();
    CHECK_THROWS_AS((void)pairgen::build_audio_quality_pairs(pool), Error);
}

TEST_CASE("intelligibility rule: stated example") {
    const auto pool =
        speech_pool({wer_score(0.10), wer_score(0.30), wer_score(0.18), wer_score(0.12)});
    // positive c0; negatives {c1, c2}; the seed fixes the draw
    const auto pairs = pairgen::build_intelligibility_pairs(pool, Thresholds{}, 7);
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].positive == pool.candidates[0].tokens);
    const bool neg_ok = pairs[0].negative == pool.candidates[1].tokens ||
                        pairs[0].negative == pool.candidates[2].tokens;
    CHECK(neg_ok);
    CHECK(pairs[0].reward_kind == RewardKind::intelligibility);
    // deterministic re-draw
    const auto again = pairgen::build_intelligibility_pairs(pool, Thresholds{}, 7);
    CHECK(pairs[0] == again[0]);
}

TEST_CASE("intelligibility rule: no eligible positive") {
    const auto pool = speech_pool({wer_score(0.3), wer_score(0.4)});
    CHECK(pairgen::build_intelligibility_pairs(pool, Thresholds{}, 0).empty());
}

TEST_CASE("intelligibility rule: margin unmet") {
    const auto pool = speech_pool({wer_score(0.10), wer_score(0.13)});
    CHECK(pairgen::build_intelligibility_pairs(pool, Thresholds{}, 0).empty());
}

TEST_CASE("emotion rule: stated examples") {
    const auto pool = speech_pool({emo_score(0.80), emo_score(0.60), emo_score(0.75)});
    const auto pairs = pairgen::build_emotion_pairs(pool, Thresholds{});
    REQUIRE(pairs.size() == 1);
    CHECK(pairs[0].positive == pool.candidates[0].tokens);
    CHECK(pairs[0].negative == pool.candidates[1].tokens);
    CHECK(pairs[0].margin == doctest::Approx(0.2));

    const auto narrow = speech_pool({emo_score(0.70), emo_score(0.695)});
    CHECK(pairgen::build_emotion_pairs(narrow, Thresholds{}).empty());
}

TEST_CASE("emotion builder matches the brute-force max/min oracle") {
    Rng rng(202);
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<ScoreSet> scores;
        const std::size_t n = 2 + rng.uniform_int(9);
        for (std::size_t i = 0; i < n; ++i) scores.push_back(emo_score(rng.uniform_double()));
        const auto pool = speech_pool(scores);
        const auto pairs = pairgen::build_emotion_pairs(pool, Thresholds{});

        std::size_t best = 0, worst = 0;
        for (std::size_t i = 1; i < n; ++i) {
            if (*scores[i].emo_sim > *scores[best].emo_sim) best = i;
            if (*scores[i].emo_sim < *scores[worst].emo_sim) worst = i;
        }
        const double gap = *scores[best].emo_sim - *scores[worst].emo_sim;
        if (gap > Thresholds{}.delta_emo) {
            REQUIRE(pairs.size() == 1);
            CHECK(pairs[0].positive == pool.candidates[best].tokens);
            CHECK(pairs[0].negative == pool.candidates[worst].tokens);
        } else {
            CHECK(pairs.empty());
        }
    }
}

TEST_CASE("every emitted pair satisfies its defining inequalities (randomized)") {
    Rng rng(303);
    const Thresholds thresholds;
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<ScoreSet> scores;
        const std::size_t n = 2 + rng.uniform_int(9);
        for (std::size_t i = 0; i < n; ++i) {
            ScoreSet s;
            s.utmos = 1.0 + 4.0 * rng.uniform_double();
            s.wer = rng.uniform_double();
            s.emo_sim = rng.uniform_double();
            scores.push_back(s);
        }
        const auto pool = speech_pool(scores);
        auto find_scores = [&](const TokenSequence& tokens) {
            for (const auto& cand : pool.candidates) {
                if (cand.tokens == tokens) return cand.scores;
            }
            REQUIRE(false);
            return ScoreSet{};
        };

        for (const auto& pair : pairgen::build_audio_quality_pairs(pool)) {
            CHECK(*find_scores(pair.positive).utmos > *find_scores(pair.negative).utmos);
            CHECK_NOTHROW(validate_pair(pair));
        }
        for (const auto& pair :
             pairgen::build_intelligibility_pairs(pool, thresholds, rng.next_u64())) {
            CHECK(*find_scores(pair.positive).wer <= thresholds.tau_wer);
            CHECK(*find_scores(pair.negative).wer >=
                  *find_scores(pair.positive).wer + thresholds.delta_wer);
            CHECK_NOTHROW(validate_pair(pair));
        }
        for (const auto& pair : pairgen::build_emotion_pairs(pool, thresholds)) {
            CHECK(*find_scores(pair.positive).emo_sim - *find_scores(pair.negative).emo_sim >
                  thresholds.delta_emo);
            CHECK_NOTHROW(validate_pair(pair));
        }
    }
}

TEST_CASE("missing scores are reported") {
    auto pool = speech_pool({utmos_score(1.0), ScoreSet{}});
    pool.candidates[1].scores.llm_judge = 5.0;  // some other field present
    CHECK_THROWS_AS((void)pairgen::build_audio_quality_pairs(pool), Error);
}

TEST_CASE("multi-reward assembly follows the recipe") {
    std::map<RewardKind, std::vector<PreferencePair>> sets;
    auto fill = [&](RewardKind kind, int count, int base_id) {
        for (int i = 0; i < count; ++i) {
            PreferencePair pair;
            pair.positive = {{base_id + 2 * i}, StreamTag::text};
            pair.negative = {{base_id + 2 * i + 1}, StreamTag::text};
            pair.reward_kind = kind;
            if (is_audio_family(kind)) pair.conditioning_text = TokenSequence{{99}, StreamTag::text};
            sets[kind].push_back(pair);
        }
    };
    fill(RewardKind::semantic, 5, 100);
    fill(RewardKind::audio_quality, 3, 200);
    fill(RewardKind::intelligibility, 4, 300);
    fill(RewardKind::emotion, 2, 400);

    const auto v1 = pairgen::assemble_multireward(sets, "joint-v1", 0);
    CHECK(v1.pairs.size() == 12);
    for (const auto& pair : v1.pairs) CHECK(pair.reward_kind != RewardKind::emotion);

    const auto v2 = pairgen::assemble_multireward(sets, "joint-v2", 0);
    CHECK(v2.pairs.size() == 14);

    const auto single = pairgen::assemble_multireward(sets, "semantic", 0);
    CHECK(single.pairs.size() == 5);
    for (const auto& pair : single.pairs) CHECK(pair.reward_kind == RewardKind::semantic);

    // same seed, same order
    const auto again = pairgen::assemble_multireward(sets, "joint-v2", 0);
    CHECK(v2.pairs == again.pairs);

    CHECK_THROWS_AS((void)pairgen::assemble_multireward(sets, "bogus", 0), Error);
    CHECK_THROWS_AS((void)pairgen::assemble_multireward({}, "emotion", 0), Error);
}

TEST_CASE("train/val split is disjoint, exhaustive and seeded") {
    std::vector<PreferencePair> pairs;
    for (int i = 0; i < 200; ++i) {
        PreferencePair pair;
        pair.positive = {{2 + i}, StreamTag::text};
        pair.negative = {{2 + i, 3}, StreamTag::text};
        pairs.push_back(pair);
    }
    const auto split = pairgen::split_train_val(pairs, 0.99, 11);
    CHECK(split.train.size() == 198);
    CHECK(split.val.size() == 2);
    CHECK(split.train.size() + split.val.size() == pairs.size());

    const auto again = pairgen::split_train_val(pairs, 0.99, 11);
    CHECK(split.train == again.train);
    CHECK(split.val == again.val);

    const auto tiny = pairgen::split_train_val({pairs[0], pairs[1]}, 0.99, 0);
    CHECK(tiny.train.size() == 1);
    CHECK(tiny.val.size() == 1);

    CHECK_THROWS_AS((void)pairgen::split_train_val({pairs[0]}, 0.99, 0), Error);
}
