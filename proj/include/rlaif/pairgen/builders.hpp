#pragma once

// Preference-pair construction under the four reward rules. Each builder is
// a pure function of (pool, thresholds, seed); every argmax/argmin tie
// breaks toward the lowest candidate index, and a builder never emits a pair
// whose members carry identical tokens.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"

namespace rlaif::pairgen {

namespace detail {

inline double require_score(const std::optional<double>& score, const char* name,
                            const CandidatePool& pool, std::size_t index) {
    if (!score) {
        fail(errc::missing_score, std::string("candidate ") + std::to_string(index) + " of pool " +
                                      pool.dialogue_id + ":" + std::to_string(pool.turn_index) +
                                      " lacks " + name);
    }
    return *score;
}

inline const TokenSequence& require_shared_text(const CandidatePool& pool) {
    if (!pool.shared_text) {
        fail(errc::missing_shared_text,
             "pool " + pool.dialogue_id + ":" + std::to_string(pool.turn_index) +
                 " has no shared_text");
    }
    return *pool.shared_text;
}

inline PreferencePair make_pair(const CandidatePool& pool, std::size_t pos, std::size_t neg,
                                RewardKind kind, double margin, bool conditioned) {
    PreferencePair pair;
    pair.history = pool.history;
    pair.positive = pool.candidates[pos].tokens;
    pair.negative = pool.candidates[neg].tokens;
    pair.reward_kind = kind;
    pair.margin = margin;
    if (conditioned) pair.conditioning_text = *pool.shared_text;
    return pair;
}

}  // namespace detail

// Positives: judge > tau_pos and autobleu < delta_low. Negatives: judge <
// tau_neg or autobleu > delta_high. Pairs are formed best-positive times
// worst-negative first (positives by descending judge score, negatives by
// ascending), capped at max_pairs_per_turn.
inline std::vector<PreferencePair> build_semantic_pairs(const CandidatePool& pool,
                                                        const Thresholds& thresholds,
                                                        std::size_t max_pairs_per_turn = 1,
                                                        std::uint64_t seed = 0) {
    (void)seed;  // the rule is deterministic; the seed keeps the builder signature uniform
    std::vector<std::size_t> positives, negatives;
    for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
        const double judge = detail::require_score(pool.candidates[i].scores.llm_judge, "llm_judge",
                                                   pool, i);
        const double autobleu = detail::require_score(pool.candidates[i].scores.autobleu, "autobleu",
                                                      pool, i);
        if (judge > thresholds.tau_pos && autobleu < thresholds.delta_low) positives.push_back(i);
        if (judge < thresholds.tau_neg || autobleu > thresholds.delta_high) negatives.push_back(i);
    }
    if (positives.empty() || negatives.empty()) return {};

    auto judge_of = [&pool](std::size_t i) { return *pool.candidates[i].scores.llm_judge; };
    std::sort(positives.begin(), positives.end(), [&](std::size_t a, std::size_t b) {
        if (judge_of(a) != judge_of(b)) return judge_of(a) > judge_of(b);
        return a < b;
    });
    std::sort(negatives.begin(), negatives.end(), [&](std::size_t a, std::size_t b) {
        if (judge_of(a) != judge_of(b)) return judge_of(a) < judge_of(b);
        return a < b;
    });

    std::vector<PreferencePair> pairs;
    for (std::size_t pi = 0; pi < positives.size() && pairs.size() < max_pairs_per_turn; ++pi) {
        for (std::size_t ni = 0; ni < negatives.size() && pairs.size() < max_pairs_per_turn; ++ni) {
            const std::size_t p = positives[pi];
            const std::size_t n = negatives[ni];
            if (p == n || pool.candidates[p].tokens == pool.candidates[n].tokens) continue;
            pairs.push_back(detail::make_pair(pool, p, n, RewardKind::semantic,
                                              judge_of(p) - judge_of(n), false));
        }
    }
    return pairs;
}

// One pair per pool: highest versus lowest quality score, both realizing the
// shared text. No pair when every candidate scores the same.
inline std::vector<PreferencePair> build_audio_quality_pairs(const CandidatePool& pool) {
    detail::require_shared_text(pool);
    if (pool.candidates.empty()) return {};
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
        const double q = detail::require_score(pool.candidates[i].scores.utmos, "utmos", pool, i);
        if (q > *pool.candidates[best].scores.utmos) best = i;
        if (q < *pool.candidates[worst].scores.utmos) worst = i;
    }
    if (best == worst || pool.candidates[best].tokens == pool.candidates[worst].tokens) return {};
    const double margin =
        *pool.candidates[best].scores.utmos - *pool.candidates[worst].scores.utmos;
    return {detail::make_pair(pool, best, worst, RewardKind::audio_quality, margin, true)};
}

// Positive: lowest WER among candidates within the tau_wer ceiling. Negative:
// drawn uniformly (seeded) from candidates at least delta_wer worse than the
// positive; the ceiling does not apply to negatives.
inline std::vector<PreferencePair> build_intelligibility_pairs(const CandidatePool& pool,
                                                               const Thresholds& thresholds,
                                                               std::uint64_t seed = 0) {
    detail::require_shared_text(pool);
    std::optional<std::size_t> pos;
    for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
        const double w = detail::require_score(pool.candidates[i].scores.wer, "wer", pool, i);
        if (w > thresholds.tau_wer) continue;
        if (!pos || w < *pool.candidates[*pos].scores.wer) pos = i;
    }
    if (!pos) return {};
    const double pos_wer = *pool.candidates[*pos].scores.wer;

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
        if (*pool.candidates[i].scores.wer >= pos_wer + thresholds.delta_wer &&
            pool.candidates[i].tokens != pool.candidates[*pos].tokens) {
            eligible.push_back(i);
        }
    }
    if (eligible.empty()) return {};
    Rng rng(seed);
    const std::size_t neg = eligible[rng.uniform_int(eligible.size())];
    const double margin = *pool.candidates[neg].scores.wer - pos_wer;
    return {detail::make_pair(pool, *pos, neg, RewardKind::intelligibility, margin, true)};
}

// Most versus least emotion-similar candidate, emitted only when the gap
// clears delta_emo so the contrast is meaningful.
inline std::vector<PreferencePair> build_emotion_pairs(const CandidatePool& pool,
                                                       const Thresholds& thresholds) {
    detail::require_shared_text(pool);
    if (pool.candidates.empty()) return {};
    std::size_t best = 0, worst = 0;
    for (std::size_t i = 0; i < pool.candidates.size(); ++i) {
        const double e = detail::require_score(pool.candidates[i].scores.emo_sim, "emo_sim", pool, i);
        if (e > *pool.candidates[best].scores.emo_sim) best = i;
        if (e < *pool.candidates[worst].scores.emo_sim) worst = i;
    }
    const double margin =
        *pool.candidates[best].scores.emo_sim - *pool.candidates[worst].scores.emo_sim;
    if (margin <= thresholds.delta_emo) return {};
    if (pool.candidates[best].tokens == pool.candidates[worst].tokens) return {};
    return {detail::make_pair(pool, best, worst, RewardKind::emotion, margin, true)};
}

}  // namespace rlaif::pairgen
