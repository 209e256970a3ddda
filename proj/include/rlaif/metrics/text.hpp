#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "rlaif/common/error.hpp"
#include "rlaif/core/types.hpp"

namespace rlaif::metrics {

// Word error rate: (substitutions + insertions + deletions) / |reference|,
// via minimal edit distance with unit costs.
inline double wer(const TokenSequence& reference, const TokenSequence& hypothesis) {
    if (reference.empty()) fail(errc::empty_reference, "wer: empty reference");
    const auto& ref = reference.ids;
    const auto& hyp = hypothesis.ids;
    std::vector<int> prev(hyp.size() + 1), curr(hyp.size() + 1);
    for (std::size_t j = 0; j <= hyp.size(); ++j) prev[j] = static_cast<int>(j);
    for (std::size_t i = 1; i <= ref.size(); ++i) {
        curr[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= hyp.size(); ++j) {
            if (ref[i - 1] == hyp[j - 1]) {
                curr[j] = prev[j - 1];
            } else {
                curr[j] = 1 + std::min({prev[j - 1], prev[j], curr[j - 1]});
            }
        }
        std::swap(prev, curr);
    }
    return static_cast<double>(prev[hyp.size()]) / static_cast<double>(ref.size());
}

// Self-repetition score in [0, 100]: mean over n in {1..4} of the repeated
// n-gram rate, where rep_n = 1 - distinct/total and rep_n = 0 when the
// utterance has fewer than n tokens. High values flag degenerate text.
inline double auto_bleu(const TokenSequence& utterance) {
    if (utterance.empty()) fail(errc::empty_utterance, "auto_bleu: empty utterance");
    const auto& ids = utterance.ids;
    double acc = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        if (ids.size() < n) continue;  // rep_n = 0
        const std::size_t total = ids.size() - n + 1;
        std::set<std::vector<int>> distinct;
        for (std::size_t i = 0; i < total; ++i) {
            distinct.insert(std::vector<int>(ids.begin() + static_cast<std::ptrdiff_t>(i),
                                             ids.begin() + static_cast<std::ptrdiff_t>(i + n)));
        }
        acc += 1.0 - static_cast<double>(distinct.size()) / static_cast<double>(total);
    }
    return 100.0 * acc / 4.0;
}

inline double perplexity(const std::vector<double>& per_token_logprobs) {
    if (per_token_logprobs.empty()) fail(errc::empty_input, "perplexity: empty input");
    double total = 0.0;
    for (double lp : per_token_logprobs) {
        if (lp > 0.0) fail(errc::positive_log_prob, "perplexity: positive log probability");
        total += lp;
    }
    return std::exp(-total / static_cast<double>(per_token_logprobs.size()));
}

// Fraction of samples beating the baseline, ties counted half.
inline double win_rate(const std::vector<double>& scores, const std::vector<double>& baseline) {
    if (scores.size() != baseline.size() || scores.empty()) {
        fail(errc::length_mismatch, "win_rate: score lists must have equal nonzero length");
    }
    double wins = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i] > baseline[i]) {
            wins += 1.0;
        } else if (scores[i] == baseline[i]) {
            wins += 0.5;
        }
    }
    return wins / static_cast<double>(scores.size());
}

// Per utterance, rank systems by descending emotion similarity (rank 1 =
// best, ties share the average rank); returns the mean rank per system.
inline std::map<std::string, double> emotion_rank(
    const std::map<std::string, std::vector<double>>& systems) {
    if (systems.empty()) fail(errc::ragged_input, "emotion_rank: no systems");
    const std::size_t n_utts = systems.begin()->second.size();
    if (n_utts == 0) fail(errc::ragged_input, "emotion_rank: empty score lists");
    for (const auto& [name, sims] : systems) {
        if (sims.size() != n_utts) {
            fail(errc::ragged_input, "emotion_rank: system " + name + " scores a different set");
        }
    }
    std::map<std::string, double> rank_sums;
    for (const auto& [name, sims] : systems) rank_sums[name] = 0.0;
    for (std::size_t u = 0; u < n_utts; ++u) {
        std::vector<std::pair<double, std::string>> scored;
        scored.reserve(systems.size());
        for (const auto& [name, sims] : systems) scored.emplace_back(sims[u], name);
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        std::size_t i = 0;
        while (i < scored.size()) {
            std::size_t j = i;
            while (j + 1 < scored.size() && scored[j + 1].first == scored[i].first) ++j;
            const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t t = i; t <= j; ++t) rank_sums[scored[t].second] += avg_rank;
            i = j + 1;
        }
    }
    for (auto& [name, total] : rank_sums) total /= static_cast<double>(n_utts);
    return rank_sums;
}

}  // namespace rlaif::metrics
