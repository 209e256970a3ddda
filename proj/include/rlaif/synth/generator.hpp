#pragma once

// Synthetic dialogue and candidate-pool generation. Dialogues are short
// topic-driven exchanges: each user turn names a topic via a marker token
// and the hidden target continuation is that topic's canonical phrase, which
// keeps the mapping learnable by a small policy while giving the oracle a
// well-defined notion of response quality.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlaif/common/rng.hpp"
#include "rlaif/core/serialization.hpp"
#include "rlaif/core/types.hpp"
#include "rlaif/synth/oracle.hpp"

namespace rlaif::synth {

struct SynthTurn {
    int turn_index = 1;
    int topic = 0;
    TokenSequence user;             // text, contains the topic marker
    TokenSequence target_response;  // hidden target the judge scores against
    int reference_emotion = 0;
};

struct SynthDialogue {
    std::string dialogue_id;
    TokenSequence speaker_prompt;
    std::vector<SynthTurn> turns;
};

struct GeneratorConfig {
    std::size_t num_dialogues = 50;
    std::size_t turns_per_dialogue = 10;
    std::size_t candidates_per_turn = 10;
    std::uint64_t seed = 0;
    double max_noise = 0.8;  // worst corruption level for speech realizations
};

inline std::vector<SynthDialogue> generate_dialogues(const Oracle& oracle,
                                                     const GeneratorConfig& cfg) {
    std::vector<SynthDialogue> dialogues;
    dialogues.reserve(cfg.num_dialogues);
    const auto& ocfg = oracle.config();
    for (std::size_t d = 0; d < cfg.num_dialogues; ++d) {
        Rng rng(derive_seed(cfg.seed, 0xD1A, d));
        SynthDialogue dialogue;
        dialogue.dialogue_id = "d" + std::to_string(d);
        dialogue.speaker_prompt.stream_tag = StreamTag::text;
        dialogue.speaker_prompt.ids = {
            oracle.filler(static_cast<int>(rng.uniform_int(ocfg.filler_words)))};
        for (std::size_t k = 1; k <= cfg.turns_per_dialogue; ++k) {
            SynthTurn turn;
            turn.turn_index = static_cast<int>(k);
            turn.topic = static_cast<int>(rng.uniform_int(ocfg.n_topics));
            turn.user.stream_tag = StreamTag::text;
            turn.user.ids.push_back(oracle.filler(static_cast<int>(rng.uniform_int(ocfg.filler_words))));
            turn.user.ids.push_back(oracle.topic_marker(turn.topic));
            const std::size_t tail = 1 + rng.uniform_int(3);
            for (std::size_t t = 0; t < tail; ++t) {
                turn.user.ids.push_back(
                    oracle.filler(static_cast<int>(rng.uniform_int(ocfg.filler_words))));
            }
            turn.target_response = oracle.topic_phrase(turn.topic);
            turn.reference_emotion = static_cast<int>(rng.uniform_int(ocfg.n_emotions));
            dialogue.turns.push_back(std::move(turn));
        }
        dialogues.push_back(std::move(dialogue));
    }
    return dialogues;
}

// History for turn k of a dialogue: prior turns answered with their target
// responses, then the current user utterance as an open turn.
inline TurnHistory history_for_turn(const SynthDialogue& dialogue, std::size_t turn_idx,
                                    std::size_t max_context_turns = 1) {
    TurnHistory history;
    history.speaker_prompt = dialogue.speaker_prompt;
    const std::size_t first =
        turn_idx >= max_context_turns ? turn_idx - max_context_turns : 0;
    for (std::size_t j = first; j < turn_idx; ++j) {
        DialogueTurn turn;
        turn.turn_index = dialogue.turns[j].turn_index;
        turn.user = dialogue.turns[j].user;
        turn.system = dialogue.turns[j].target_response;
        history.prior_turns.push_back(std::move(turn));
    }
    DialogueTurn current;
    current.turn_index = dialogue.turns[turn_idx].turn_index;
    current.user = dialogue.turns[turn_idx].user;
    current.system.stream_tag = StreamTag::text;
    history.prior_turns.push_back(std::move(current));
    return history;
}

namespace detail {

// A candidate of quality q mixes target tokens (probability q) with
// repetitions and distractors, so judge and autobleu spread over the pool
// the way threshold-based filtering expects. Distractors draw from the whole
// content vocabulary: dispreferred candidates must cover the regions a
// drifting policy could escape into, or the preference contrast leaves those
// regions untouched.
inline TokenSequence make_text_candidate(const Oracle& oracle, const TokenSequence& target,
                                         double quality, Rng& rng) {
    const auto& ocfg = oracle.config();
    TokenSequence cand;
    cand.stream_tag = StreamTag::text;
    const std::size_t len = target.ids.size() + rng.uniform_int(3);
    std::size_t next_target = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const double roll = rng.uniform_double();
        if (roll < quality) {
            cand.ids.push_back(target.ids[next_target % target.ids.size()]);
            ++next_target;
        } else if (roll < quality + (1.0 - quality) * 0.4 && !cand.ids.empty()) {
            cand.ids.push_back(cand.ids.back());  // repetition, drives autobleu up
        } else if (rng.uniform_double() < 0.5) {
            // plausible confusions: fillers and other topics' words
            if (rng.uniform_double() < 0.5) {
                cand.ids.push_back(
                    oracle.filler(static_cast<int>(rng.uniform_int(ocfg.filler_words))));
            } else {
                const int other_topic = static_cast<int>(rng.uniform_int(ocfg.n_topics));
                cand.ids.push_back(oracle.topic_word(
                    other_topic, static_cast<int>(rng.uniform_int(ocfg.words_per_topic))));
            }
        } else {
            // arbitrary degeneration anywhere in the content vocabulary
            cand.ids.push_back(kFirstContentToken +
                               static_cast<int>(rng.uniform_int(
                                   static_cast<std::uint64_t>(oracle.vocab_size() - kFirstContentToken))));
        }
    }
    return cand;
}

// Noise-channel speech realization: deletions, plus substitutions and
// insertions that draw half from the dedicated noise alphabet (degrading the
// quality score) and half from anywhere in the content vocabulary, so
// dispreferred realizations cover every region a drifting policy could
// wander into.
inline TokenSequence make_speech_candidate(const Oracle& oracle, const TokenSequence& clean_speech,
                                           double corruption, Rng& rng) {
    const auto& ocfg = oracle.config();
    auto corrupt_token = [&oracle, &ocfg, &rng] {
        if (rng.uniform_double() < 0.8) {
            return oracle.noise_token(static_cast<int>(rng.uniform_int(ocfg.noise_words)));
        }
        // occasional confusion with some other content token
        return kFirstContentToken +
               static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(oracle.text_region_size())));
    };
    TokenSequence cand;
    cand.stream_tag = StreamTag::speech;
    for (int id : clean_speech.ids) {
        const double roll = rng.uniform_double();
        if (roll < corruption / 6.0) continue;  // deletion
        cand.ids.push_back(roll < corruption ? corrupt_token() : id);
        if (rng.uniform_double() < corruption / 6.0) {
            cand.ids.push_back(corrupt_token());
        }
    }
    if (cand.ids.empty()) {
        cand.ids.push_back(corrupt_token());
    }
    return cand;
}

}  // namespace detail

// Two pools per turn: a text pool scored by judge/autobleu and a speech pool
// of realizations of the turn's text response scored by utmos/wer/emo_sim.
inline std::vector<CandidatePool> make_candidate_pools(const Oracle& oracle,
                                                       const SynthDialogue& dialogue,
                                                       const GeneratorConfig& cfg) {
    std::vector<CandidatePool> pools;
    const std::uint64_t dialogue_seed = hash_string(dialogue.dialogue_id);
    for (std::size_t k = 0; k < dialogue.turns.size(); ++k) {
        const SynthTurn& turn = dialogue.turns[k];
        const TurnHistory history = history_for_turn(dialogue, k);

        CandidatePool text_pool;
        text_pool.dialogue_id = dialogue.dialogue_id;
        text_pool.turn_index = turn.turn_index;
        text_pool.history = history;
        Rng text_rng(derive_seed(cfg.seed, dialogue_seed, 2 * k));
        for (std::size_t c = 0; c < cfg.candidates_per_turn; ++c) {
            // bimodal quality: a quarter of the candidates are near-faithful
            // renditions, the rest spread across the low end, so pools
            // carry both clear positives and clear negatives
            const double roll = text_rng.uniform_double();
            const double quality =
                roll < 0.35 ? 0.85 + 0.15 * text_rng.uniform_double()
                            : 0.8 * text_rng.uniform_double();
            TokenSequence tokens =
                detail::make_text_candidate(oracle, turn.target_response, quality, text_rng);
            ScoreSet scores = oracle.score_text_candidate(tokens, turn.target_response);
            text_pool.candidates.push_back({std::move(tokens), std::move(scores)});
        }
        pools.push_back(std::move(text_pool));

        CandidatePool speech_pool;
        speech_pool.dialogue_id = dialogue.dialogue_id;
        speech_pool.turn_index = turn.turn_index;
        speech_pool.history = history;
        speech_pool.shared_text = turn.target_response;
        const TokenSequence clean_speech = oracle.to_speech(turn.target_response);
        Rng speech_rng(derive_seed(cfg.seed, dialogue_seed, 2 * k + 1));
        for (std::size_t c = 0; c < cfg.candidates_per_turn; ++c) {
            // bimodal corruption, mirroring the text side: realizations are
            // either near-clean or badly degraded, so pairs contrast whole
            // sequences rather than a few noisy positions
            const double roll = speech_rng.uniform_double();
            const double corruption =
                roll < 0.35 ? 0.08 * speech_rng.uniform_double()
                            : cfg.max_noise * (0.6 + 0.4 * speech_rng.uniform_double());
            TokenSequence tokens =
                detail::make_speech_candidate(oracle, clean_speech, corruption, speech_rng);
            ScoreSet scores =
                oracle.score_speech_candidate(tokens, turn.target_response, turn.reference_emotion);
            speech_pool.candidates.push_back({std::move(tokens), std::move(scores)});
        }
        pools.push_back(std::move(speech_pool));
    }
    return pools;
}

// ---- dialogue file schema ----

inline json to_json(const SynthTurn& turn) {
    return json{{"turn_index", turn.turn_index},
                {"topic", turn.topic},
                {"user", rlaif::to_json(turn.user)},
                {"target_response", rlaif::to_json(turn.target_response)},
                {"reference_emotion", turn.reference_emotion}};
}

inline json to_json(const SynthDialogue& dialogue) {
    json turns = json::array();
    for (const auto& turn : dialogue.turns) turns.push_back(to_json(turn));
    return json{{"dialogue_id", dialogue.dialogue_id},
                {"speaker_prompt", rlaif::to_json(dialogue.speaker_prompt)},
                {"turns", std::move(turns)}};
}

inline SynthDialogue dialogue_from_json(const json& j) {
    SynthDialogue dialogue;
    dialogue.dialogue_id = j.at("dialogue_id").get<std::string>();
    dialogue.speaker_prompt = token_sequence_from_json(j.at("speaker_prompt"));
    for (const auto& tj : j.at("turns")) {
        SynthTurn turn;
        turn.turn_index = tj.at("turn_index").get<int>();
        turn.topic = tj.at("topic").get<int>();
        turn.user = token_sequence_from_json(tj.at("user"));
        turn.target_response = token_sequence_from_json(tj.at("target_response"));
        turn.reference_emotion = tj.at("reference_emotion").get<int>();
        dialogue.turns.push_back(std::move(turn));
    }
    return dialogue;
}

inline std::vector<SynthDialogue> read_dialogues_jsonl(const std::string& path) {
    return read_jsonl<SynthDialogue>(path, dialogue_from_json);
}

inline void write_dialogues_jsonl(const std::string& path,
                                  const std::vector<SynthDialogue>& dialogues) {
    write_jsonl(path, dialogues, [](const SynthDialogue& d) { return to_json(d); });
}

}  // namespace rlaif::synth
