#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rlaif/common/error.hpp"

namespace rlaif {

// Reserved token ids shared by every vocabulary. Id 0 is the implicit
// begin-of-stream token the policy prepends internally; id 1 delimits
// segments (turns, prompts, conditioning text) inside a flat context and
// doubles as the sampler's stop token; id 2 cues speech-unit generation
// after a conditioning text segment, keeping the two output modes separable
// in an otherwise flat context. Data streams use ids >= 3.
inline constexpr int kBosToken = 0;
inline constexpr int kEndOfSegment = 1;
inline constexpr int kSpeechModeToken = 2;
inline constexpr int kFirstContentToken = 3;

enum class StreamTag { text, speech, asr };

inline const char* to_string(StreamTag tag) {
    switch (tag) {
        case StreamTag::text: return "text";
        case StreamTag::speech: return "speech";
        case StreamTag::asr: return "asr";
    }
    return "text";
}

inline StreamTag stream_tag_from_string(const std::string& s) {
    if (s == "text") return StreamTag::text;
    if (s == "speech") return StreamTag::speech;
    if (s == "asr") return StreamTag::asr;
    fail(errc::malformed_input, "unknown stream_tag: " + s);
}

// Abstract discrete token stream. Stands in for text tokens, speech units
// or ASR hypotheses depending on the tag; the policy itself is tag-agnostic.
struct TokenSequence {
    std::vector<int> ids;
    StreamTag stream_tag = StreamTag::text;

    bool empty() const { return ids.empty(); }
    std::size_t size() const { return ids.size(); }

    friend bool operator==(const TokenSequence& a, const TokenSequence& b) {
        return a.ids == b.ids && a.stream_tag == b.stream_tag;
    }
};

inline void check_vocab_bounds(const TokenSequence& seq, int vocab_size, const char* what) {
    for (int id : seq.ids) {
        if (id < 0 || id >= vocab_size) {
            fail(errc::vocab_overflow,
                 std::string(what) + ": token id " + std::to_string(id) +
                     " outside vocabulary of size " + std::to_string(vocab_size));
        }
    }
}

struct DialogueTurn {
    int turn_index = 1;  // 1-based
    TokenSequence user;
    TokenSequence system;
    std::optional<TokenSequence> asr_text;
    std::optional<TokenSequence> response_text;

    friend bool operator==(const DialogueTurn& a, const DialogueTurn& b) {
        return a.turn_index == b.turn_index && a.user == b.user && a.system == b.system &&
               a.asr_text == b.asr_text && a.response_text == b.response_text;
    }
};

// Conversation state a candidate response is conditioned on. By convention
// the final prior turn carries the current user utterance with an empty
// system sequence; the candidates under scoring complete that turn.
struct TurnHistory {
    std::vector<DialogueTurn> prior_turns;
    TokenSequence speaker_prompt;

    friend bool operator==(const TurnHistory& a, const TurnHistory& b) {
        return a.prior_turns == b.prior_turns && a.speaker_prompt == b.speaker_prompt;
    }
};

// Flat token context for the policy: speaker prompt, then each turn's user
// and system streams, all delimited by the end-of-segment token. Empty
// segments still contribute their delimiter so turn structure stays
// unambiguous; an empty speaker prompt contributes nothing.
inline std::vector<int> flatten_history(const TurnHistory& history) {
    std::vector<int> out;
    if (!history.speaker_prompt.empty()) {
        out.insert(out.end(), history.speaker_prompt.ids.begin(), history.speaker_prompt.ids.end());
        out.push_back(kEndOfSegment);
    }
    for (const DialogueTurn& turn : history.prior_turns) {
        out.insert(out.end(), turn.user.ids.begin(), turn.user.ids.end());
        out.push_back(kEndOfSegment);
        out.insert(out.end(), turn.system.ids.begin(), turn.system.ids.end());
        out.push_back(kEndOfSegment);
    }
    return out;
}

// Pluggable per-candidate scores. External scorers are ingested as
// precomputed fields; the synthetic oracle fills the same slots.
struct ScoreSet {
    std::optional<double> llm_judge;  // [0, 10]
    std::optional<double> autobleu;   // [0, 100]
    std::optional<double> utmos;
    std::optional<double> wer;      // >= 0
    std::optional<double> emo_sim;  // [0, 1]

    bool any() const {
        return llm_judge || autobleu || utmos || wer || emo_sim;
    }

    friend bool operator==(const ScoreSet& a, const ScoreSet& b) {
        return a.llm_judge == b.llm_judge && a.autobleu == b.autobleu && a.utmos == b.utmos &&
               a.wer == b.wer && a.emo_sim == b.emo_sim;
    }
};

struct ScoredCandidate {
    TokenSequence tokens;
    ScoreSet scores;

    friend bool operator==(const ScoredCandidate& a, const ScoredCandidate& b) {
        return a.tokens == b.tokens && a.scores == b.scores;
    }
};

// Per-turn sampled candidates. When shared_text is set the candidates are
// speech realizations of that one text response; otherwise they are
// alternative text responses.
struct CandidatePool {
    std::string dialogue_id;
    int turn_index = 1;
    TurnHistory history;
    std::vector<ScoredCandidate> candidates;
    std::optional<TokenSequence> shared_text;

    friend bool operator==(const CandidatePool& a, const CandidatePool& b) {
        return a.dialogue_id == b.dialogue_id && a.turn_index == b.turn_index &&
               a.history == b.history && a.candidates == b.candidates &&
               a.shared_text == b.shared_text;
    }
};

enum class RewardKind { semantic, audio_quality, intelligibility, emotion };

inline const char* to_string(RewardKind kind) {
    switch (kind) {
        case RewardKind::semantic: return "semantic";
        case RewardKind::audio_quality: return "audio_quality";
        case RewardKind::intelligibility: return "intelligibility";
        case RewardKind::emotion: return "emotion";
    }
    return "semantic";
}

inline RewardKind reward_kind_from_string(const std::string& s) {
    if (s == "semantic") return RewardKind::semantic;
    if (s == "audio_quality") return RewardKind::audio_quality;
    if (s == "intelligibility") return RewardKind::intelligibility;
    if (s == "emotion") return RewardKind::emotion;
    fail(errc::malformed_input, "unknown reward_kind: " + s);
}

inline bool is_audio_family(RewardKind kind) {
    return kind == RewardKind::audio_quality || kind == RewardKind::intelligibility ||
           kind == RewardKind::emotion;
}

// The atomic training unit. For the audio-family kinds both members realize
// the same conditioning text, so conditioning_text must be present.
struct PreferencePair {
    TurnHistory history;
    TokenSequence positive;
    TokenSequence negative;
    RewardKind reward_kind = RewardKind::semantic;
    std::optional<TokenSequence> conditioning_text;
    double margin = 0.0;

    friend bool operator==(const PreferencePair& a, const PreferencePair& b) {
        return a.history == b.history && a.positive == b.positive && a.negative == b.negative &&
               a.reward_kind == b.reward_kind && a.conditioning_text == b.conditioning_text &&
               a.margin == b.margin;
    }
};

// Pair-construction thresholds, one configurable record so experiments can
// sweep them. Defaults: positives need judge > 6 and autobleu < 30;
// negatives need judge < 5 or autobleu > 30; intelligibility positives need
// wer <= 0.25 with negatives at least 0.05 worse; emotion pairs need a
// max-min similarity gap above 0.02.
struct Thresholds {
    double tau_pos = 6.0;
    double tau_neg = 5.0;
    double delta_low = 30.0;
    double delta_high = 30.0;
    double tau_wer = 0.25;
    double delta_wer = 0.05;
    double delta_emo = 0.02;

    void validate() const {
        if (!(tau_pos > tau_neg)) fail(errc::malformed_input, "thresholds: tau_pos must exceed tau_neg");
        if (!(delta_wer > 0.0)) fail(errc::malformed_input, "thresholds: delta_wer must be positive");
        if (!(delta_emo > 0.0)) fail(errc::malformed_input, "thresholds: delta_emo must be positive");
    }
};

// Structural validation of a PreferencePair. Throws with the specific code
// on the first violated invariant.
inline void validate_pair(const PreferencePair& pair, int vocab_size = 0) {
    if (pair.positive == pair.negative) {
        fail(errc::identical_members, "preference pair members are identical");
    }
    if (is_audio_family(pair.reward_kind)) {
        if (!pair.conditioning_text.has_value()) {
            fail(errc::missing_conditioning,
                 std::string("pair of kind ") + to_string(pair.reward_kind) +
                     " requires conditioning_text");
        }
    }
    if (vocab_size > 0) {
        check_vocab_bounds(pair.positive, vocab_size, "positive");
        check_vocab_bounds(pair.negative, vocab_size, "negative");
        if (pair.conditioning_text) {
            check_vocab_bounds(*pair.conditioning_text, vocab_size, "conditioning_text");
        }
    }
}

}  // namespace rlaif
