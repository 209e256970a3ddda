#pragma once

// Built-in reward oracle over a structured toy vocabulary. Every score is a
// pure function of candidate tokens plus per-turn metadata, so stored pool
// scores can always be recomputed and checked, and end-to-end training can
// be judged without any external model.
//
// Vocabulary layout (ids):
//   0 bos, 1 end-of-segment, 2 speech-mode cue
//   content region: topic markers, per-topic content words, filler words
//   noise region:   dedicated speech-noise tokens at the top of the range
//
// Text and speech streams share the content alphabet (the single-token-
// stream abstraction): a clean spoken realization carries the same ids as
// its text, tagged as speech, and corruption substitutes noise or confusable
// content tokens.

#include <cmath>
#include <cstdint>
#include <set>
#include <vector>

#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"
#include "rlaif/metrics/text.hpp"

namespace rlaif::synth {

struct OracleConfig {
    int n_topics = 8;
    int words_per_topic = 5;
    int phrase_len = 6;
    int filler_words = 48;
    int noise_words = 16;
    int n_emotions = 6;
    int emo_dim = 8;
    std::uint64_t embed_seed = 1234;  // fixed per-emotion embeddings
};

class Oracle {
public:
    explicit Oracle(const OracleConfig& cfg = {}) : cfg_(cfg) {
        Rng rng(cfg_.embed_seed);
        emo_embed_.resize(static_cast<std::size_t>(cfg_.n_emotions));
        for (auto& e : emo_embed_) {
            e.resize(static_cast<std::size_t>(cfg_.emo_dim));
            for (double& x : e) x = rng.normal();
        }
    }

    const OracleConfig& config() const { return cfg_; }

    int text_region_size() const {
        return cfg_.n_topics + cfg_.n_topics * cfg_.words_per_topic + cfg_.filler_words;
    }
    int noise_offset() const { return kFirstContentToken + text_region_size(); }
    int vocab_size() const { return noise_offset() + cfg_.noise_words; }

    int topic_marker(int topic) const { return kFirstContentToken + topic; }
    int topic_word(int topic, int j) const {
        return kFirstContentToken + cfg_.n_topics + topic * cfg_.words_per_topic + j;
    }
    int filler(int f) const {
        return kFirstContentToken + cfg_.n_topics + cfg_.n_topics * cfg_.words_per_topic + f;
    }
    int noise_token(int j) const { return noise_offset() + j; }
    bool is_noise(int id) const { return id >= noise_offset() && id < vocab_size(); }

    // Canonical text continuation for a topic: it opens by echoing the topic
    // marker, then walks the topic's content words, padded with
    // topic-determined fillers up to the phrase length.
    TokenSequence topic_phrase(int topic) const {
        TokenSequence phrase;
        phrase.stream_tag = StreamTag::text;
        phrase.ids.push_back(topic_marker(topic));
        for (int j = 0; j + 1 < cfg_.phrase_len && j < cfg_.words_per_topic; ++j) {
            phrase.ids.push_back(topic_word(topic, j));
        }
        for (int j = 1 + cfg_.words_per_topic; j < cfg_.phrase_len; ++j) {
            phrase.ids.push_back(filler((topic + j) % cfg_.filler_words));
        }
        return phrase;
    }

    // Clean spoken realization: same content ids, speech-tagged.
    TokenSequence to_speech(const TokenSequence& text) const {
        TokenSequence speech;
        speech.stream_tag = StreamTag::speech;
        speech.ids = text.ids;
        return speech;
    }

    // Semantic judge: scaled distinct-token overlap with the hidden target
    // continuation, in [0, 10].
    double judge(const TokenSequence& candidate, const TokenSequence& target) const {
        if (target.empty()) return 0.0;
        const std::set<int> target_set(target.ids.begin(), target.ids.end());
        const std::set<int> cand_set(candidate.ids.begin(), candidate.ids.end());
        std::size_t hits = 0;
        for (int id : cand_set) {
            if (target_set.count(id) != 0) ++hits;
        }
        return 10.0 * static_cast<double>(hits) / static_cast<double>(target_set.size());
    }

    double autobleu(const TokenSequence& candidate) const { return metrics::auto_bleu(candidate); }

    // Intelligibility: WER of the speech candidate against the speech-domain
    // rendering of the conditioning text (the simulated ASR reference).
    double speech_wer(const TokenSequence& conditioning_text, const TokenSequence& candidate) const {
        return metrics::wer(to_speech(conditioning_text), candidate);
    }

    // Audio quality in [1, 5], degraded by the fraction of noise tokens.
    double utmos(const TokenSequence& candidate) const {
        if (candidate.empty()) return 1.0;
        std::size_t noisy = 0;
        for (int id : candidate.ids) {
            if (is_noise(id)) ++noisy;
        }
        return 5.0 - 4.0 * static_cast<double>(noisy) / static_cast<double>(candidate.ids.size());
    }

    // Simulated ASR transcript of a speech stream: content tokens pass
    // through, noise tokens and any reserved ids are dropped.
    TokenSequence transcribe(const TokenSequence& speech) const {
        TokenSequence text;
        text.stream_tag = StreamTag::asr;
        for (int id : speech.ids) {
            if (id >= kFirstContentToken && !is_noise(id)) text.ids.push_back(id);
        }
        return text;
    }

    int emotion_label(const TokenSequence& candidate) const {
        long long total = 0;
        for (int id : candidate.ids) total += id;
        return static_cast<int>(total % cfg_.n_emotions);
    }

    // Cosine similarity between fixed per-label embeddings, mapped to [0, 1].
    double emo_sim(const TokenSequence& candidate, int reference_label) const {
        const auto& a = emo_embed_[static_cast<std::size_t>(emotion_label(candidate))];
        const auto& b = emo_embed_[static_cast<std::size_t>(reference_label % cfg_.n_emotions)];
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        const double cosine = dot / (std::sqrt(na) * std::sqrt(nb));
        return 0.5 * (1.0 + cosine);
    }

    ScoreSet score_text_candidate(const TokenSequence& candidate, const TokenSequence& target) const {
        ScoreSet scores;
        scores.llm_judge = judge(candidate, target);
        scores.autobleu = autobleu(candidate);
        return scores;
    }

    ScoreSet score_speech_candidate(const TokenSequence& candidate,
                                    const TokenSequence& conditioning_text,
                                    int reference_label) const {
        ScoreSet scores;
        scores.utmos = utmos(candidate);
        scores.wer = speech_wer(conditioning_text, candidate);
        scores.emo_sim = emo_sim(candidate, reference_label);
        return scores;
    }

private:
    OracleConfig cfg_;
    std::vector<std::vector<double>> emo_embed_;
};

}  // namespace rlaif::synth
