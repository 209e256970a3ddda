#pragma once

// JSON / JSONL schemas for the shared domain types. Field names follow the
// struct members one-to-one; optional fields are omitted when absent so
// round-trips are structurally exact.

#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rlaif/common/error.hpp"
#include "rlaif/core/types.hpp"

namespace rlaif {

using json = nlohmann::json;

inline json to_json(const TokenSequence& seq) {
    return json{{"ids", seq.ids}, {"stream_tag", to_string(seq.stream_tag)}};
}

inline TokenSequence token_sequence_from_json(const json& j) {
    TokenSequence seq;
    seq.ids = j.at("ids").get<std::vector<int>>();
    seq.stream_tag = stream_tag_from_string(j.at("stream_tag").get<std::string>());
    return seq;
}

inline json to_json(const DialogueTurn& turn) {
    json j{{"turn_index", turn.turn_index},
           {"user", to_json(turn.user)},
           {"system", to_json(turn.system)}};
    if (turn.asr_text) j["asr_text"] = to_json(*turn.asr_text);
    if (turn.response_text) j["response_text"] = to_json(*turn.response_text);
    return j;
}

inline DialogueTurn dialogue_turn_from_json(const json& j) {
    DialogueTurn turn;
    turn.turn_index = j.at("turn_index").get<int>();
    turn.user = token_sequence_from_json(j.at("user"));
    turn.system = token_sequence_from_json(j.at("system"));
    if (j.contains("asr_text")) turn.asr_text = token_sequence_from_json(j.at("asr_text"));
    if (j.contains("response_text")) turn.response_text = token_sequence_from_json(j.at("response_text"));
    return turn;
}

inline json to_json(const TurnHistory& history) {
    json turns = json::array();
    for (const auto& turn : history.prior_turns) turns.push_back(to_json(turn));
    return json{{"prior_turns", std::move(turns)}, {"speaker_prompt", to_json(history.speaker_prompt)}};
}

inline TurnHistory turn_history_from_json(const json& j) {
    TurnHistory history;
    for (const auto& turn : j.at("prior_turns")) {
        history.prior_turns.push_back(dialogue_turn_from_json(turn));
    }
    history.speaker_prompt = token_sequence_from_json(j.at("speaker_prompt"));
    return history;
}

inline json to_json(const ScoreSet& scores) {
    json j = json::object();
    if (scores.llm_judge) j["llm_judge"] = *scores.llm_judge;
    if (scores.autobleu) j["autobleu"] = *scores.autobleu;
    if (scores.utmos) j["utmos"] = *scores.utmos;
    if (scores.wer) j["wer"] = *scores.wer;
    if (scores.emo_sim) j["emo_sim"] = *scores.emo_sim;
    return j;
}

inline ScoreSet score_set_from_json(const json& j) {
    ScoreSet scores;
    if (j.contains("llm_judge")) scores.llm_judge = j.at("llm_judge").get<double>();
    if (j.contains("autobleu")) scores.autobleu = j.at("autobleu").get<double>();
    if (j.contains("utmos")) scores.utmos = j.at("utmos").get<double>();
    if (j.contains("wer")) scores.wer = j.at("wer").get<double>();
    if (j.contains("emo_sim")) scores.emo_sim = j.at("emo_sim").get<double>();
    return scores;
}

inline json to_json(const CandidatePool& pool) {
    json candidates = json::array();
    for (const auto& cand : pool.candidates) {
        candidates.push_back(json{{"tokens", to_json(cand.tokens)}, {"scores", to_json(cand.scores)}});
    }
    json j{{"dialogue_id", pool.dialogue_id},
           {"turn_index", pool.turn_index},
           {"history", to_json(pool.history)},
           {"candidates", std::move(candidates)}};
    if (pool.shared_text) j["shared_text"] = to_json(*pool.shared_text);
    return j;
}

inline CandidatePool candidate_pool_from_json(const json& j) {
    CandidatePool pool;
    pool.dialogue_id = j.at("dialogue_id").get<std::string>();
    pool.turn_index = j.at("turn_index").get<int>();
    pool.history = turn_history_from_json(j.at("history"));
    for (const auto& cand : j.at("candidates")) {
        pool.candidates.push_back(ScoredCandidate{token_sequence_from_json(cand.at("tokens")),
                                                  score_set_from_json(cand.at("scores"))});
    }
    if (j.contains("shared_text")) pool.shared_text = token_sequence_from_json(j.at("shared_text"));
    return pool;
}

inline json to_json(const PreferencePair& pair) {
    json j{{"history", to_json(pair.history)},
           {"positive", to_json(pair.positive)},
           {"negative", to_json(pair.negative)},
           {"reward_kind", to_string(pair.reward_kind)},
           {"margin", pair.margin}};
    if (pair.conditioning_text) j["conditioning_text"] = to_json(*pair.conditioning_text);
    return j;
}

inline PreferencePair preference_pair_from_json(const json& j) {
    PreferencePair pair;
    pair.history = turn_history_from_json(j.at("history"));
    pair.positive = token_sequence_from_json(j.at("positive"));
    pair.negative = token_sequence_from_json(j.at("negative"));
    pair.reward_kind = reward_kind_from_string(j.at("reward_kind").get<std::string>());
    pair.margin = j.at("margin").get<double>();
    if (j.contains("conditioning_text")) {
        pair.conditioning_text = token_sequence_from_json(j.at("conditioning_text"));
    }
    return pair;
}

inline json to_json(const Thresholds& t) {
    return json{{"tau_pos", t.tau_pos},     {"tau_neg", t.tau_neg},
                {"delta_low", t.delta_low}, {"delta_high", t.delta_high},
                {"tau_wer", t.tau_wer},     {"delta_wer", t.delta_wer},
                {"delta_emo", t.delta_emo}};
}

inline Thresholds thresholds_from_json(const json& j) {
    Thresholds t;
    if (j.contains("tau_pos")) t.tau_pos = j.at("tau_pos").get<double>();
    if (j.contains("tau_neg")) t.tau_neg = j.at("tau_neg").get<double>();
    if (j.contains("delta_low")) t.delta_low = j.at("delta_low").get<double>();
    if (j.contains("delta_high")) t.delta_high = j.at("delta_high").get<double>();
    if (j.contains("tau_wer")) t.tau_wer = j.at("tau_wer").get<double>();
    if (j.contains("delta_wer")) t.delta_wer = j.at("delta_wer").get<double>();
    if (j.contains("delta_emo")) t.delta_emo = j.at("delta_emo").get<double>();
    t.validate();
    return t;
}

// ---- JSONL plumbing ----

template <typename T, typename FromJson>
std::vector<T> read_jsonl(const std::string& path, FromJson from_json_fn) {
    std::ifstream in(path);
    if (!in) fail(errc::io_failure, "cannot open " + path);
    std::vector<T> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(errc::malformed_input,
                 path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        try {
            out.push_back(from_json_fn(j));
        } catch (const json::exception& e) {
            fail(errc::malformed_input,
                 path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

template <typename T, typename ToJson>
void write_jsonl(const std::string& path, const std::vector<T>& items, ToJson to_json_fn) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(errc::io_failure, "cannot write " + path);
    for (const T& item : items) {
        out << to_json_fn(item).dump() << "\n";
    }
    if (!out) fail(errc::io_failure, "write failed for " + path);
}

inline std::vector<CandidatePool> read_pools_jsonl(const std::string& path) {
    return read_jsonl<CandidatePool>(path, candidate_pool_from_json);
}

inline void write_pools_jsonl(const std::string& path, const std::vector<CandidatePool>& pools) {
    write_jsonl(path, pools, [](const CandidatePool& p) { return to_json(p); });
}

inline std::vector<PreferencePair> read_pairs_jsonl(const std::string& path) {
    return read_jsonl<PreferencePair>(path, preference_pair_from_json);
}

inline void write_pairs_jsonl(const std::string& path, const std::vector<PreferencePair>& pairs) {
    write_jsonl(path, pairs, [](const PreferencePair& p) { return to_json(p); });
}

inline void write_json_file(const std::string& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(errc::io_failure, "cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) fail(errc::io_failure, "write failed for " + path);
}

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::io_failure, "cannot open " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::exception& e) {
        fail(errc::malformed_input, path + ": " + e.what());
    }
}

}  // namespace rlaif
