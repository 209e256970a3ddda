#pragma once

// End-to-end pipelines behind the CLI subcommands. Each command is an
// ordinary function over paths plus an args struct and returns a JSON
// summary, so tests drive the exact code the binary runs.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlaif/core/serialization.hpp"
#include "rlaif/dpo/objective.hpp"
#include "rlaif/dpo/train.hpp"
#include "rlaif/duplex/blocks.hpp"
#include "rlaif/metrics/significance.hpp"
#include "rlaif/metrics/text.hpp"
#include "rlaif/pairgen/builders.hpp"
#include "rlaif/pairgen/dataset.hpp"
#include "rlaif/policy/checkpoint.hpp"
#include "rlaif/policy/model.hpp"
#include "rlaif/synth/generator.hpp"
#include "rlaif/synth/oracle.hpp"

namespace rlaif::pipeline {

inline json to_json(const dpo::AdamConfig& adam) {
    return json{{"lr", adam.lr},
                {"beta1", adam.beta1},
                {"beta2", adam.beta2},
                {"eps", adam.eps},
                {"weight_decay", adam.weight_decay}};
}

inline json to_json(const dpo::ScheduleConfig& schedule) {
    return json{{"total_steps", schedule.total_steps},
                {"warmup_steps", schedule.warmup_steps},
                {"min_lr", schedule.min_lr},
                {"max_lr", schedule.max_lr}};
}

inline json to_json(const dpo::DpoConfig& cfg) {
    return json{{"beta", cfg.beta},
                {"variant", dpo::to_string(cfg.variant)},
                {"adam", to_json(cfg.adam)},
                {"schedule", to_json(cfg.schedule)},
                {"grad_clip", cfg.grad_clip},
                {"epochs", cfg.epochs},
                {"batch_size", cfg.batch_size},
                {"seed", cfg.seed},
                {"val_ratio", cfg.val_ratio},
                {"block_size", cfg.block_size},
                {"terminate_members", cfg.terminate_members}};
}

inline dpo::DpoConfig dpo_config_from_json(const json& j) {
    dpo::DpoConfig cfg;
    if (j.contains("preset") && j.at("preset").get<std::string>() == "large_model") {
        cfg = dpo::large_model_preset();
    }
    if (j.contains("beta")) cfg.beta = j.at("beta").get<double>();
    if (j.contains("variant")) cfg.variant = dpo::variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("adam")) {
        const json& a = j.at("adam");
        if (a.contains("lr")) cfg.adam.lr = a.at("lr").get<double>();
        if (a.contains("beta1")) cfg.adam.beta1 = a.at("beta1").get<double>();
        if (a.contains("beta2")) cfg.adam.beta2 = a.at("beta2").get<double>();
        if (a.contains("eps")) cfg.adam.eps = a.at("eps").get<double>();
        if (a.contains("weight_decay")) cfg.adam.weight_decay = a.at("weight_decay").get<double>();
    }
    if (j.contains("schedule")) {
        const json& s = j.at("schedule");
        if (s.contains("total_steps")) cfg.schedule.total_steps = s.at("total_steps").get<std::size_t>();
        if (s.contains("warmup_steps")) cfg.schedule.warmup_steps = s.at("warmup_steps").get<std::size_t>();
        if (s.contains("min_lr")) cfg.schedule.min_lr = s.at("min_lr").get<double>();
        if (s.contains("max_lr")) cfg.schedule.max_lr = s.at("max_lr").get<double>();
    }
    if (j.contains("grad_clip")) cfg.grad_clip = j.at("grad_clip").get<double>();
    if (j.contains("epochs")) cfg.epochs = j.at("epochs").get<std::size_t>();
    if (j.contains("batch_size")) cfg.batch_size = j.at("batch_size").get<std::size_t>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("val_ratio")) cfg.val_ratio = j.at("val_ratio").get<double>();
    if (j.contains("block_size")) cfg.block_size = j.at("block_size").get<int>();
    if (j.contains("terminate_members")) cfg.terminate_members = j.at("terminate_members").get<bool>();
    return cfg;
}

// ---- gen-synthetic ----

struct GenArgs {
    std::string out_dir;
    synth::GeneratorConfig gen;
    synth::OracleConfig oracle;
};

inline json cmd_gen_synthetic(const GenArgs& args) {
    std::filesystem::create_directories(args.out_dir);
    const synth::Oracle oracle(args.oracle);
    const auto dialogues = synth::generate_dialogues(oracle, args.gen);
    std::vector<CandidatePool> pools;
    for (const auto& dialogue : dialogues) {
        auto dialogue_pools = synth::make_candidate_pools(oracle, dialogue, args.gen);
        pools.insert(pools.end(), dialogue_pools.begin(), dialogue_pools.end());
    }
    const std::string dialogues_path = args.out_dir + "/dialogues.jsonl";
    const std::string pools_path = args.out_dir + "/pools.jsonl";
    synth::write_dialogues_jsonl(dialogues_path, dialogues);
    write_pools_jsonl(pools_path, pools);
    return json{{"dialogues", dialogues.size()},
                {"turns", dialogues.empty() ? 0 : dialogues.size() * dialogues[0].turns.size()},
                {"pools", pools.size()},
                {"candidates_per_turn", args.gen.candidates_per_turn},
                {"vocab_size", oracle.vocab_size()},
                {"dialogues_path", dialogues_path},
                {"pools_path", pools_path}};
}

// ---- build-pairs ----

struct BuildPairsArgs {
    std::string pools_path;
    std::string out_pairs;
    std::string out_stats;
    Thresholds thresholds;
    std::string recipe = "joint-v2";
    std::uint64_t seed = 0;
    std::size_t max_pairs_per_turn = 1;
};

inline json cmd_build_pairs(const BuildPairsArgs& args) {
    args.thresholds.validate();
    const auto pools = read_pools_jsonl(args.pools_path);
    std::map<RewardKind, std::vector<PreferencePair>> sets;
    for (const auto& pool : pools) {
        if (pool.candidates.size() < 2) continue;
        // per-pool builder seed derived from the pool identity
        const std::uint64_t pool_seed = derive_seed(args.seed, hash_string(pool.dialogue_id),
                                                    static_cast<std::uint64_t>(pool.turn_index));
        auto collect = [&sets](RewardKind kind, std::vector<PreferencePair> pairs) {
            auto& dst = sets[kind];
            dst.insert(dst.end(), std::make_move_iterator(pairs.begin()),
                       std::make_move_iterator(pairs.end()));
        };
        if (pool.shared_text) {
            collect(RewardKind::audio_quality, pairgen::build_audio_quality_pairs(pool));
            collect(RewardKind::intelligibility,
                    pairgen::build_intelligibility_pairs(pool, args.thresholds, pool_seed));
            collect(RewardKind::emotion, pairgen::build_emotion_pairs(pool, args.thresholds));
        } else {
            collect(RewardKind::semantic,
                    pairgen::build_semantic_pairs(pool, args.thresholds, args.max_pairs_per_turn,
                                                  pool_seed));
        }
    }

    json built = json::object();
    std::size_t total_built = 0;
    for (RewardKind kind : {RewardKind::semantic, RewardKind::audio_quality,
                            RewardKind::intelligibility, RewardKind::emotion}) {
        const auto it = sets.find(kind);
        const std::size_t n = it == sets.end() ? 0 : it->second.size();
        built[to_string(kind)] = n;
        total_built += n;
    }
    built["total"] = total_built;

    json summary{{"pairs", built}, {"recipe", args.recipe}};
    if (total_built == 0) {
        write_pairs_jsonl(args.out_pairs, {});
        summary["dataset"] = json{{"total", 0}};
    } else {
        const pairgen::DpoDataset dataset =
            pairgen::assemble_multireward(sets, args.recipe, args.seed);
        write_pairs_jsonl(args.out_pairs, dataset.pairs);
        summary["dataset"] = dataset.counts;
    }
    if (!args.out_stats.empty()) write_json_file(args.out_stats, summary);
    return summary;
}

// ---- train ----

struct TrainArgs {
    std::string pairs_path;
    std::string model_in;      // pre-optimization checkpoint; also the reference
    std::string model_out;
    std::string report_out;    // per-step JSONL
    std::string summary_out;   // validation margins etc.
    std::string resume_from;   // optional checkpoint with optimizer state
    dpo::DpoConfig config;
};

inline json cmd_train(const TrainArgs& args) {
    if (!std::filesystem::exists(args.model_in)) {
        fail(errc::missing_model, "model_in not found: " + args.model_in);
    }
    const auto pairs = read_pairs_jsonl(args.pairs_path);
    if (pairs.empty()) fail(errc::empty_dataset, "no pairs in " + args.pairs_path);

    policy::LoadedCheckpoint initial = policy::load_checkpoint(args.model_in);
    const policy::ReferenceSnapshot reference(initial.model);

    policy::PolicyModel model = initial.model.clone();
    dpo::TrainState state;
    if (!args.resume_from.empty()) {
        policy::LoadedCheckpoint resumed = policy::load_checkpoint(args.resume_from);
        model = std::move(resumed.model);
        state = std::move(resumed.state);
    }

    const dpo::TrainingReport report = dpo::train(model, reference, pairs, args.config, state);
    policy::save_checkpoint(args.model_out, model, &state);

    if (!args.report_out.empty()) {
        write_jsonl(args.report_out, report.steps, [](const dpo::StepRecord& r) {
            return json{{"step", r.step}, {"loss", r.loss}, {"margin", r.margin}, {"lr", r.lr}};
        });
    }
    json val = json::array();
    for (const auto& record : report.val) {
        val.push_back(json{{"epoch", record.epoch}, {"margin", record.margin}});
    }
    json summary{{"train_pairs", report.train_pairs},
                 {"val_pairs", report.val_pairs},
                 {"steps", report.steps.size()},
                 {"final_loss", report.steps.empty() ? 0.0 : report.steps.back().loss},
                 {"val_margins", std::move(val)},
                 {"config", to_json(args.config)}};
    if (!args.summary_out.empty()) write_json_file(args.summary_out, summary);
    return summary;
}

// ---- eval ----

struct EvalArgs {
    std::string model_path;
    std::string baseline_path;
    std::string dialogues_path;
    std::string out_report;
    std::uint64_t seed = 0;
    int top_k = 30;
    double temperature = 0.8;
    std::size_t sample_slack = 6;         // text sample budget beyond the target length
    std::size_t speech_sample_slack = 6;  // speech sample budget beyond the clean length
    std::size_t max_turns = 0;     // 0 = every turn
    synth::OracleConfig oracle;
};

namespace detail {

struct SampledScores {
    std::vector<double> judge;         // of sampled text responses
    std::vector<double> speech_wer;    // of sampled speech vs the clean rendering
    std::vector<double> speech_judge;  // of the simulated transcript of sampled speech
    std::vector<double> autobleu;       // nonempty samples only
    std::vector<double> token_logprobs; // of the target continuations
};

inline SampledScores score_model(const policy::PolicyModel& model, const synth::Oracle& oracle,
                                 const std::vector<synth::SynthDialogue>& dialogues,
                                 const EvalArgs& args) {
    SampledScores out;
    std::size_t turn_uid = 0;
    for (const auto& dialogue : dialogues) {
        for (std::size_t k = 0; k < dialogue.turns.size(); ++k) {
            ++turn_uid;
            if (args.max_turns != 0 && out.judge.size() >= args.max_turns) return out;
            const synth::SynthTurn& turn = dialogue.turns[k];
            const TurnHistory history = synth::history_for_turn(dialogue, k);
            TokenSequence ctx;
            ctx.ids = flatten_history(history);

            const TokenSequence text_sample = model.sample_topk(
                ctx, args.top_k, args.temperature, turn.target_response.size() + args.sample_slack,
                derive_seed(args.seed, 0x7e, turn_uid));
            out.judge.push_back(oracle.judge(text_sample, turn.target_response));
            if (!text_sample.empty()) {
                out.autobleu.push_back(metrics::auto_bleu(text_sample));
            }

            const auto target_lp = model.log_prob(ctx, turn.target_response);
            out.token_logprobs.insert(out.token_logprobs.end(), target_lp.per_token.begin(),
                                      target_lp.per_token.end());

            TokenSequence speech_ctx = ctx;
            speech_ctx.ids.insert(speech_ctx.ids.end(), turn.target_response.ids.begin(),
                                  turn.target_response.ids.end());
            speech_ctx.ids.push_back(kSpeechModeToken);
            const TokenSequence clean = oracle.to_speech(turn.target_response);
            const TokenSequence speech_sample = model.sample_topk(
                speech_ctx, args.top_k, args.temperature, clean.size() + args.speech_sample_slack,
                derive_seed(args.seed, 0x5b, turn_uid), StreamTag::speech);
            out.speech_wer.push_back(oracle.speech_wer(turn.target_response, speech_sample));
            out.speech_judge.push_back(
                oracle.judge(oracle.transcribe(speech_sample), turn.target_response));
        }
    }
    return out;
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double total = 0.0;
    for (double x : v) total += x;
    return total / static_cast<double>(v.size());
}

}  // namespace detail

inline json cmd_eval(const EvalArgs& args) {
    for (const std::string& path : {args.model_path, args.baseline_path}) {
        if (!std::filesystem::exists(path)) {
            fail(errc::missing_model, "model checkpoint not found: " + path);
        }
    }
    const policy::PolicyModel model = policy::load_checkpoint(args.model_path).model;
    const policy::PolicyModel baseline = policy::load_checkpoint(args.baseline_path).model;
    const auto dialogues = synth::read_dialogues_jsonl(args.dialogues_path);
    const synth::Oracle oracle(args.oracle);

    const auto model_scores = detail::score_model(model, oracle, dialogues, args);
    const auto base_scores = detail::score_model(baseline, oracle, dialogues, args);

    const double win = metrics::win_rate(model_scores.judge, base_scores.judge);
    json wilcoxon;
    try {
        const auto w = metrics::wilcoxon_signed_rank(model_scores.judge, base_scores.judge);
        wilcoxon = json{{"statistic", w.statistic},
                        {"p_value", w.p_value},
                        {"n", w.n},
                        {"exact", w.exact}};
    } catch (const Error& e) {
        if (std::string(e.code()) != errc::all_zero_differences) throw;
        wilcoxon = json{{"statistic", 0.0}, {"p_value", 1.0}, {"n", 0}, {"degenerate", true}};
    }
    const double bootstrap_p = metrics::paired_bootstrap(
        model_scores.judge, base_scores.judge, 10000, derive_seed(args.seed, 0xB0075));

    json report{
        {"n", model_scores.judge.size()},
        {"seed", args.seed},
        {"judge",
         json{{"model_mean", detail::mean_of(model_scores.judge)},
              {"baseline_mean", detail::mean_of(base_scores.judge)},
              {"win_rate", win},
              {"wilcoxon", wilcoxon},
              {"bootstrap_p", bootstrap_p}}},
        {"perplexity",
         json{{"model", metrics::perplexity(model_scores.token_logprobs)},
              {"baseline", metrics::perplexity(base_scores.token_logprobs)}}},
        {"autobleu",
         json{{"model_mean", detail::mean_of(model_scores.autobleu)},
              {"baseline_mean", detail::mean_of(base_scores.autobleu)}}},
        {"speech_wer",
         json{{"model_mean", detail::mean_of(model_scores.speech_wer)},
              {"baseline_mean", detail::mean_of(base_scores.speech_wer)}}},
        {"speech_judge",
         json{{"model_mean", detail::mean_of(model_scores.speech_judge)},
              {"baseline_mean", detail::mean_of(base_scores.speech_judge)},
              {"win_rate", metrics::win_rate(model_scores.speech_judge, base_scores.speech_judge)}}},
        {"per_sample",
         json{{"judge_model", model_scores.judge},
              {"judge_baseline", base_scores.judge},
              {"wer_model", model_scores.speech_wer},
              {"wer_baseline", base_scores.speech_wer},
              {"speech_judge_model", model_scores.speech_judge},
              {"speech_judge_baseline", base_scores.speech_judge}}}};
    if (!args.out_report.empty()) write_json_file(args.out_report, report);
    return report;
}

// ---- simulate-duplex ----

struct SimulateArgs {
    std::string model_path;
    std::string dialogues_path;
    std::string out_trace;
    int block_size = 16;
    int top_k = 1;  // greedy by default for reproducible traces
    double temperature = 0.8;
    std::uint64_t seed = 0;
    std::size_t max_text_len = 25;
    std::size_t max_turns = 0;
};

inline json cmd_simulate_duplex(const SimulateArgs& args) {
    if (!std::filesystem::exists(args.model_path)) {
        fail(errc::missing_model, "model checkpoint not found: " + args.model_path);
    }
    const policy::PolicyModel model = policy::load_checkpoint(args.model_path).model;
    const auto dialogues = synth::read_dialogues_jsonl(args.dialogues_path);
    json rows = json::array();
    std::size_t turns_done = 0;
    std::size_t turn_uid = 0;
    for (const auto& dialogue : dialogues) {
        for (std::size_t k = 0; k < dialogue.turns.size(); ++k) {
            ++turn_uid;
            if (args.max_turns != 0 && turns_done >= args.max_turns) break;
            ++turns_done;
            TurnHistory history = synth::history_for_turn(dialogue, k);
            const TokenSequence user = history.prior_turns.back().user;
            history.prior_turns.pop_back();
            duplex::BlockSampling sampling;
            sampling.k = args.top_k;
            sampling.temperature = args.temperature;
            sampling.seed = derive_seed(args.seed, 0xD0, turn_uid);
            sampling.max_text_len = args.max_text_len;
            const duplex::BlockStream stream =
                duplex::simulate_stream(model, history, user, args.block_size, sampling);
            for (std::size_t b = 0; b < stream.user_blocks.size(); ++b) {
                rows.push_back(json{{"dialogue_id", dialogue.dialogue_id},
                                    {"turn_index", dialogue.turns[k].turn_index},
                                    {"b", b + 1},
                                    {"user", rlaif::to_json(stream.user_blocks[b])},
                                    {"asr", rlaif::to_json(stream.asr_blocks[b])},
                                    {"res_text", rlaif::to_json(stream.res_text_blocks[b])},
                                    {"speech", rlaif::to_json(stream.response_blocks[b])}});
            }
        }
    }
    std::ofstream out(args.out_trace, std::ios::trunc);
    if (!out) fail(errc::io_failure, "cannot write " + args.out_trace);
    for (const auto& row : rows) out << row.dump() << "\n";
    return json{{"turns", turns_done}, {"blocks", rows.size()}, {"trace_path", args.out_trace}};
}

// ---- stats ----

struct StatsArgs {
    std::string pairs_path;
    std::string out_path;
};

inline json cmd_stats(const StatsArgs& args) {
    const auto pairs = read_pairs_jsonl(args.pairs_path);
    json counts = json::object();
    for (RewardKind kind : {RewardKind::semantic, RewardKind::audio_quality,
                            RewardKind::intelligibility, RewardKind::emotion}) {
        counts[to_string(kind)] = 0;
    }
    for (const auto& pair : pairs) {
        counts[to_string(pair.reward_kind)] = counts[to_string(pair.reward_kind)].get<std::size_t>() + 1;
    }
    counts["total"] = pairs.size();
    json summary{{"pairs", counts}};
    if (!args.out_path.empty()) write_json_file(args.out_path, summary);
    return summary;
}

}  // namespace rlaif::pipeline
