// Command-line surface: gen-synthetic, build-pairs, train, eval,
// simulate-duplex, stats. Exit code 0 on success; failures print a
// machine-readable error JSON to stderr. RLAIF_SEED overrides every seed
// flag when set.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rlaif/pipeline/commands.hpp"
#include "rlaif/policy/checkpoint.hpp"

namespace {

using rlaif::json;

std::optional<std::uint64_t> env_seed_override() {
    const char* raw = std::getenv("RLAIF_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    return std::strtoull(raw, nullptr, 10);
}

rlaif::dpo::DpoConfig load_dpo_config(const std::string& config_path) {
    if (config_path.empty()) return {};
    const json j = rlaif::read_json_file(config_path);
    if (j.contains("dpo")) return rlaif::pipeline::dpo_config_from_json(j.at("dpo"));
    return rlaif::pipeline::dpo_config_from_json(j);
}

rlaif::Thresholds load_thresholds(const std::string& config_path) {
    if (config_path.empty()) return {};
    const json j = rlaif::read_json_file(config_path);
    if (j.contains("thresholds")) return rlaif::thresholds_from_json(j.at("thresholds"));
    return {};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"multi-reward preference-optimization engine for spoken-dialogue-style policies"};
    app.require_subcommand(1);

    // gen-synthetic
    rlaif::pipeline::GenArgs gen_args;
    auto* gen = app.add_subcommand("gen-synthetic", "generate synthetic dialogues and scored candidate pools");
    gen->add_option("--out", gen_args.out_dir, "output directory")->required();
    gen->add_option("--dialogues", gen_args.gen.num_dialogues, "number of dialogues");
    gen->add_option("--turns", gen_args.gen.turns_per_dialogue, "turns per dialogue");
    gen->add_option("--candidates", gen_args.gen.candidates_per_turn, "candidates per turn");
    gen->add_option("--seed", gen_args.gen.seed, "generation seed");

    // build-pairs
    rlaif::pipeline::BuildPairsArgs bp_args;
    std::string bp_config;
    auto* build = app.add_subcommand("build-pairs", "construct preference pairs from candidate pools");
    build->add_option("--pools", bp_args.pools_path, "candidate pool JSONL")->required();
    build->add_option("--out", bp_args.out_pairs, "output pair JSONL")->required();
    build->add_option("--stats", bp_args.out_stats, "stats JSON path");
    build->add_option("--recipe", bp_args.recipe,
                      "semantic | audio_quality | intelligibility | emotion | joint-v1 | joint-v2");
    build->add_option("--seed", bp_args.seed, "builder seed");
    build->add_option("--max-pairs-per-turn", bp_args.max_pairs_per_turn, "semantic pair cap per turn");
    build->add_option("--config", bp_config, "JSON config with a thresholds block");
    build->add_option("--tau-pos", bp_args.thresholds.tau_pos, "positive judge threshold");
    build->add_option("--tau-neg", bp_args.thresholds.tau_neg, "negative judge threshold");
    build->add_option("--delta-low", bp_args.thresholds.delta_low, "positive autobleu ceiling");
    build->add_option("--delta-high", bp_args.thresholds.delta_high, "negative autobleu floor");
    build->add_option("--tau-wer", bp_args.thresholds.tau_wer, "intelligibility wer ceiling");
    build->add_option("--delta-wer", bp_args.thresholds.delta_wer, "intelligibility margin");
    build->add_option("--delta-emo", bp_args.thresholds.delta_emo, "emotion similarity margin");

    // init (auxiliary: write a fresh checkpoint so train/eval have a starting model)
    struct InitArgs {
        std::string out;
        rlaif::policy::PolicyConfig cfg;
    } init_args;
    auto* init = app.add_subcommand("init-model", "write a freshly initialized model checkpoint");
    init->add_option("--out", init_args.out, "checkpoint path")->required();
    init->add_option("--vocab-size", init_args.cfg.vocab_size, "vocabulary size");
    init->add_option("--embed-dim", init_args.cfg.embed_dim, "embedding width");
    init->add_option("--layers", init_args.cfg.n_layers, "attention blocks");
    init->add_option("--ffn-dim", init_args.cfg.ffn_dim, "feed-forward width");
    init->add_option("--context-window", init_args.cfg.context_window, "max context tokens");
    init->add_option("--recency-bias", init_args.cfg.attn_recency_bias, "attention distance penalty");
    init->add_option("--seed", init_args.cfg.rng_seed, "init seed");

    // train
    rlaif::pipeline::TrainArgs train_args;
    std::string train_config_path;
    std::string variant_flag;
    std::optional<double> lr_flag, beta_flag, grad_clip_flag;
    std::optional<bool> terminate_flag;
    std::optional<std::size_t> epochs_flag, batch_flag;
    std::optional<std::uint64_t> train_seed_flag;
    auto* train = app.add_subcommand("train", "run preference optimization over a pair file");
    train->add_option("--pairs", train_args.pairs_path, "pair JSONL")->required();
    train->add_option("--model-in", train_args.model_in, "pre-optimization checkpoint")->required();
    train->add_option("--model-out", train_args.model_out, "trained checkpoint")->required();
    train->add_option("--report", train_args.report_out, "per-step report JSONL");
    train->add_option("--summary", train_args.summary_out, "summary JSON");
    train->add_option("--resume", train_args.resume_from, "resume from this checkpoint");
    train->add_option("--config", train_config_path, "JSON config with a dpo block");
    train->add_option("--variant", variant_flag,
                      "auto | turn_level | semantic_text | audio_conditioned | blockwise");
    train->add_option("--lr", lr_flag, "peak learning rate");
    train->add_option("--beta", beta_flag, "preference margin sharpness");
    train->add_option("--epochs", epochs_flag, "training epochs");
    train->add_option("--batch-size", batch_flag, "pairs per step");
    train->add_option("--seed", train_seed_flag, "training seed");
    train->add_option("--grad-clip", grad_clip_flag, "global gradient-norm ceiling");
    train->add_option("--terminate-members", terminate_flag, "score members with a trailing end token");

    // eval
    rlaif::pipeline::EvalArgs eval_args;
    auto* eval = app.add_subcommand("eval", "score a model against a baseline on synthetic dialogues");
    eval->add_option("--model", eval_args.model_path, "model checkpoint")->required();
    eval->add_option("--baseline", eval_args.baseline_path, "baseline checkpoint")->required();
    eval->add_option("--dialogues", eval_args.dialogues_path, "dialogue JSONL")->required();
    eval->add_option("--out", eval_args.out_report, "report JSON path");
    eval->add_option("--seed", eval_args.seed, "sampling seed");
    eval->add_option("--top-k", eval_args.top_k, "sampler k");
    eval->add_option("--temperature", eval_args.temperature, "sampler temperature");
    eval->add_option("--max-turns", eval_args.max_turns, "cap on evaluated turns");
    eval->add_option("--sample-slack", eval_args.sample_slack, "text sample budget beyond target length");
    eval->add_option("--speech-slack", eval_args.speech_sample_slack, "speech sample budget beyond clean length");

    // simulate-duplex
    rlaif::pipeline::SimulateArgs sim_args;
    auto* sim = app.add_subcommand("simulate-duplex", "blockwise three-stage decoding trace");
    sim->add_option("--model", sim_args.model_path, "model checkpoint")->required();
    sim->add_option("--dialogues", sim_args.dialogues_path, "dialogue JSONL")->required();
    sim->add_option("--out", sim_args.out_trace, "block-trace JSONL")->required();
    sim->add_option("--block-size", sim_args.block_size, "tokens per block");
    sim->add_option("--top-k", sim_args.top_k, "sampler k (1 = greedy)");
    sim->add_option("--temperature", sim_args.temperature, "sampler temperature");
    sim->add_option("--seed", sim_args.seed, "sampling seed");
    sim->add_option("--max-turns", sim_args.max_turns, "cap on simulated turns");

    // stats
    rlaif::pipeline::StatsArgs stats_args;
    auto* stats = app.add_subcommand("stats", "pair counts per reward type for a pair file");
    stats->add_option("--pairs", stats_args.pairs_path, "pair JSONL")->required();
    stats->add_option("--out", stats_args.out_path, "stats JSON path");

    CLI11_PARSE(app, argc, argv);

    try {
        const auto seed_override = env_seed_override();
        json summary;
        if (gen->parsed()) {
            if (seed_override) gen_args.gen.seed = *seed_override;
            summary = rlaif::pipeline::cmd_gen_synthetic(gen_args);
        } else if (build->parsed()) {
            if (!bp_config.empty()) bp_args.thresholds = load_thresholds(bp_config);
            if (seed_override) bp_args.seed = *seed_override;
            summary = rlaif::pipeline::cmd_build_pairs(bp_args);
        } else if (init->parsed()) {
            if (seed_override) init_args.cfg.rng_seed = *seed_override;
            rlaif::policy::PolicyModel model(init_args.cfg);
            rlaif::policy::save_checkpoint(init_args.out, model);
            summary = json{{"checkpoint", init_args.out},
                           {"config", rlaif::policy::to_json(model.config())}};
        } else if (train->parsed()) {
            train_args.config = load_dpo_config(train_config_path);
            if (!variant_flag.empty()) {
                train_args.config.variant = rlaif::dpo::variant_from_string(variant_flag);
            }
            if (lr_flag) train_args.config.adam.lr = *lr_flag;
            if (beta_flag) train_args.config.beta = *beta_flag;
            if (grad_clip_flag) train_args.config.grad_clip = *grad_clip_flag;
            if (terminate_flag) train_args.config.terminate_members = *terminate_flag;
            if (epochs_flag) train_args.config.epochs = *epochs_flag;
            if (batch_flag) train_args.config.batch_size = *batch_flag;
            if (train_seed_flag) train_args.config.seed = *train_seed_flag;
            if (seed_override) train_args.config.seed = *seed_override;
            summary = rlaif::pipeline::cmd_train(train_args);
        } else if (eval->parsed()) {
            if (seed_override) eval_args.seed = *seed_override;
            summary = rlaif::pipeline::cmd_eval(eval_args);
        } else if (sim->parsed()) {
            if (seed_override) sim_args.seed = *seed_override;
            summary = rlaif::pipeline::cmd_simulate_duplex(sim_args);
        } else if (stats->parsed()) {
            summary = rlaif::pipeline::cmd_stats(stats_args);
        }
        std::cout << summary.dump(2) << "\n";
        return 0;
    } catch (const rlaif::Error& e) {
        std::cerr << json{{"error", e.code()}, {"message", e.what()}}.dump() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << json{{"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
        return 2;
    }
}
