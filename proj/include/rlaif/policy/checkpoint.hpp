#pragma once

// Versioned JSON checkpoints: model config, a shape manifest per tensor and
// the flat parameter arrays, plus optional optimizer state so an interrupted
// run can resume exactly.

#include <string>
#include <vector>

#include "rlaif/core/serialization.hpp"
#include "rlaif/dpo/train.hpp"
#include "rlaif/policy/model.hpp"

namespace rlaif::policy {

inline constexpr int kCheckpointVersion = 1;

inline json to_json(const PolicyConfig& cfg) {
    return json{{"vocab_size", cfg.vocab_size},
                {"embed_dim", cfg.embed_dim},
                {"n_layers", cfg.n_layers},
                {"ffn_dim", cfg.ffn_dim},
                {"context_window", cfg.context_window},
                {"init_std", cfg.init_std},
                {"attn_recency_bias", cfg.attn_recency_bias},
                {"rng_seed", cfg.rng_seed}};
}

inline PolicyConfig policy_config_from_json(const json& j) {
    PolicyConfig cfg;
    cfg.vocab_size = j.at("vocab_size").get<int>();
    cfg.embed_dim = j.at("embed_dim").get<int>();
    cfg.n_layers = j.at("n_layers").get<int>();
    cfg.ffn_dim = j.at("ffn_dim").get<int>();
    cfg.context_window = j.at("context_window").get<int>();
    cfg.init_std = j.at("init_std").get<double>();
    if (j.contains("attn_recency_bias")) {
        cfg.attn_recency_bias = j.at("attn_recency_bias").get<double>();
    }
    cfg.rng_seed = j.at("rng_seed").get<std::uint64_t>();
    return cfg;
}

inline void save_checkpoint(const std::string& path, PolicyModel& model,
                            const dpo::TrainState* state = nullptr) {
    json tensors = json::array();
    for (auto& [name, tensor] : model.named_parameters()) {
        tensors.push_back(json{{"name", name},
                               {"rows", tensor.rows()},
                               {"cols", tensor.cols()},
                               {"data", tensor.values()}});
    }
    json j{{"format_version", kCheckpointVersion},
           {"config", to_json(model.config())},
           {"tensors", std::move(tensors)}};
    if (state != nullptr && state->initialized()) {
        j["train_state"] = json{{"adam_step", state->adam_step},
                                {"epochs_done", state->epochs_done},
                                {"m", state->m},
                                {"v", state->v}};
    }
    write_json_file(path, j);
}

struct LoadedCheckpoint {
    PolicyModel model;
    dpo::TrainState state;  // empty when the file carries no optimizer state
};

inline LoadedCheckpoint load_checkpoint(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.contains("format_version") || j.at("format_version").get<int>() != kCheckpointVersion) {
        fail(errc::malformed_input, path + ": unsupported checkpoint version");
    }
    LoadedCheckpoint loaded{PolicyModel(policy_config_from_json(j.at("config"))), {}};
    auto params = loaded.model.named_parameters();
    const json& tensors = j.at("tensors");
    if (tensors.size() != params.size()) {
        fail(errc::malformed_input, path + ": tensor manifest size mismatch");
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const json& tj = tensors[i];
        auto& [name, tensor] = params[i];
        if (tj.at("name").get<std::string>() != name ||
            tj.at("rows").get<std::size_t>() != tensor.rows() ||
            tj.at("cols").get<std::size_t>() != tensor.cols()) {
            fail(errc::malformed_input, path + ": shape manifest mismatch at tensor " + name);
        }
        auto data = tj.at("data").get<std::vector<double>>();
        if (data.size() != tensor.size()) {
            fail(errc::malformed_input, path + ": data size mismatch at tensor " + name);
        }
        tensor.values() = std::move(data);
    }
    if (j.contains("train_state")) {
        const json& sj = j.at("train_state");
        loaded.state.adam_step = sj.at("adam_step").get<std::size_t>();
        loaded.state.epochs_done = sj.at("epochs_done").get<std::size_t>();
        loaded.state.m = sj.at("m").get<std::vector<std::vector<double>>>();
        loaded.state.v = sj.at("v").get<std::vector<std::vector<double>>>();
    }
    return loaded;
}

}  // namespace rlaif::policy
