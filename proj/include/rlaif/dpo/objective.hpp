#pragma once

// Preference-optimization objective. The loss contrasts the policy's
// positive/negative log-probability gap against the same gap under a frozen
// reference:
//
//     loss = -log sigmoid(beta * (delta_policy - delta_reference))
//
// Variants differ only in how the members are conditioned: turn-level pairs
// condition on the serialized turn history, semantic pairs score the text
// response under the same context, audio-conditioned pairs additionally fix
// the shared text response, and blockwise pairs aggregate per-block
// conditionals over the interleaved duplex context.

#include <cmath>
#include <string>
#include <vector>

#include "rlaif/autodiff/graph.hpp"
#include "rlaif/common/error.hpp"
#include "rlaif/core/types.hpp"
#include "rlaif/duplex/blocks.hpp"
#include "rlaif/policy/model.hpp"

namespace rlaif::dpo {

enum class Variant { turn_level, semantic_text, audio_conditioned, blockwise, auto_select };

inline const char* to_string(Variant v) {
    switch (v) {
        case Variant::turn_level: return "turn_level";
        case Variant::semantic_text: return "semantic_text";
        case Variant::audio_conditioned: return "audio_conditioned";
        case Variant::blockwise: return "blockwise";
        case Variant::auto_select: return "auto";
    }
    return "turn_level";
}

inline Variant variant_from_string(const std::string& s) {
    if (s == "turn_level") return Variant::turn_level;
    if (s == "semantic_text") return Variant::semantic_text;
    if (s == "audio_conditioned") return Variant::audio_conditioned;
    if (s == "blockwise") return Variant::blockwise;
    if (s == "auto") return Variant::auto_select;
    fail(errc::malformed_input, "unknown dpo variant: " + s);
}

// Joint-reward datasets mix pairs whose conditioning rules differ, so the
// per-pair rule is derived from the pair itself: conditioned members use the
// audio route, everything else the plain turn-level route.
inline Variant resolve_variant(Variant configured, const PreferencePair& pair) {
    if (configured != Variant::auto_select) return configured;
    return pair.conditioning_text ? Variant::audio_conditioned : Variant::turn_level;
}

namespace detail {

inline std::vector<int> variant_context(const PreferencePair& pair, Variant variant) {
    std::vector<int> ctx = flatten_history(pair.history);
    if (variant == Variant::audio_conditioned) {
        if (!pair.conditioning_text) {
            fail(errc::variant_mismatch, "audio_conditioned pair lacks conditioning_text");
        }
        ctx.insert(ctx.end(), pair.conditioning_text->ids.begin(), pair.conditioning_text->ids.end());
        ctx.push_back(kSpeechModeToken);
    }
    return ctx;
}

// Blockwise pairs reuse the stored turn history: by convention its final
// turn carries the current user utterance, which becomes the user block
// stream; the member under scoring becomes the response block stream.
struct BlockwiseSetup {
    TurnHistory base_history;
    std::vector<TokenSequence> user_blocks;
};

inline BlockwiseSetup blockwise_setup(const PreferencePair& pair, int block_size) {
    if (pair.history.prior_turns.empty()) {
        fail(errc::variant_mismatch, "blockwise pair needs the current user turn in its history");
    }
    BlockwiseSetup setup;
    setup.base_history = pair.history;
    const DialogueTurn current = setup.base_history.prior_turns.back();
    setup.base_history.prior_turns.pop_back();
    setup.user_blocks = duplex::partition_blocks(current.user, block_size);
    return setup;
}

// Pad or trim the user block list to exactly n entries, preserving tags.
inline std::vector<TokenSequence> align_user_blocks(std::vector<TokenSequence> blocks,
                                                    std::size_t n, StreamTag tag) {
    blocks.resize(n, TokenSequence{{}, tag});
    return blocks;
}

}  // namespace detail

// Sum over blocks of log pi(response_block_b | interleaved context up to b).
inline double blockwise_logprob(const policy::PolicyModel& model, const TurnHistory& history,
                                const std::vector<TokenSequence>& user_blocks,
                                const std::vector<TokenSequence>& response_blocks) {
    if (user_blocks.size() != response_blocks.size()) {
        fail(errc::interleaving_mismatch,
             "blockwise_logprob: " + std::to_string(user_blocks.size()) + " user vs " +
                 std::to_string(response_blocks.size()) + " response blocks");
    }
    double total = 0.0;
    for (std::size_t b = 1; b <= response_blocks.size(); ++b) {
        if (response_blocks[b - 1].empty()) continue;
        const TokenSequence ctx =
            duplex::build_block_history(history, user_blocks, response_blocks, b);
        total += model.log_prob(ctx, response_blocks[b - 1]).total;
    }
    return total;
}

// Graph-building counterpart used by training.
inline ad::Tensor blockwise_logprob_node(const policy::PolicyModel& model,
                                         const TurnHistory& history,
                                         const std::vector<TokenSequence>& user_blocks,
                                         const std::vector<TokenSequence>& response_blocks) {
    if (user_blocks.size() != response_blocks.size()) {
        fail(errc::interleaving_mismatch, "blockwise_logprob: interleaving lengths differ");
    }
    ad::Tensor total = ad::Tensor::scalar(0.0);
    for (std::size_t b = 1; b <= response_blocks.size(); ++b) {
        if (response_blocks[b - 1].empty()) continue;
        const TokenSequence ctx =
            duplex::build_block_history(history, user_blocks, response_blocks, b);
        total = ad::add(total, model.log_prob_node(ctx.ids, response_blocks[b - 1].ids));
    }
    return total;
}

namespace detail {

inline ad::Tensor member_logprob_node(const policy::PolicyModel& model, const PreferencePair& pair,
                                      const TokenSequence& member, Variant variant, int block_size,
                                      bool terminate_members) {
    if (variant == Variant::blockwise) {
        BlockwiseSetup setup = blockwise_setup(pair, block_size);
        std::vector<TokenSequence> response_blocks = duplex::partition_blocks(member, block_size);
        std::vector<TokenSequence> user_blocks =
            align_user_blocks(setup.user_blocks, response_blocks.size(), member.stream_tag);
        return blockwise_logprob_node(model, setup.base_history, user_blocks, response_blocks);
    }
    if (variant == Variant::semantic_text && member.stream_tag == StreamTag::speech) {
        fail(errc::variant_mismatch, "semantic_text variant scores text members, got speech");
    }
    // with terminate_members set, an utterance-level member is scored as a
    // complete response whose sequence probability includes the terminating
    // end-of-segment token; blockwise members are stream partitions and stay
    // unterminated either way
    std::vector<int> target = member.ids;
    if (terminate_members) target.push_back(kEndOfSegment);
    return model.log_prob_node(variant_context(pair, variant), target);
}

}  // namespace detail

// delta = log pi(positive | context) - log pi(negative | context) under the
// conditioning rule of the chosen variant.
inline ad::Tensor delta_node(const policy::PolicyModel& model, const PreferencePair& pair,
                             Variant variant, int block_size = 16, bool terminate_members = false) {
    const Variant resolved = resolve_variant(variant, pair);
    return ad::sub(
        detail::member_logprob_node(model, pair, pair.positive, resolved, block_size,
                                    terminate_members),
        detail::member_logprob_node(model, pair, pair.negative, resolved, block_size,
                                    terminate_members));
}

inline double delta_theta(const policy::PolicyModel& model, const PreferencePair& pair,
                          Variant variant = Variant::turn_level, int block_size = 16,
                          bool terminate_members = false) {
    return delta_node(model, pair, variant, block_size, terminate_members).value();
}

struct DpoLossValue {
    double loss = 0.0;
    double margin = 0.0;
};

// Scalar-level loss evaluation; the stable softplus form never underflows.
inline DpoLossValue dpo_loss(const policy::PolicyModel& model,
                             const policy::ReferenceSnapshot& reference, const PreferencePair& pair,
                             double beta, Variant variant = Variant::turn_level,
                             int block_size = 16, bool terminate_members = false) {
    if (!(beta > 0.0)) fail(errc::malformed_input, "dpo_loss: beta must be positive");
    const double d_theta = delta_theta(model, pair, variant, block_size, terminate_members);
    const double d_ref = delta_theta(reference.model(), pair, variant, block_size, terminate_members);
    DpoLossValue out;
    out.margin = beta * (d_theta - d_ref);
    out.loss = ad::neg_log_sigmoid_value(out.margin);
    if (!std::isfinite(out.loss)) fail(errc::non_finite, "dpo_loss: non-finite loss");
    return out;
}

// Graph route for training: the reference delta enters as a constant.
inline ad::Tensor dpo_loss_node(const policy::PolicyModel& model,
                                const policy::ReferenceSnapshot& reference,
                                const PreferencePair& pair, double beta, Variant variant,
                                int block_size, bool terminate_members = false,
                                double* margin_out = nullptr) {
    const double d_ref = delta_theta(reference.model(), pair, variant, block_size, terminate_members);
    ad::Tensor margin = ad::scale(
        ad::sub(delta_node(model, pair, variant, block_size, terminate_members),
                ad::Tensor::scalar(d_ref)),
        beta);
    if (margin_out != nullptr) *margin_out = margin.value();
    return ad::neg_log_sigmoid(margin);
}

}  // namespace rlaif::dpo
