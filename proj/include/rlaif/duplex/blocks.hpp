#pragma once

// Blockwise time-multiplexed decoding simulation. Generation alternates
// fixed-size user-input blocks with system-output blocks; block size is a
// token budget standing in for fixed-duration audio segments.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"
#include "rlaif/policy/model.hpp"

namespace rlaif::duplex {

struct BlockStream {
    int block_size = 16;
    std::vector<TokenSequence> user_blocks;
    std::vector<TokenSequence> response_blocks;
    std::vector<TokenSequence> asr_blocks;       // aligned when present
    std::vector<TokenSequence> res_text_blocks;  // aligned when present
};

inline std::vector<TokenSequence> partition_blocks(const TokenSequence& seq, int n_block) {
    if (n_block < 1) fail(errc::invalid_block_size, "partition_blocks: n_block must be >= 1");
    std::vector<TokenSequence> blocks;
    const auto step = static_cast<std::size_t>(n_block);
    for (std::size_t start = 0; start < seq.ids.size(); start += step) {
        TokenSequence block;
        block.stream_tag = seq.stream_tag;
        const std::size_t end = std::min(seq.ids.size(), start + step);
        block.ids.assign(seq.ids.begin() + static_cast<std::ptrdiff_t>(start),
                         seq.ids.begin() + static_cast<std::ptrdiff_t>(end));
        blocks.push_back(std::move(block));
    }
    return blocks;
}

// Flat context for response block b (1-based): serialized turn history, the
// interleaved user/response blocks before b, then the user side of block b.
// Future user blocks never appear. Blocks concatenate without delimiters so
// the construction is consistent across partition granularities.
inline TokenSequence build_block_history(const TurnHistory& history,
                                         const std::vector<TokenSequence>& user_blocks,
                                         const std::vector<TokenSequence>& response_blocks,
                                         std::size_t b) {
    if (b < 1 || b > user_blocks.size() || b - 1 > response_blocks.size()) {
        fail(errc::index_out_of_range,
             "build_block_history: block " + std::to_string(b) + " out of range");
    }
    TokenSequence ctx;
    ctx.ids = flatten_history(history);
    for (std::size_t j = 0; j + 1 < b; ++j) {
        ctx.ids.insert(ctx.ids.end(), user_blocks[j].ids.begin(), user_blocks[j].ids.end());
        ctx.ids.insert(ctx.ids.end(), response_blocks[j].ids.begin(), response_blocks[j].ids.end());
    }
    ctx.ids.insert(ctx.ids.end(), user_blocks[b - 1].ids.begin(), user_blocks[b - 1].ids.end());
    return ctx;
}

inline TokenSequence build_block_history(const TurnHistory& history, const BlockStream& stream,
                                         std::size_t b) {
    return build_block_history(history, stream.user_blocks, stream.response_blocks, b);
}

struct BlockSampling {
    int k = 1;  // k = 1 is greedy
    double temperature = 0.8;
    std::uint64_t seed = 0;
    std::size_t max_text_len = 25;  // cap on asr and text-response decodes
};

struct DecodedBlock {
    TokenSequence asr;
    TokenSequence res_text;
    TokenSequence speech;
};

// Structured three-stage decode for block b: first the ASR hypothesis of the
// user block, then the text response conditioned on it, then speech tokens
// capped at the block budget. Each stage extends one flat running context in
// which every prior block contributes user, asr, res_text and speech
// segments, text-side segments delimited by the end-of-segment token.
inline DecodedBlock scot_decode_block(const policy::PolicyModel& model, const TurnHistory& history,
                                      const BlockStream& stream, std::size_t b,
                                      const BlockSampling& sampling) {
    if (b < 1 || b > stream.user_blocks.size()) {
        fail(errc::index_out_of_range, "scot_decode_block: block " + std::to_string(b));
    }
    if (stream.asr_blocks.size() < b - 1 || stream.res_text_blocks.size() < b - 1 ||
        stream.response_blocks.size() < b - 1) {
        fail(errc::index_out_of_range, "scot_decode_block: prior block states missing");
    }
    TokenSequence ctx;
    ctx.ids = flatten_history(history);
    auto append = [&ctx](const TokenSequence& seq, bool delimit) {
        ctx.ids.insert(ctx.ids.end(), seq.ids.begin(), seq.ids.end());
        if (delimit) ctx.ids.push_back(kEndOfSegment);
    };
    for (std::size_t j = 0; j + 1 < b; ++j) {
        append(stream.user_blocks[j], true);
        append(stream.asr_blocks[j], true);
        append(stream.res_text_blocks[j], false);
        ctx.ids.push_back(kSpeechModeToken);
        append(stream.response_blocks[j], true);
    }
    append(stream.user_blocks[b - 1], true);

    DecodedBlock out;
    out.asr = model.sample_topk(ctx, sampling.k, sampling.temperature, sampling.max_text_len,
                                derive_seed(sampling.seed, b, 1), StreamTag::asr);
    append(out.asr, true);
    out.res_text = model.sample_topk(ctx, sampling.k, sampling.temperature, sampling.max_text_len,
                                     derive_seed(sampling.seed, b, 2), StreamTag::text);
    append(out.res_text, false);
    ctx.ids.push_back(kSpeechModeToken);
    out.speech = model.sample_topk(ctx, sampling.k, sampling.temperature,
                                   static_cast<std::size_t>(stream.block_size),
                                   derive_seed(sampling.seed, b, 3), StreamTag::speech);
    return out;
}

// Runs the three-stage decode over every user block, accumulating the
// stream state block by block.
inline BlockStream simulate_stream(const policy::PolicyModel& model, const TurnHistory& history,
                                   const TokenSequence& user, int block_size,
                                   const BlockSampling& sampling) {
    BlockStream stream;
    stream.block_size = block_size;
    stream.user_blocks = partition_blocks(user, block_size);
    for (std::size_t b = 1; b <= stream.user_blocks.size(); ++b) {
        DecodedBlock decoded = scot_decode_block(model, history, stream, b, sampling);
        stream.asr_blocks.push_back(std::move(decoded.asr));
        stream.res_text_blocks.push_back(std::move(decoded.res_text));
        stream.response_blocks.push_back(std::move(decoded.speech));
    }
    return stream;
}

}  // namespace rlaif::duplex
