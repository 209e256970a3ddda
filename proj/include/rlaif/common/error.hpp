#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace rlaif {

// All library failures carry a stable machine-readable code next to the
// human-readable message. The CLI surfaces the code in its error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

namespace errc {
// core
inline constexpr const char* identical_members = "IdenticalMembers";
inline constexpr const char* missing_conditioning = "MissingConditioning";
inline constexpr const char* vocab_overflow = "VocabOverflow";
// autodiff
inline constexpr const char* shape_mismatch = "ShapeMismatch";
inline constexpr const char* non_scalar_backward = "NonScalarBackward";
inline constexpr const char* non_finite_gradient = "NonFiniteGradient";
// policy
inline constexpr const char* context_overflow = "ContextOverflow";
inline constexpr const char* empty_target = "EmptyTarget";
inline constexpr const char* invalid_k = "InvalidK";
// dpo
inline constexpr const char* variant_mismatch = "VariantMismatch";
inline constexpr const char* interleaving_mismatch = "InterleavingMismatch";
inline constexpr const char* empty_dataset = "EmptyDataset";
inline constexpr const char* diverged_loss = "DivergedLoss";
inline constexpr const char* non_finite = "NonFinite";
// pairgen
inline constexpr const char* missing_score = "MissingScore";
inline constexpr const char* missing_shared_text = "MissingSharedText";
inline constexpr const char* empty_recipe = "EmptyRecipe";
inline constexpr const char* too_small = "TooSmall";
// metrics
inline constexpr const char* empty_reference = "EmptyReference";
inline constexpr const char* empty_utterance = "EmptyUtterance";
inline constexpr const char* empty_input = "Empty";
inline constexpr const char* positive_log_prob = "PositiveLogProb";
inline constexpr const char* length_mismatch = "LengthMismatch";
inline constexpr const char* ragged_input = "RaggedInput";
inline constexpr const char* all_zero_differences = "AllZeroDifferences";
// duplex
inline constexpr const char* invalid_block_size = "InvalidBlockSize";
inline constexpr const char* index_out_of_range = "IndexOutOfRange";
// cli / io
inline constexpr const char* io_failure = "IoFailure";
inline constexpr const char* malformed_input = "MalformedInput";
inline constexpr const char* missing_model = "MissingModel";
}  // namespace errc

[[noreturn]] inline void fail(const char* code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace rlaif
