#pragma once

// Multi-reward dataset assembly: the reward mixing rule is plain dataset
// concatenation plus a seeded global shuffle, so each reward contributes in
// proportion to its pair count.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"

namespace rlaif::pairgen {

struct DpoDataset {
    std::vector<PreferencePair> pairs;
    std::map<std::string, std::size_t> counts;  // per reward kind, plus "total"
};

// Recipes: any single reward name, "joint-v1" (semantic + audio_quality +
// intelligibility) or "joint-v2" (joint-v1 + emotion).
inline std::vector<RewardKind> recipe_kinds(const std::string& recipe) {
    if (recipe == "joint-v1") {
        return {RewardKind::semantic, RewardKind::audio_quality, RewardKind::intelligibility};
    }
    if (recipe == "joint-v2") {
        return {RewardKind::semantic, RewardKind::audio_quality, RewardKind::intelligibility,
                RewardKind::emotion};
    }
    if (recipe == "semantic" || recipe == "audio_quality" || recipe == "intelligibility" ||
        recipe == "emotion") {
        return {reward_kind_from_string(recipe)};
    }
    fail(errc::empty_recipe, "unknown recipe: " + recipe);
}

inline DpoDataset assemble_multireward(
    const std::map<RewardKind, std::vector<PreferencePair>>& pair_sets, const std::string& recipe,
    std::uint64_t seed = 0) {
    DpoDataset dataset;
    for (RewardKind kind : recipe_kinds(recipe)) {
        const auto it = pair_sets.find(kind);
        const std::size_t count = it == pair_sets.end() ? 0 : it->second.size();
        dataset.counts[to_string(kind)] = count;
        if (it != pair_sets.end()) {
            dataset.pairs.insert(dataset.pairs.end(), it->second.begin(), it->second.end());
        }
    }
    if (dataset.pairs.empty()) {
        fail(errc::empty_recipe, "recipe '" + recipe + "' selected no pairs");
    }
    dataset.counts["total"] = dataset.pairs.size();
    Rng rng(seed);
    rng.shuffle(dataset.pairs);
    return dataset;
}

struct TrainValSplit {
    std::vector<PreferencePair> train;
    std::vector<PreferencePair> val;
};

// Disjoint, exhaustive, seeded split. The validation side always keeps at
// least one pair, as does the training side.
inline TrainValSplit split_train_val(const std::vector<PreferencePair>& dataset, double ratio = 0.99,
                                     std::uint64_t seed = 0) {
    const std::size_t n = dataset.size();
    if (n < 2) fail(errc::too_small, "split_train_val: need at least 2 pairs");
    std::size_t train_size = static_cast<std::size_t>(ratio * static_cast<double>(n));
    train_size = std::min(std::max<std::size_t>(train_size, 1), n - 1);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    TrainValSplit split;
    split.train.reserve(train_size);
    split.val.reserve(n - train_size);
    for (std::size_t i = 0; i < n; ++i) {
        (i < train_size ? split.train : split.val).push_back(dataset[order[i]]);
    }
    return split;
}

}  // namespace rlaif::pairgen
