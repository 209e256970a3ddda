#pragma once

// DPO training loop: shuffled mini-batches, mean pair loss per step,
// global-norm gradient clipping and AdamW under a linear-warmup /
// cosine-decay learning-rate schedule. Single-threaded and fully
// deterministic given (seed, data, config).

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rlaif/autodiff/graph.hpp"
#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"
#include "rlaif/dpo/objective.hpp"
#include "rlaif/pairgen/dataset.hpp"
#include "rlaif/policy/model.hpp"

namespace rlaif::dpo {

struct AdamConfig {
    double lr = 1e-3;  // toy-scale default; the big-model preset is far lower
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 3e-7;
};

struct ScheduleConfig {
    std::size_t total_steps = 0;  // 0 = epochs * steps_per_epoch, fixed at start
    std::size_t warmup_steps = 10;
    double min_lr = 0.0;
    double max_lr = 0.0;  // 0 = use the optimizer lr as the peak
};

struct DpoConfig {
    double beta = 0.1;
    Variant variant = Variant::auto_select;
    AdamConfig adam;
    ScheduleConfig schedule;
    double grad_clip = 100.0;
    std::size_t epochs = 2;
    std::size_t batch_size = 16;
    std::uint64_t seed = 0;
    double val_ratio = 0.99;  // train fraction of the train/validation split
    int block_size = 16;      // blockwise variant only
    bool terminate_members = false;  // include the end-of-segment terminator in member scoring

    void validate() const {
        if (!(beta > 0.0)) fail(errc::malformed_input, "dpo config: beta must be positive");
        if (epochs == 0) fail(errc::malformed_input, "dpo config: epochs must be >= 1");
        if (batch_size == 0) fail(errc::malformed_input, "dpo config: batch_size must be >= 1");
        if (schedule.total_steps != 0 && schedule.warmup_steps > schedule.total_steps) {
            fail(errc::malformed_input, "dpo config: warmup_steps exceeds total_steps");
        }
    }
};

// Optimizer schedule used for the full-scale model in the source experiments;
// kept as a named preset next to the toy defaults.
inline DpoConfig large_model_preset() {
    DpoConfig cfg;
    cfg.adam.lr = 6e-7;
    cfg.adam.beta1 = 0.9;
    cfg.adam.beta2 = 0.95;
    cfg.adam.eps = 1e-8;
    cfg.adam.weight_decay = 3e-7;
    cfg.grad_clip = 100.0;
    cfg.epochs = 2;
    cfg.schedule.total_steps = 9000;
    cfg.schedule.warmup_steps = 100;
    cfg.schedule.min_lr = 0.0;
    cfg.schedule.max_lr = 0.0;
    return cfg;
}

inline double learning_rate_at(const ScheduleConfig& schedule, double peak_lr, std::size_t step) {
    const double max_lr = schedule.max_lr > 0.0 ? schedule.max_lr : peak_lr;
    if (schedule.warmup_steps > 0 && step < schedule.warmup_steps) {
        return max_lr * static_cast<double>(step + 1) / static_cast<double>(schedule.warmup_steps);
    }
    if (schedule.total_steps <= schedule.warmup_steps) return max_lr;
    const double span = static_cast<double>(schedule.total_steps - schedule.warmup_steps);
    const double progress =
        std::min(1.0, static_cast<double>(step - schedule.warmup_steps) / span);
    return schedule.min_lr + 0.5 * (max_lr - schedule.min_lr) *
                                 (1.0 + std::cos(3.14159265358979323846 * progress));
}

struct StepRecord {
    std::size_t step = 0;
    double loss = 0.0;
    double margin = 0.0;
    double lr = 0.0;
};

struct ValRecord {
    std::size_t epoch = 0;  // 0 = before any update
    double margin = 0.0;
};

struct TrainingReport {
    std::vector<StepRecord> steps;
    std::vector<ValRecord> val;
    std::size_t train_pairs = 0;
    std::size_t val_pairs = 0;
};

// Adam moments plus the step counter; persisting this is what makes a
// half-run plus resumed half-run reproduce the full run exactly.
struct TrainState {
    std::size_t adam_step = 0;
    std::size_t epochs_done = 0;
    std::vector<std::vector<double>> m;
    std::vector<std::vector<double>> v;

    bool initialized() const { return !m.empty(); }
};

namespace detail {

inline double mean_margin(const policy::PolicyModel& model,
                          const policy::ReferenceSnapshot& reference,
                          const std::vector<PreferencePair>& pairs, const DpoConfig& cfg) {
    if (pairs.empty()) return 0.0;
    double total = 0.0;
    for (const auto& pair : pairs) {
        total += dpo_loss(model, reference, pair, cfg.beta, cfg.variant, cfg.block_size,
                          cfg.terminate_members)
                     .margin;
    }
    return total / static_cast<double>(pairs.size());
}

}  // namespace detail

inline TrainingReport train(policy::PolicyModel& model, const policy::ReferenceSnapshot& reference,
                            const std::vector<PreferencePair>& dataset, const DpoConfig& config,
                            TrainState& state) {
    config.validate();
    if (dataset.empty()) fail(errc::empty_dataset, "train: empty dataset");

    std::vector<PreferencePair> train_set, val_set;
    if (dataset.size() >= 2) {
        auto split = pairgen::split_train_val(dataset, config.val_ratio, config.seed);
        train_set = std::move(split.train);
        val_set = std::move(split.val);
    } else {
        train_set = dataset;
    }

    auto params = model.parameters();
    if (!state.initialized()) {
        state.m.resize(params.size());
        state.v.resize(params.size());
        for (std::size_t i = 0; i < params.size(); ++i) {
            state.m[i].assign(params[i].size(), 0.0);
            state.v[i].assign(params[i].size(), 0.0);
        }
    }

    const std::size_t steps_per_epoch =
        (train_set.size() + config.batch_size - 1) / config.batch_size;
    ScheduleConfig schedule = config.schedule;
    if (schedule.total_steps == 0) schedule.total_steps = config.epochs * steps_per_epoch;

    TrainingReport report;
    report.train_pairs = train_set.size();
    report.val_pairs = val_set.size();
    report.val.push_back({state.epochs_done,
                          detail::mean_margin(model, reference, val_set, config)});

    for (std::size_t epoch = state.epochs_done; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(train_set.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        Rng shuffle_rng(derive_seed(config.seed, 0x5f, epoch));
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            for (auto& p : params) p.zero_grad();

            ad::Tensor batch_loss = ad::Tensor::scalar(0.0);
            double margin_total = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                double margin = 0.0;
                batch_loss = ad::add(batch_loss,
                                     dpo_loss_node(model, reference, train_set[order[i]],
                                                   config.beta, config.variant, config.block_size,
                                                   config.terminate_members, &margin));
                margin_total += margin;
            }
            const double inv_batch = 1.0 / static_cast<double>(end - start);
            batch_loss = ad::scale(batch_loss, inv_batch);
            const double loss_value = batch_loss.value();
            if (!std::isfinite(loss_value)) fail(errc::diverged_loss, "train: non-finite loss");
            batch_loss.backward();

            double grad_sq = 0.0;
            for (auto& p : params) {
                for (double g : p.grad()) grad_sq += g * g;
            }
            const double grad_norm = std::sqrt(grad_sq);
            const double clip_scale =
                (config.grad_clip > 0.0 && grad_norm > config.grad_clip)
                    ? config.grad_clip / grad_norm
                    : 1.0;

            const double lr = learning_rate_at(schedule, config.adam.lr, state.adam_step);
            ++state.adam_step;
            const double t = static_cast<double>(state.adam_step);
            const double bc1 = 1.0 - std::pow(config.adam.beta1, t);
            const double bc2 = 1.0 - std::pow(config.adam.beta2, t);
            for (std::size_t pi = 0; pi < params.size(); ++pi) {
                auto& values = params[pi].values();
                const auto& grads = params[pi].grad();
                auto& m = state.m[pi];
                auto& v = state.v[pi];
                for (std::size_t j = 0; j < values.size(); ++j) {
                    const double g = grads[j] * clip_scale;
                    m[j] = config.adam.beta1 * m[j] + (1.0 - config.adam.beta1) * g;
                    v[j] = config.adam.beta2 * v[j] + (1.0 - config.adam.beta2) * g * g;
                    const double update = (m[j] / bc1) / (std::sqrt(v[j] / bc2) + config.adam.eps);
                    values[j] -= lr * (update + config.adam.weight_decay * values[j]);
                }
            }
            report.steps.push_back(
                {state.adam_step, loss_value, margin_total * inv_batch, lr});
        }
        state.epochs_done = epoch + 1;
        report.val.push_back({state.epochs_done,
                              detail::mean_margin(model, reference, val_set, config)});
    }
    return report;
}

inline TrainingReport train(policy::PolicyModel& model, const policy::ReferenceSnapshot& reference,
                            const std::vector<PreferencePair>& dataset, const DpoConfig& config) {
    TrainState state;
    return train(model, reference, dataset, config, state);
}

}  // namespace rlaif::dpo
