#pragma once

// Central finite-difference check of analytic gradients. The numeric side
// only re-evaluates the loss value, so it stays independent of the backward
// pass it is validating.

#include <cmath>
#include <functional>
#include <vector>

#include "rlaif/autodiff/graph.hpp"
#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"

namespace rlaif::ad {

struct GradientCheckOptions {
    double h = 1e-5;
    std::size_t max_coordinates = 0;  // 0 = check every coordinate
    std::uint64_t seed = 0;
};

// Returns max over sampled coordinates of |analytic - numeric| / max(1, |numeric|).
inline double gradient_check(const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                             const GradientCheckOptions& opts = {}) {
    for (auto& p : params) p.zero_grad();
    Tensor loss = loss_fn();
    loss.backward();

    std::vector<std::pair<std::size_t, std::size_t>> coords;  // (param index, flat offset)
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        for (std::size_t i = 0; i < params[pi].size(); ++i) coords.emplace_back(pi, i);
    }
    if (opts.max_coordinates > 0 && coords.size() > opts.max_coordinates) {
        Rng rng(opts.seed);
        rng.shuffle(coords);
        coords.resize(opts.max_coordinates);
    }

    double worst = 0.0;
    for (const auto& [pi, i] : coords) {
        const double analytic = params[pi].grad()[i];
        if (!std::isfinite(analytic)) {
            fail(errc::non_finite_gradient, "analytic gradient is not finite");
        }
        double& slot = params[pi].values()[i];
        const double saved = slot;
        slot = saved + opts.h;
        const double up = loss_fn().value();
        slot = saved - opts.h;
        const double down = loss_fn().value();
        slot = saved;
        const double numeric = (up - down) / (2.0 * opts.h);
        if (!std::isfinite(numeric)) {
            fail(errc::non_finite_gradient, "numeric gradient is not finite");
        }
        const double rel = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace rlaif::ad
