#pragma once

// Paired significance tests: Wilcoxon signed-rank (exact enumeration for
// small n, normal approximation with tie and continuity corrections above)
// and paired bootstrap resampling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"

namespace rlaif::metrics {

enum class Tail { two_sided, greater, less };

struct WilcoxonResult {
    double statistic = 0.0;  // W+, the positive-rank sum
    double p_value = 1.0;
    std::size_t n = 0;  // nonzero differences used
    bool exact = false;
};

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

namespace detail {

// Average ranks of |d|, scaled by 2 so ties stay integral.
inline std::vector<long long> doubled_ranks(const std::vector<double>& abs_diffs) {
    const std::size_t n = abs_diffs.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return abs_diffs[a] < abs_diffs[b]; });
    std::vector<long long> ranks2(n, 0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_diffs[order[j + 1]] == abs_diffs[order[i]]) ++j;
        const long long sum2 = static_cast<long long>(i + 1 + j + 1);  // 2 * average rank
        for (std::size_t t = i; t <= j; ++t) ranks2[order[t]] = sum2;
        i = j + 1;
    }
    return ranks2;
}

}  // namespace detail

inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b,
                                           Tail tail = Tail::two_sided,
                                           std::size_t exact_limit = 12) {
    if (a.size() != b.size() || a.empty()) {
        fail(errc::length_mismatch, "wilcoxon: samples must have equal nonzero length");
    }
    std::vector<double> abs_diffs;
    std::vector<bool> positive;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d == 0.0) continue;
        abs_diffs.push_back(std::abs(d));
        positive.push_back(d > 0.0);
    }
    const std::size_t n = abs_diffs.size();
    if (n == 0) fail(errc::all_zero_differences, "wilcoxon: all differences are zero");

    const std::vector<long long> ranks2 = detail::doubled_ranks(abs_diffs);
    long long w_plus2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (positive[i]) w_plus2 += ranks2[i];
    }

    WilcoxonResult result;
    result.statistic = static_cast<double>(w_plus2) / 2.0;
    result.n = n;

    if (n <= exact_limit) {
        // enumerate all 2^n sign patterns over the observed rank multiset.
        result.exact = true;
        // all quantities in doubled-rank units so tie-averaged ranks stay
        // integral; 2*mu = n(n+1)/2 doubled = n(n+1).
        const long long mu2_times2 = static_cast<long long>(n) * static_cast<long long>(n + 1);
        const std::uint64_t patterns = std::uint64_t{1} << n;
        const long long obs_dev = std::llabs(2 * w_plus2 - mu2_times2);
        std::uint64_t count = 0;
        for (std::uint64_t mask = 0; mask < patterns; ++mask) {
            long long w2 = 0;
            std::uint64_t m = mask;
            while (m != 0) {
                const unsigned bit = static_cast<unsigned>(__builtin_ctzll(m));
                w2 += ranks2[bit];
                m &= m - 1;
            }
            switch (tail) {
                case Tail::two_sided:
                    if (std::llabs(2 * w2 - mu2_times2) >= obs_dev) ++count;
                    break;
                case Tail::greater:
                    if (w2 >= w_plus2) ++count;
                    break;
                case Tail::less:
                    if (w2 <= w_plus2) ++count;
                    break;
            }
        }
        result.p_value = static_cast<double>(count) / static_cast<double>(patterns);
        return result;
    }

    // normal approximation with tie and continuity corrections.
    const double w = result.statistic;
    const double nn = static_cast<double>(n);
    const double mu = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    {
        std::vector<long long> sorted = ranks2;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < sorted.size()) {
            std::size_t j = i;
            while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
            const double t = static_cast<double>(j - i + 1);
            var -= (t * t * t - t) / 48.0;
            i = j + 1;
        }
    }
    const double sigma = std::sqrt(var);
    double p = 1.0;
    switch (tail) {
        case Tail::two_sided: {
            const double dev = std::max(0.0, std::abs(w - mu) - 0.5);
            p = 2.0 * (1.0 - normal_cdf(dev / sigma));
            break;
        }
        case Tail::greater:
            p = 1.0 - normal_cdf((w - mu - 0.5) / sigma);
            break;
        case Tail::less:
            p = normal_cdf((w - mu + 0.5) / sigma);
            break;
    }
    result.p_value = std::min(1.0, std::max(0.0, p));
    return result;
}

// One-sided paired bootstrap, testing whether a outperforms b: resample the
// paired index multiset B times and report the fraction of resamples where
// mean(a) - mean(b) fails to exceed zero.
inline double paired_bootstrap(const std::vector<double>& a, const std::vector<double>& b,
                               std::size_t num_resamples = 10000, std::uint64_t seed = 0) {
    if (a.size() != b.size() || a.size() < 2) {
        fail(errc::length_mismatch, "paired_bootstrap: samples must have equal length >= 2");
    }
    std::vector<double> diffs(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) diffs[i] = a[i] - b[i];
    Rng rng(seed);
    std::size_t at_or_below_zero = 0;
    for (std::size_t r = 0; r < num_resamples; ++r) {
        double total = 0.0;
        for (std::size_t i = 0; i < diffs.size(); ++i) {
            total += diffs[rng.uniform_int(diffs.size())];
        }
        if (total <= 0.0) ++at_or_below_zero;
    }
    return static_cast<double>(at_or_below_zero) / static_cast<double>(num_resamples);
}

}  // namespace rlaif::metrics
