#pragma once

// Tiny autoregressive token policy: learned token + position embeddings,
// single-head causal self-attention blocks with pre-RMS-norm and a tanh MLP,
// then a linear vocabulary projection. Small enough that preference margins
// move in minutes on one CPU core.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rlaif/autodiff/graph.hpp"
#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"
#include "rlaif/core/types.hpp"

namespace rlaif::policy {

struct PolicyConfig {
    int vocab_size = 96;
    int embed_dim = 48;
    int n_layers = 2;
    int ffn_dim = 128;
    int context_window = 192;
    double init_std = 0.08;
    double attn_recency_bias = 0.25;  // linear distance penalty on attention scores
    std::uint64_t rng_seed = 0;
};

struct LogProb {
    double total = 0.0;
    std::vector<double> per_token;
};

class PolicyModel {
public:
    PolicyModel() : PolicyModel(PolicyConfig{}) {}

    explicit PolicyModel(const PolicyConfig& cfg) : cfg_(cfg) {
        Rng rng(cfg.rng_seed);
        const auto V = static_cast<std::size_t>(cfg.vocab_size);
        const auto D = static_cast<std::size_t>(cfg.embed_dim);
        const auto F = static_cast<std::size_t>(cfg.ffn_dim);
        tok_embed_ = ad::Tensor::randn(V, D, rng, cfg.init_std);
        pos_embed_ = ad::Tensor::randn(static_cast<std::size_t>(cfg.context_window) + 1, D, rng,
                                       cfg.init_std);
        layers_.resize(static_cast<std::size_t>(cfg.n_layers));
        for (auto& layer : layers_) {
            layer.wq = ad::Tensor::randn(D, D, rng, cfg.init_std);
            layer.wk = ad::Tensor::randn(D, D, rng, cfg.init_std);
            layer.wv = ad::Tensor::randn(D, D, rng, cfg.init_std);
            layer.wo = ad::Tensor::randn(D, D, rng, cfg.init_std);
            layer.w1 = ad::Tensor::randn(D, F, rng, cfg.init_std);
            layer.b1 = ad::Tensor::zeros(1, F, true);
            layer.w2 = ad::Tensor::randn(F, D, rng, cfg.init_std);
            layer.b2 = ad::Tensor::zeros(1, D, true);
        }
        out_proj_ = ad::Tensor::randn(D, V, rng, cfg.init_std);
    }

    const PolicyConfig& config() const { return cfg_; }

    std::vector<ad::Tensor> parameters() const {
        std::vector<ad::Tensor> out{tok_embed_, pos_embed_};
        for (auto& layer : layers_) {
            out.push_back(layer.wq);
            out.push_back(layer.wk);
            out.push_back(layer.wv);
            out.push_back(layer.wo);
            out.push_back(layer.w1);
            out.push_back(layer.b1);
            out.push_back(layer.w2);
            out.push_back(layer.b2);
        }
        out.push_back(out_proj_);
        return out;
    }

    std::vector<std::pair<std::string, ad::Tensor>> named_parameters() {
        std::vector<std::pair<std::string, ad::Tensor>> out;
        out.emplace_back("tok_embed", tok_embed_);
        out.emplace_back("pos_embed", pos_embed_);
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const std::string prefix = "layer" + std::to_string(li) + ".";
            out.emplace_back(prefix + "wq", layers_[li].wq);
            out.emplace_back(prefix + "wk", layers_[li].wk);
            out.emplace_back(prefix + "wv", layers_[li].wv);
            out.emplace_back(prefix + "wo", layers_[li].wo);
            out.emplace_back(prefix + "w1", layers_[li].w1);
            out.emplace_back(prefix + "b1", layers_[li].b1);
            out.emplace_back(prefix + "w2", layers_[li].w2);
            out.emplace_back(prefix + "b2", layers_[li].b2);
        }
        out.emplace_back("w_out", out_proj_);
        return out;
    }

    ad::Tensor output_projection() { return out_proj_; }

    // Deep copy; the copy's parameters can be frozen independently.
    PolicyModel clone() const {
        PolicyModel copy(cfg_);
        auto dst = copy.parameters();
        auto src = parameters();
        for (std::size_t i = 0; i < src.size(); ++i) {
            dst[i].values() = src[i].values();
        }
        return copy;
    }

    void set_requires_grad(bool on) {
        for (auto& p : parameters()) p.node()->requires_grad = on;
    }

    // Logits for every position of [bos] + tokens. Row r predicts token r+1.
    ad::Tensor forward(const std::vector<int>& tokens) const {
        const std::size_t len = tokens.size() + 1;
        if (len > static_cast<std::size_t>(cfg_.context_window) + 1) {
            fail(errc::context_overflow, "sequence of length " + std::to_string(tokens.size()) +
                                             " exceeds context window " +
                                             std::to_string(cfg_.context_window));
        }
        std::vector<int> with_bos;
        with_bos.reserve(len);
        with_bos.push_back(kBosToken);
        for (int id : tokens) {
            if (id < 0 || id >= cfg_.vocab_size) {
                fail(errc::vocab_overflow, "token id " + std::to_string(id) + " outside vocabulary");
            }
            with_bos.push_back(id);
        }
        std::vector<int> positions(len);
        for (std::size_t i = 0; i < len; ++i) positions[i] = static_cast<int>(i);

        ad::Tensor x = ad::add(ad::gather_rows(tok_embed_, with_bos),
                               ad::gather_rows(pos_embed_, positions));
        const ad::Tensor mask = causal_mask(len, cfg_.attn_recency_bias);
        const double att_scale = 1.0 / std::sqrt(static_cast<double>(cfg_.embed_dim));
        for (const auto& layer : layers_) {
            ad::Tensor h = ad::rmsnorm(x);
            ad::Tensor q = ad::matmul(h, layer.wq);
            ad::Tensor k = ad::matmul(h, layer.wk);
            ad::Tensor v = ad::matmul(h, layer.wv);
            ad::Tensor scores = ad::add(ad::scale(ad::matmul(q, ad::transpose(k)), att_scale), mask);
            ad::Tensor att = ad::row_softmax(scores);
            x = ad::add(x, ad::matmul(ad::matmul(att, v), layer.wo));
            ad::Tensor h2 = ad::rmsnorm(x);
            ad::Tensor inner = ad::tanh(ad::add_row(ad::matmul(h2, layer.w1), layer.b1));
            x = ad::add(x, ad::add_row(ad::matmul(inner, layer.w2), layer.b2));
        }
        return ad::matmul(ad::rmsnorm(x), out_proj_);
    }

    // Graph node for sum_i log P(target[i] | context, target[<i]).
    ad::Tensor log_prob_node(const std::vector<int>& context, const std::vector<int>& target) const {
        if (target.empty()) fail(errc::empty_target, "log_prob: empty target");
        if (context.size() + target.size() > static_cast<std::size_t>(cfg_.context_window)) {
            fail(errc::context_overflow,
                 "log_prob: context+target length " + std::to_string(context.size() + target.size()) +
                     " exceeds context window " + std::to_string(cfg_.context_window));
        }
        std::vector<int> seq;
        seq.reserve(context.size() + target.size());
        seq.insert(seq.end(), context.begin(), context.end());
        seq.insert(seq.end(), target.begin(), target.end());
        ad::Tensor lp = ad::log_softmax(forward(seq));
        // with bos at row 0, target token i (0-based) is predicted by row
        // |context| + i of the logits.
        std::vector<int> row_idx(target.size()), col_idx(target.size());
        for (std::size_t i = 0; i < target.size(); ++i) {
            row_idx[i] = static_cast<int>(context.size() + i);
            col_idx[i] = target[i];
        }
        return ad::sum(ad::gather(lp, row_idx, col_idx));
    }

    // Value-level log probability with the per-token breakdown.
    LogProb log_prob(const TokenSequence& context, const TokenSequence& target) const {
        if (target.empty()) fail(errc::empty_target, "log_prob: empty target");
        if (context.size() + target.size() > static_cast<std::size_t>(cfg_.context_window)) {
            fail(errc::context_overflow, "log_prob: context+target exceeds context window");
        }
        std::vector<int> seq = context.ids;
        seq.insert(seq.end(), target.ids.begin(), target.ids.end());
        ad::Tensor lp = ad::log_softmax(forward(seq));
        LogProb out;
        out.per_token.resize(target.size());
        const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
        for (std::size_t i = 0; i < target.size(); ++i) {
            const std::size_t row = context.size() + i;
            out.per_token[i] = lp.values()[row * v + static_cast<std::size_t>(target.ids[i])];
            out.total += out.per_token[i];
        }
        return out;
    }

    // Top-k / temperature ancestral sampling. Deterministic given the seed;
    // generation stops at max_len, a sampled end-of-segment token (which is
    // not returned), or a full context window.
    TokenSequence sample_topk(const TokenSequence& context, int k, double temperature,
                              std::size_t max_len, std::uint64_t seed,
                              StreamTag out_tag = StreamTag::text) const {
        if (k < 1 || k > cfg_.vocab_size) {
            fail(errc::invalid_k, "sample_topk: k=" + std::to_string(k) + " with vocabulary " +
                                      std::to_string(cfg_.vocab_size));
        }
        if (!(temperature > 0.0)) fail(errc::invalid_k, "sample_topk: temperature must be positive");
        if (context.size() > static_cast<std::size_t>(cfg_.context_window)) {
            fail(errc::context_overflow, "sample_topk: context exceeds window");
        }
        Rng rng(seed);
        std::vector<int> seq = context.ids;
        TokenSequence out;
        out.stream_tag = out_tag;
        const std::size_t v = static_cast<std::size_t>(cfg_.vocab_size);
        while (out.ids.size() < max_len &&
               seq.size() < static_cast<std::size_t>(cfg_.context_window)) {
            ad::Tensor logits = forward(seq);
            const double* last = logits.values().data() + (logits.rows() - 1) * v;
            const int next = sample_from_logits(last, v, k, temperature, rng);
            if (next == kEndOfSegment) break;
            out.ids.push_back(next);
            seq.push_back(next);
        }
        return out;
    }

private:
    struct LayerParams {
        ad::Tensor wq, wk, wv, wo;
        ad::Tensor w1, b1, w2, b2;
    };

    // causal mask plus a linear recency bias: position r attends to c <= r
    // with an additive penalty proportional to the distance r - c
    static ad::Tensor causal_mask(std::size_t len, double recency_bias) {
        ad::Tensor mask = ad::Tensor::zeros(len, len, false);
        const double neg_inf = -std::numeric_limits<double>::infinity();
        for (std::size_t r = 0; r < len; ++r) {
            for (std::size_t c = 0; c <= r; ++c) {
                mask.values()[r * len + c] = -recency_bias * static_cast<double>(r - c);
            }
            for (std::size_t c = r + 1; c < len; ++c) {
                mask.values()[r * len + c] = neg_inf;
            }
        }
        return mask;
    }

    static int sample_from_logits(const double* logits, std::size_t v, int k, double temperature,
                                  Rng& rng) {
        // indices of the k largest logits; ties resolve toward lower ids.
        std::vector<int> order(v);
        for (std::size_t i = 0; i < v; ++i) order[i] = static_cast<int>(i);
        const auto kk = static_cast<std::size_t>(k);
        std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(kk), order.end(),
                          [logits](int a, int b) {
                              if (logits[a] != logits[b]) return logits[a] > logits[b];
                              return a < b;
                          });
        if (k == 1) return order[0];
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < kk; ++i) mx = std::max(mx, logits[order[i]] / temperature);
        std::vector<double> probs(kk);
        double total = 0.0;
        for (std::size_t i = 0; i < kk; ++i) {
            probs[i] = std::exp(logits[order[i]] / temperature - mx);
            total += probs[i];
        }
        const double draw = rng.uniform_double() * total;
        double acc = 0.0;
        for (std::size_t i = 0; i < kk; ++i) {
            acc += probs[i];
            if (draw < acc) return order[i];
        }
        return order[kk - 1];
    }

    PolicyConfig cfg_;
    ad::Tensor tok_embed_;
    ad::Tensor pos_embed_;
    std::vector<LayerParams> layers_;
    ad::Tensor out_proj_;
};

// Frozen pre-optimization copy; the anchor policy for the preference loss.
class ReferenceSnapshot {
public:
    explicit ReferenceSnapshot(const PolicyModel& model) : model_(model.clone()) {
        model_.set_requires_grad(false);
    }

    const PolicyModel& model() const { return model_; }

    LogProb log_prob(const TokenSequence& context, const TokenSequence& target) const {
        return model_.log_prob(context, target);
    }

private:
    PolicyModel model_;
};

inline ReferenceSnapshot snapshot_reference(const PolicyModel& model) {
    return ReferenceSnapshot(model);
}

}  // namespace rlaif::policy
