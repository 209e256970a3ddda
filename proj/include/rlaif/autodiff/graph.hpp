#pragma once

// Dense reverse-mode automatic differentiation over row-major matrices.
// Nodes record a backward closure when any input requires gradients, so a
// forward pass over frozen parameters builds no graph at all. Double
// precision throughout.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

#include "rlaif/common/error.hpp"
#include "rlaif/common/rng.hpp"

namespace rlaif::ad {

struct Node {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;
    std::vector<double> grad;
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;  // scatters this->grad into parents

    std::size_t size() const { return rows * cols; }

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), 0.0);
    }
};

// Value handle. Copies share the underlying node.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor zeros(std::size_t rows, std::size_t cols, bool requires_grad = false) {
        auto node = std::make_shared<Node>();
        node->rows = rows;
        node->cols = cols;
        node->data.assign(rows * cols, 0.0);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor from_values(std::size_t rows, std::size_t cols, std::vector<double> values,
                              bool requires_grad = false) {
        if (values.size() != rows * cols) {
            fail(errc::shape_mismatch, "from_values: data size does not match shape");
        }
        auto node = std::make_shared<Node>();
        node->rows = rows;
        node->cols = cols;
        node->data = std::move(values);
        node->requires_grad = requires_grad;
        return Tensor(std::move(node));
    }

    static Tensor scalar(double v, bool requires_grad = false) {
        return from_values(1, 1, {v}, requires_grad);
    }

    static Tensor randn(std::size_t rows, std::size_t cols, Rng& rng, double stddev,
                        bool requires_grad = true) {
        Tensor t = zeros(rows, cols, requires_grad);
        for (double& v : t.node_->data) v = rng.normal(0.0, stddev);
        return t;
    }

    bool defined() const { return node_ != nullptr; }
    std::size_t rows() const { return node_->rows; }
    std::size_t cols() const { return node_->cols; }
    std::size_t size() const { return node_->size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const std::vector<double>& values() const { return node_->data; }
    std::vector<double>& values() { return node_->data; }
    const std::vector<double>& grad() const { return node_->grad; }
    double value() const {
        if (node_->size() != 1) fail(errc::shape_mismatch, "value(): tensor is not scalar");
        return node_->data[0];
    }

    std::shared_ptr<Node> node() const { return node_; }

    void zero_grad() { node_->grad.assign(node_->data.size(), 0.0); }

    // Reverse pass from a scalar. Topological order via iterative DFS, so
    // identical graphs replay identical accumulation orders.
    void backward() const {
        if (!node_ || node_->size() != 1) {
            fail(errc::non_scalar_backward, "backward() requires a 1x1 tensor");
        }
        std::vector<Node*> topo;
        std::unordered_set<Node*> visited;
        struct Frame {
            Node* node;
            std::size_t next_parent;
        };
        std::vector<Frame> stack;
        stack.push_back({node_.get(), 0});
        visited.insert(node_.get());
        while (!stack.empty()) {
            Frame& frame = stack.back();
            if (frame.next_parent < frame.node->parents.size()) {
                Node* parent = frame.node->parents[frame.next_parent++].get();
                if (visited.insert(parent).second) {
                    stack.push_back({parent, 0});
                }
            } else {
                topo.push_back(frame.node);
                stack.pop_back();
            }
        }
        // topo is now children-before-parents reversed; traverse from the
        // root end (last pushed is the root's subtree completion order).
        node_->ensure_grad();
        node_->grad[0] = 1.0;
        for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
            Node* n = *it;
            if (n->backward_fn) {
                n->backward_fn(*n);
            }
        }
    }

private:
    std::shared_ptr<Node> node_;
};

namespace detail {

inline std::shared_ptr<Node> make_result(std::size_t rows, std::size_t cols,
                                         std::vector<std::shared_ptr<Node>> parents) {
    auto node = std::make_shared<Node>();
    node->rows = rows;
    node->cols = cols;
    node->data.assign(rows * cols, 0.0);
    for (const auto& p : parents) {
        if (p->requires_grad) node->requires_grad = true;
    }
    if (node->requires_grad) {
        node->parents = std::move(parents);
        for (const auto& p : node->parents) {
            if (p->requires_grad) p->ensure_grad();
        }
    }
    return node;
}

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        fail(errc::shape_mismatch, std::string(op) + ": shapes (" + std::to_string(a.rows()) + "x" +
                                       std::to_string(a.cols()) + ") vs (" + std::to_string(b.rows()) +
                                       "x" + std::to_string(b.cols()) + ")");
    }
}

inline double stable_sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// softplus(-x) computed without overflow; equals -log(sigmoid(x)).
inline double neg_log_sigmoid_value(double x) {
    if (x >= 0.0) return std::log1p(std::exp(-x));
    return -x + std::log1p(std::exp(x));
}

}  // namespace detail

// Scalar counterparts used where no graph is wanted.
inline double sigmoid_value(double x) { return detail::stable_sigmoid(x); }
inline double neg_log_sigmoid_value(double x) { return detail::neg_log_sigmoid_value(x); }

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    auto node = detail::make_result(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) node->data[i] = av[i] + bv[i];
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                if (n.parents[0]->requires_grad) n.parents[0]->grad[i] += n.grad[i];
                if (n.parents[1]->requires_grad) n.parents[1]->grad[i] += n.grad[i];
            }
        };
    }
    return Tensor(node);
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    auto node = detail::make_result(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) node->data[i] = av[i] - bv[i];
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                if (n.parents[0]->requires_grad) n.parents[0]->grad[i] += n.grad[i];
                if (n.parents[1]->requires_grad) n.parents[1]->grad[i] -= n.grad[i];
            }
        };
    }
    return Tensor(node);
}

// Broadcast a 1 x cols row vector over every row of a.
inline Tensor add_row(const Tensor& a, const Tensor& row) {
    if (row.rows() != 1 || row.cols() != a.cols()) {
        fail(errc::shape_mismatch, "add_row: bias must be 1 x cols");
    }
    auto node = detail::make_result(a.rows(), a.cols(), {a.node(), row.node()});
    const auto& av = a.values();
    const auto& rv = row.values();
    const std::size_t cols = a.cols();
    for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            node->data[r * cols + c] = av[r * cols + c] + rv[c];
        }
    }
    if (node->requires_grad) {
        node->backward_fn = [cols](Node& n) {
            Node& a_p = *n.parents[0];
            Node& r_p = *n.parents[1];
            for (std::size_t r = 0; r < n.rows; ++r) {
                for (std::size_t c = 0; c < cols; ++c) {
                    const double g = n.grad[r * cols + c];
                    if (a_p.requires_grad) a_p.grad[r * cols + c] += g;
                    if (r_p.requires_grad) r_p.grad[c] += g;
                }
            }
        };
    }
    return Tensor(node);
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    auto node = detail::make_result(a.rows(), a.cols(), {a.node(), b.node()});
    const auto& av = a.values();
    const auto& bv = b.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) node->data[i] = av[i] * bv[i];
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            const auto& av = n.parents[0]->data;
            const auto& bv = n.parents[1]->data;
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                if (n.parents[0]->requires_grad) n.parents[0]->grad[i] += n.grad[i] * bv[i];
                if (n.parents[1]->requires_grad) n.parents[1]->grad[i] += n.grad[i] * av[i];
            }
        };
    }
    return Tensor(node);
}

inline Tensor scale(const Tensor& a, double c) {
    auto node = detail::make_result(a.rows(), a.cols(), {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) node->data[i] = av[i] * c;
    if (node->requires_grad) {
        node->backward_fn = [c](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                n.parents[0]->grad[i] += n.grad[i] * c;
            }
        };
    }
    return Tensor(node);
}

inline Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        fail(errc::shape_mismatch, "matmul: inner dimensions " + std::to_string(a.cols()) + " vs " +
                                       std::to_string(b.rows()));
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    auto node = detail::make_result(m, n, {a.node(), b.node()});
    {
        const double* av = a.values().data();
        const double* bv = b.values().data();
        double* out = node->data.data();
        for (std::size_t i = 0; i < m; ++i) {
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = av[i * k + p];
                if (aip == 0.0) continue;
                const double* brow = bv + p * n;
                double* orow = out + i * n;
                for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
            }
        }
    }
    if (node->requires_grad) {
        node->backward_fn = [m, k, n](Node& nd) {
            Node& a_p = *nd.parents[0];
            Node& b_p = *nd.parents[1];
            const double* g = nd.grad.data();
            if (a_p.requires_grad) {
                // dA = G * B^T
                const double* bv = b_p.data.data();
                double* ga = a_p.grad.data();
                for (std::size_t i = 0; i < m; ++i) {
                    for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        const double* grow = g + i * n;
                        const double* brow = bv + p * n;
                        for (std::size_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
                        ga[i * k + p] += acc;
                    }
                }
            }
            if (b_p.requires_grad) {
                // dB = A^T * G
                const double* av = a_p.data.data();
                double* gb = b_p.grad.data();
                for (std::size_t p = 0; p < k; ++p) {
                    for (std::size_t i = 0; i < m; ++i) {
                        const double aip = av[i * k + p];
                        if (aip == 0.0) continue;
                        const double* grow = g + i * n;
                        double* gbrow = gb + p * n;
                        for (std::size_t j = 0; j < n; ++j) gbrow[j] += aip * grow[j];
                    }
                }
            }
        };
    }
    return Tensor(node);
}

inline Tensor transpose(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    auto node = detail::make_result(n, m, {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) node->data[j * m + i] = av[i * n + j];
    }
    if (node->requires_grad) {
        node->backward_fn = [m, n](Node& nd) {
            for (std::size_t i = 0; i < m; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    nd.parents[0]->grad[i * n + j] += nd.grad[j * m + i];
                }
            }
        };
    }
    return Tensor(node);
}

inline Tensor row_softmax(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    auto node = detail::make_result(m, n, {a.node()});
    const auto& av = a.values();
    for (std::size_t r = 0; r < m; ++r) {
        const double* in = av.data() + r * n;
        double* out = node->data.data() + r * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, in[c]);
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
            out[c] = std::exp(in[c] - mx);
            total += out[c];
        }
        for (std::size_t c = 0; c < n; ++c) out[c] /= total;
    }
    if (node->requires_grad) {
        node->backward_fn = [m, n](Node& nd) {
            const double* y = nd.data.data();
            const double* g = nd.grad.data();
            double* gx = nd.parents[0]->grad.data();
            for (std::size_t r = 0; r < m; ++r) {
                double dot = 0.0;
                for (std::size_t c = 0; c < n; ++c) dot += g[r * n + c] * y[r * n + c];
                for (std::size_t c = 0; c < n; ++c) {
                    gx[r * n + c] += y[r * n + c] * (g[r * n + c] - dot);
                }
            }
        };
    }
    return Tensor(node);
}

inline Tensor log_softmax(const Tensor& a) {
    const std::size_t m = a.rows(), n = a.cols();
    auto node = detail::make_result(m, n, {a.node()});
    const auto& av = a.values();
    for (std::size_t r = 0; r < m; ++r) {
        const double* in = av.data() + r * n;
        double* out = node->data.data() + r * n;
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < n; ++c) mx = std::max(mx, in[c]);
        double total = 0.0;
        for (std::size_t c = 0; c < n; ++c) total += std::exp(in[c] - mx);
        const double lse = mx + std::log(total);
        for (std::size_t c = 0; c < n; ++c) out[c] = in[c] - lse;
    }
    if (node->requires_grad) {
        node->backward_fn = [m, n](Node& nd) {
            const double* y = nd.data.data();
            const double* g = nd.grad.data();
            double* gx = nd.parents[0]->grad.data();
            for (std::size_t r = 0; r < m; ++r) {
                double gsum = 0.0;
                for (std::size_t c = 0; c < n; ++c) gsum += g[r * n + c];
                for (std::size_t c = 0; c < n; ++c) {
                    gx[r * n + c] += g[r * n + c] - std::exp(y[r * n + c]) * gsum;
                }
            }
        };
    }
    return Tensor(node);
}

inline Tensor sigmoid(const Tensor& a) {
    auto node = detail::make_result(a.rows(), a.cols(), {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) {
        node->data[i] = detail::stable_sigmoid(av[i]);
    }
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                const double y = n.data[i];
                n.parents[0]->grad[i] += n.grad[i] * y * (1.0 - y);
            }
        };
    }
    return Tensor(node);
}

inline Tensor tanh(const Tensor& a) {
    auto node = detail::make_result(a.rows(), a.cols(), {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) node->data[i] = std::tanh(av[i]);
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                const double y = n.data[i];
                n.parents[0]->grad[i] += n.grad[i] * (1.0 - y * y);
            }
        };
    }
    return Tensor(node);
}

inline Tensor log(const Tensor& a) {
    auto node = detail::make_result(a.rows(), a.cols(), {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) node->data[i] = std::log(av[i]);
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                n.parents[0]->grad[i] += n.grad[i] / n.parents[0]->data[i];
            }
        };
    }
    return Tensor(node);
}

// -log(sigmoid(x)) elementwise, evaluated as softplus(-x) so large negative
// margins do not underflow through an explicit sigmoid.
inline Tensor neg_log_sigmoid(const Tensor& a) {
    auto node = detail::make_result(a.rows(), a.cols(), {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < node->data.size(); ++i) {
        node->data[i] = detail::neg_log_sigmoid_value(av[i]);
    }
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            for (std::size_t i = 0; i < n.grad.size(); ++i) {
                const double x = n.parents[0]->data[i];
                n.parents[0]->grad[i] += n.grad[i] * (detail::stable_sigmoid(x) - 1.0);
            }
        };
    }
    return Tensor(node);
}

inline Tensor sum(const Tensor& a) {
    auto node = detail::make_result(1, 1, {a.node()});
    double total = 0.0;
    for (double v : a.values()) total += v;
    node->data[0] = total;
    if (node->requires_grad) {
        node->backward_fn = [](Node& n) {
            const double g = n.grad[0];
            for (double& gv : n.parents[0]->grad) gv += g;
        };
    }
    return Tensor(node);
}

// Row-wise RMS normalization: y = x / sqrt(mean(x^2) + eps).
inline Tensor rmsnorm(const Tensor& a, double eps = 1e-5) {
    const std::size_t m = a.rows(), n = a.cols();
    auto node = detail::make_result(m, n, {a.node()});
    const auto& av = a.values();
    for (std::size_t r = 0; r < m; ++r) {
        const double* in = av.data() + r * n;
        double ms = 0.0;
        for (std::size_t c = 0; c < n; ++c) ms += in[c] * in[c];
        const double inv = 1.0 / std::sqrt(ms / static_cast<double>(n) + eps);
        double* out = node->data.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) out[c] = in[c] * inv;
    }
    if (node->requires_grad) {
        node->backward_fn = [m, n, eps](Node& nd) {
            const double* x = nd.parents[0]->data.data();
            const double* g = nd.grad.data();
            double* gx = nd.parents[0]->grad.data();
            for (std::size_t r = 0; r < m; ++r) {
                const double* xr = x + r * n;
                const double* gr = g + r * n;
                double ms = 0.0, dot = 0.0;
                for (std::size_t c = 0; c < n; ++c) ms += xr[c] * xr[c];
                const double denom = ms / static_cast<double>(n) + eps;
                const double inv = 1.0 / std::sqrt(denom);
                for (std::size_t c = 0; c < n; ++c) dot += gr[c] * xr[c];
                const double k = dot * inv / (denom * static_cast<double>(n));
                for (std::size_t c = 0; c < n; ++c) {
                    gx[r * n + c] += gr[c] * inv - xr[c] * k;
                }
            }
        };
    }
    return Tensor(node);
}

// Row gather: result row i is a's row indices[i]. Used for embedding lookup.
inline Tensor gather_rows(const Tensor& a, const std::vector<int>& indices) {
    const std::size_t n = a.cols();
    for (int idx : indices) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= a.rows()) {
            fail(errc::shape_mismatch, "gather_rows: index " + std::to_string(idx) + " out of range");
        }
    }
    auto node = detail::make_result(indices.size(), n, {a.node()});
    const auto& av = a.values();
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const double* src = av.data() + static_cast<std::size_t>(indices[r]) * n;
        double* dst = node->data.data() + r * n;
        for (std::size_t c = 0; c < n; ++c) dst[c] = src[c];
    }
    if (node->requires_grad) {
        node->backward_fn = [indices, n](Node& nd) {
            double* gp = nd.parents[0]->grad.data();
            for (std::size_t r = 0; r < indices.size(); ++r) {
                const double* g = nd.grad.data() + r * n;
                double* dst = gp + static_cast<std::size_t>(indices[r]) * n;
                for (std::size_t c = 0; c < n; ++c) dst[c] += g[c];
            }
        };
    }
    return Tensor(node);
}

// Element gather: result is k x 1 with entries a[rows[i], cols[i]].
inline Tensor gather(const Tensor& a, const std::vector<int>& row_idx,
                     const std::vector<int>& col_idx) {
    if (row_idx.size() != col_idx.size()) {
        fail(errc::shape_mismatch, "gather: index vectors differ in length");
    }
    const std::size_t n = a.cols();
    for (std::size_t i = 0; i < row_idx.size(); ++i) {
        if (row_idx[i] < 0 || static_cast<std::size_t>(row_idx[i]) >= a.rows() || col_idx[i] < 0 ||
            static_cast<std::size_t>(col_idx[i]) >= n) {
            fail(errc::shape_mismatch, "gather: index out of range");
        }
    }
    auto node = detail::make_result(row_idx.size(), 1, {a.node()});
    const auto& av = a.values();
    for (std::size_t i = 0; i < row_idx.size(); ++i) {
        node->data[i] = av[static_cast<std::size_t>(row_idx[i]) * n +
                           static_cast<std::size_t>(col_idx[i])];
    }
    if (node->requires_grad) {
        node->backward_fn = [row_idx, col_idx, n](Node& nd) {
            double* gp = nd.parents[0]->grad.data();
            for (std::size_t i = 0; i < row_idx.size(); ++i) {
                gp[static_cast<std::size_t>(row_idx[i]) * n +
                   static_cast<std::size_t>(col_idx[i])] += nd.grad[i];
            }
        };
    }
    return Tensor(node);
}

}  // namespace rlaif::ad
