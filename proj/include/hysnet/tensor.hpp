#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "hysnet/errors.hpp"

namespace hysnet {

enum class Dtype { f32, f64 };

inline const char* dtype_name(Dtype d) { return d == Dtype::f32 ? "f32" : "f64"; }

namespace detail {
template <typename T>
struct dtype_of;
template <>
struct dtype_of<float> {
    static constexpr Dtype value = Dtype::f32;
};
template <>
struct dtype_of<double> {
    static constexpr Dtype value = Dtype::f64;
};
}  // namespace detail

using Dims = std::vector<std::size_t>;

inline std::size_t numel_of(const Dims& dims) {
    std::size_t n = 1;
    for (std::size_t d : dims) n *= d;
    return n;  // rank-0 holds a single scalar
}

inline std::string dims_str(const Dims& dims) {
    std::string s = "[";
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(dims[i]);
    }
    return s + "]";
}

inline Dims strides_of(const Dims& dims) {
    Dims st(dims.size(), 1);
    for (std::size_t i = dims.size(); i-- > 1;) st[i - 1] = st[i] * dims[i];
    return st;
}

// One value in the dynamically built graph. Parent links plus a backward
// closure form the tape; creation order is a topological order by
// construction because an op's inputs exist before its output.
template <typename T>
struct Node {
    Dims dims;
    std::vector<T> value;
    std::vector<T> grad;  // allocated on first accumulation, same length as value
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node<T>>> parents;
    std::function<void()> backward_fn;
    const char* op = "leaf";

    void ensure_grad() {
        if (grad.empty()) grad.assign(value.size(), T(0));
    }
};

// Value-semantics handle over a graph node. Tensors are immutable after
// creation except for gradient accumulation during backward and explicit
// in-place parameter updates by the optimizer (which happen between tapes).
template <typename T>
class Tensor {
public:
    static constexpr Dtype dtype = detail::dtype_of<T>::value;

    Tensor() = default;

    static Tensor zeros(Dims dims, bool requires_grad = false) {
        return full(std::move(dims), T(0), requires_grad);
    }

    static Tensor full(Dims dims, T v, bool requires_grad = false) {
        check_dims(dims);
        if (!std::isfinite(static_cast<double>(v)))
            throw NumericError("tensor: non-finite fill value");
        auto n = std::make_shared<Node<T>>();
        n->value.assign(numel_of(dims), v);
        n->dims = std::move(dims);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    static Tensor scalar(T v) {
        return from_data({}, std::vector<T>{v});
    }

    static Tensor from_data(Dims dims, std::vector<T> data, bool requires_grad = false) {
        check_dims(dims);
        if (numel_of(dims) != data.size())
            throw DimError("tensor: dims " + dims_str(dims) + " need " +
                           std::to_string(numel_of(dims)) + " values, got " +
                           std::to_string(data.size()));
        for (T v : data)
            if (!std::isfinite(static_cast<double>(v)))
                throw NumericError("tensor: non-finite value in construction");
        auto n = std::make_shared<Node<T>>();
        n->dims = std::move(dims);
        n->value = std::move(data);
        n->requires_grad = requires_grad;
        return Tensor(std::move(n));
    }

    explicit Tensor(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

    bool defined() const { return node_ != nullptr; }
    const Dims& dims() const { return node_->dims; }
    std::size_t rank() const { return node_->dims.size(); }
    std::size_t numel() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }
    // Leaves only: toggles whether downstream ops record the tape.
    void set_requires_grad(bool v) { node_->requires_grad = v; }

    std::span<const T> data() const { return node_->value; }
    // In-place access for leaves (optimizer updates, gradcheck nudges).
    std::span<T> mutable_data() { return node_->value; }

    bool has_grad() const { return !node_->grad.empty(); }
    std::span<const T> grad() const { return node_->grad; }
    void zero_grad() { node_->grad.clear(); }

    T item() const {
        if (numel() != 1)
            throw ContractError("item: tensor has " + std::to_string(numel()) + " elements");
        return node_->value[0];
    }

    const std::shared_ptr<Node<T>>& node() const { return node_; }

private:
    static void check_dims(const Dims& dims) {
        for (std::size_t d : dims)
            if (d == 0) throw DimError("tensor: extents must be positive, got " + dims_str(dims));
    }

    std::shared_ptr<Node<T>> node_;
};

using TensorF = Tensor<float>;
using TensorD = Tensor<double>;

namespace detail {

template <typename T>
inline void check_finite(const std::vector<T>& v, const char* op) {
    for (T x : v)
        if (!std::isfinite(static_cast<double>(x)))
            throw NumericError(std::string(op) + ": produced a non-finite value");
}

// Assembles a result node: finiteness-checked value, and parent links plus
// the backward closure only when some input actually needs gradients.
template <typename T>
inline Tensor<T> make_result(const char* op, Dims dims, std::vector<T> value,
                             std::vector<Tensor<T>> inputs,
                             std::function<std::function<void()>(std::shared_ptr<Node<T>>)> make_backward) {
    check_finite(value, op);
    auto n = std::make_shared<Node<T>>();
    n->dims = std::move(dims);
    n->value = std::move(value);
    n->op = op;
    bool needs = false;
    for (const auto& in : inputs) needs = needs || in.requires_grad();
    n->requires_grad = needs;
    if (needs) {
        n->parents.reserve(inputs.size());
        for (const auto& in : inputs) n->parents.push_back(in.node());
        n->backward_fn = make_backward(n);
    }
    return Tensor<T>(std::move(n));
}

template <typename T>
inline void accumulate(const std::shared_ptr<Node<T>>& n, std::size_t i, T v) {
    n->grad[i] += v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic with rank-0 broadcast
// ---------------------------------------------------------------------------

enum class EwKind { add, sub, mul };

template <typename T>
Tensor<T> elementwise(EwKind kind, const Tensor<T>& a, const Tensor<T>& b) {
    const char* name = kind == EwKind::add ? "add" : kind == EwKind::sub ? "sub" : "mul";
    const bool a_scalar = a.rank() == 0;
    const bool b_scalar = b.rank() == 0;
    if (!a_scalar && !b_scalar && a.dims() != b.dims())
        throw DimError(std::string(name) + ": shapes " + dims_str(a.dims()) + " and " +
                       dims_str(b.dims()) + " do not match (only rank-0 broadcast is supported)");
    const Dims& out_dims = a_scalar ? b.dims() : a.dims();
    const std::size_t n = numel_of(out_dims);
    std::vector<T> out(n);
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t i = 0; i < n; ++i) {
        const T x = av[a_scalar ? 0 : i];
        const T y = bv[b_scalar ? 0 : i];
        out[i] = kind == EwKind::add ? x + y : kind == EwKind::sub ? x - y : x * y;
    }
    return detail::make_result<T>(
        name, out_dims, std::move(out), {a, b},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto an = a.node();
            auto bn = b.node();
            Node<T>* sp = self.get();
            return [=]() {
                const std::size_t m = sp->value.size();
                if (an->requires_grad) {
                    an->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i) {
                        T g = sp->grad[i];
                        if (kind == EwKind::mul) g *= bn->value[bn->value.size() == 1 ? 0 : i];
                        detail::accumulate(an, a_scalar ? 0 : i, g);
                    }
                }
                if (bn->requires_grad) {
                    bn->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i) {
                        T g = sp->grad[i];
                        if (kind == EwKind::mul)
                            g *= an->value[an->value.size() == 1 ? 0 : i];
                        else if (kind == EwKind::sub)
                            g = -g;
                        detail::accumulate(bn, b_scalar ? 0 : i, g);
                    }
                }
            };
        });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    return elementwise(EwKind::add, a, b);
}
template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    return elementwise(EwKind::sub, a, b);
}
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    return elementwise(EwKind::mul, a, b);
}

// ---------------------------------------------------------------------------
// matmul
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw DimError("matmul: expects rank-2 operands, got " + dims_str(a.dims()) + " and " +
                       dims_str(b.dims()));
    const std::size_t m = a.dims()[0], k = a.dims()[1];
    const std::size_t k2 = b.dims()[0], n = b.dims()[1];
    if (k != k2)
        throw DimError("matmul: inner dims disagree, " + dims_str(a.dims()) + " vs " +
                       dims_str(b.dims()));
    std::vector<T> out(m * n, T(0));
    const auto av = a.data();
    const auto bv = b.data();
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
            const T x = av[i * k + p];
            for (std::size_t j = 0; j < n; ++j) out[i * n + j] += x * bv[p * n + j];
        }
    return detail::make_result<T>(
        "matmul", Dims{m, n}, std::move(out), {a, b},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto an = a.node();
            auto bn = b.node();
            Node<T>* sp = self.get();
            return [=]() {
                if (an->requires_grad) {  // grad_a = upstream . b^T
                    an->ensure_grad();
                    for (std::size_t i = 0; i < m; ++i)
                        for (std::size_t p = 0; p < k; ++p) {
                            T acc = 0;
                            for (std::size_t j = 0; j < n; ++j)
                                acc += sp->grad[i * n + j] * bn->value[p * n + j];
                            an->grad[i * k + p] += acc;
                        }
                }
                if (bn->requires_grad) {  // grad_b = a^T . upstream
                    bn->ensure_grad();
                    for (std::size_t p = 0; p < k; ++p)
                        for (std::size_t j = 0; j < n; ++j) {
                            T acc = 0;
                            for (std::size_t i = 0; i < m; ++i)
                                acc += an->value[i * k + p] * sp->grad[i * n + j];
                            bn->grad[p * n + j] += acc;
                        }
                }
            };
        });
}

// ---------------------------------------------------------------------------
// relu
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    std::vector<T> out(a.numel());
    const auto av = a.data();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] > T(0) ? av[i] : T(0);
    return detail::make_result<T>(
        "relu", a.dims(), std::move(out), {a},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto an = a.node();
            Node<T>* sp = self.get();
            return [=]() {
                an->ensure_grad();
                // subgradient 0 at the kink
                for (std::size_t i = 0; i < sp->value.size(); ++i)
                    if (an->value[i] > T(0)) an->grad[i] += sp->grad[i];
            };
        });
}

// ---------------------------------------------------------------------------
// reduce: sum / mean / max over named axes
// ---------------------------------------------------------------------------

enum class ReduceKind { sum, mean, max };

template <typename T>
Tensor<T> reduce(const Tensor<T>& a, ReduceKind kind, std::vector<std::size_t> axes) {
    const std::size_t r = a.rank();
    std::vector<bool> reduced(r, false);
    for (std::size_t ax : axes) {
        if (ax >= r) throw DimError("reduce: axis " + std::to_string(ax) + " out of range for rank " + std::to_string(r));
        if (reduced[ax]) throw DimError("reduce: duplicate axis " + std::to_string(ax));
        reduced[ax] = true;
    }
    Dims out_dims;
    for (std::size_t i = 0; i < r; ++i)
        if (!reduced[i]) out_dims.push_back(a.dims()[i]);
    const std::size_t out_n = numel_of(out_dims);
    const std::size_t in_n = a.numel();
    const std::size_t count = in_n / out_n;  // elements folded into each output cell

    // Materialised input-flat -> output-flat map; shared by forward and backward.
    const Dims in_strides = strides_of(a.dims());
    Dims out_strides = strides_of(out_dims);
    std::vector<std::size_t> axis_out_stride(r, 0);
    {
        std::size_t oi = 0;
        for (std::size_t i = 0; i < r; ++i)
            if (!reduced[i]) axis_out_stride[i] = out_strides[oi++];
    }
    std::vector<std::size_t> omap(in_n);
    for (std::size_t flat = 0; flat < in_n; ++flat) {
        std::size_t oi = 0;
        for (std::size_t i = 0; i < r; ++i)
            oi += ((flat / in_strides[i]) % a.dims()[i]) * axis_out_stride[i];
        omap[flat] = oi;
    }

    const auto av = a.data();
    std::vector<T> out;
    std::vector<std::size_t> argmax;  // first maximiser per output cell
    if (kind == ReduceKind::max) {
        out.assign(out_n, std::numeric_limits<T>::lowest());
        argmax.assign(out_n, 0);
        for (std::size_t i = 0; i < in_n; ++i) {
            const std::size_t oi = omap[i];
            if (av[i] > out[oi]) {  // strict: ties keep the first (lowest flat index)
                out[oi] = av[i];
                argmax[oi] = i;
            }
        }
    } else {
        out.assign(out_n, T(0));
        for (std::size_t i = 0; i < in_n; ++i) out[omap[i]] += av[i];
        if (kind == ReduceKind::mean)
            for (T& v : out) v /= static_cast<T>(count);
    }

    return detail::make_result<T>(
        kind == ReduceKind::sum ? "reduce_sum" : kind == ReduceKind::mean ? "reduce_mean" : "reduce_max",
        out_dims, std::move(out), {a},
        [=, argmax = std::move(argmax), omap = std::move(omap)](
            std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto an = a.node();
            Node<T>* sp = self.get();
            return [=]() {
                an->ensure_grad();
                if (kind == ReduceKind::max) {
                    for (std::size_t oi = 0; oi < sp->value.size(); ++oi)
                        an->grad[argmax[oi]] += sp->grad[oi];
                } else {
                    const T scale = kind == ReduceKind::mean ? T(1) / static_cast<T>(count) : T(1);
                    for (std::size_t i = 0; i < an->value.size(); ++i)
                        an->grad[i] += sp->grad[omap[i]] * scale;
                }
            };
        });
}

template <typename T>
Tensor<T> reduce_all(const Tensor<T>& a, ReduceKind kind) {
    std::vector<std::size_t> axes(a.rank());
    std::iota(axes.begin(), axes.end(), 0);
    return reduce(a, kind, std::move(axes));
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
    return reduce_all(a, ReduceKind::sum);
}
template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
    return reduce_all(a, ReduceKind::mean);
}
template <typename T>
Tensor<T> max_all(const Tensor<T>& a) {
    return reduce_all(a, ReduceKind::max);
}

// ---------------------------------------------------------------------------
// shape ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Dims new_dims) {
    if (numel_of(new_dims) != a.numel())
        throw DimError("reshape: cannot view " + dims_str(a.dims()) + " as " + dims_str(new_dims));
    std::vector<T> out(a.data().begin(), a.data().end());
    return detail::make_result<T>(
        "reshape", std::move(new_dims), std::move(out), {a},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto an = a.node();
            Node<T>* sp = self.get();
            return [=]() {
                an->ensure_grad();
                for (std::size_t i = 0; i < sp->value.size(); ++i) an->grad[i] += sp->grad[i];
            };
        });
}

// Columns [start, start+len) of a rank-2 tensor.
template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, std::size_t start, std::size_t len) {
    if (a.rank() != 2) throw DimError("slice_cols: expects rank-2 input, got " + dims_str(a.dims()));
    const std::size_t rows = a.dims()[0], cols = a.dims()[1];
    if (start + len > cols)
        throw DimError("slice_cols: range [" + std::to_string(start) + "," +
                       std::to_string(start + len) + ") exceeds " + std::to_string(cols) + " columns");
    std::vector<T> out(rows * len);
    const auto av = a.data();
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < len; ++c) out[r * len + c] = av[r * cols + start + c];
    return detail::make_result<T>(
        "slice_cols", Dims{rows, len}, std::move(out), {a},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto an = a.node();
            Node<T>* sp = self.get();
            return [=]() {
                an->ensure_grad();
                for (std::size_t r = 0; r < rows; ++r)
                    for (std::size_t c = 0; c < len; ++c)
                        an->grad[r * cols + start + c] += sp->grad[r * len + c];
            };
        });
}

// ---------------------------------------------------------------------------
// backward
// ---------------------------------------------------------------------------

// Reverse-mode pass from a scalar root. Visits each reachable node exactly
// once in reverse topological order; gradients fan in by summation. The tape
// is released afterwards (closures and parent links are dropped) so graph
// memory does not outlive the pass.
template <typename T>
void backward(const Tensor<T>& root) {
    if (root.rank() != 0)
        throw ContractError("backward: root must be rank-0, got " + dims_str(root.dims()));
    if (!root.requires_grad()) return;

    // Iterative postorder DFS: postorder is a topological order of the DAG.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack;
    stack.emplace_back(root.node().get(), 0);
    seen.insert(root.node().get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node<T>* p = node->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }

    root.node()->ensure_grad();
    root.node()->grad[0] = T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backward_fn) {
            n->ensure_grad();
            n->backward_fn();
        }
    }
    // Free the tape; leaf gradients stay in place.
    for (Node<T>* n : order) {
        if (!n->backward_fn) continue;
        n->backward_fn = nullptr;
        n->parents.clear();
        n->grad.clear();
        n->grad.shrink_to_fit();
    }
}

}  // namespace hysnet
