#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "hysnet/tensor.hpp"

namespace hysnet {

// Mean absolute error. The subgradient at exact ties is 0.
template <typename T>
Tensor<T> l1_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (pred.dims() != target.dims())
        throw DimError("l1_loss: shapes " + dims_str(pred.dims()) + " and " +
                       dims_str(target.dims()) + " do not match");
    const std::size_t n = pred.numel();
    if (n == 0) throw ContractError("l1_loss: empty batch");
    const auto p = pred.data();
    const auto t = target.data();
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += std::abs(static_cast<double>(p[i]) - static_cast<double>(t[i]));
    std::vector<T> out{static_cast<T>(acc / static_cast<double>(n))};
    return detail::make_result<T>(
        "l1_loss", Dims{}, std::move(out), {pred, target},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto p_node = pred.node();
            auto t_node = target.node();
            Node<T>* sp = self.get();
            return [=]() {
                const T g = sp->grad[0] / static_cast<T>(n);
                auto sign = [](T a, T b) { return a > b ? T(1) : a < b ? T(-1) : T(0); };
                if (p_node->requires_grad) {
                    p_node->ensure_grad();
                    for (std::size_t i = 0; i < n; ++i)
                        p_node->grad[i] += g * sign(p_node->value[i], t_node->value[i]);
                }
                if (t_node->requires_grad) {
                    t_node->ensure_grad();
                    for (std::size_t i = 0; i < n; ++i)
                        t_node->grad[i] -= g * sign(p_node->value[i], t_node->value[i]);
                }
            };
        });
}

// base_lr halved once per period: lr(e) = base / 2^floor(e / period).
inline double lr_at(std::size_t epoch, double base_lr, std::size_t halve_period) {
    if (halve_period == 0) throw ConfigError("lr_at: halving period must be positive");
    const std::size_t k = epoch / halve_period;
    return base_lr / static_cast<double>(std::uint64_t(1) << std::min<std::size_t>(k, 62));
}

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// First/second moment buffers per parameter, in parameter-list order.
template <typename T>
struct OptimState {
    std::vector<std::vector<T>> m, v;
    std::size_t t = 0;
    AdamConfig cfg;

    static OptimState init(const std::vector<Tensor<T>>& params, AdamConfig cfg = {}) {
        OptimState s;
        s.cfg = cfg;
        s.m.reserve(params.size());
        s.v.reserve(params.size());
        for (const auto& p : params) {
            s.m.emplace_back(p.numel(), T(0));
            s.v.emplace_back(p.numel(), T(0));
        }
        return s;
    }
};

// One Adam update over all parameters. Gradients are read from the tensors'
// grad buffers (missing buffer = zero gradient). Any non-finite gradient
// aborts the step before any parameter is touched.
template <typename T>
void adam_step(std::vector<Tensor<T>>& params, OptimState<T>& state, double lr) {
    if (params.size() != state.m.size())
        throw ContractError("adam_step: state tracks " + std::to_string(state.m.size()) +
                            " parameters, got " + std::to_string(params.size()));
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i].numel() != state.m[i].size())
            throw DimError("adam_step: parameter " + std::to_string(i) + " changed size");
        for (T g : params[i].grad())
            if (!std::isfinite(static_cast<double>(g)))
                throw NumericError("adam_step: non-finite gradient in parameter " +
                                   std::to_string(i) + "; step aborted");
    }
    state.t += 1;
    const double b1 = state.cfg.beta1, b2 = state.cfg.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto data = params[i].mutable_data();
        auto grad = params[i].grad();
        auto& m = state.m[i];
        auto& v = state.v[i];
        for (std::size_t j = 0; j < data.size(); ++j) {
            const double g = grad.empty() ? 0.0 : static_cast<double>(grad[j]);
            const double mj = b1 * static_cast<double>(m[j]) + (1.0 - b1) * g;
            const double vj = b2 * static_cast<double>(v[j]) + (1.0 - b2) * g * g;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double mhat = mj / bc1;
            const double vhat = vj / bc2;
            data[j] = static_cast<T>(static_cast<double>(data[j]) -
                                     lr * mhat / (std::sqrt(vhat) + state.cfg.eps));
        }
    }
}

template <typename T>
void zero_grads(std::vector<Tensor<T>>& params) {
    for (auto& p : params) p.zero_grad();
}

}  // namespace hysnet
