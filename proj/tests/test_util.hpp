#pragma once

#include <cmath>
#include <vector>

#include "hysnet/rng.hpp"
#include "hysnet/tensor.hpp"

namespace hysnet::testing {

// Random tensor with entries away from zero by `margin` (keeps relu/max/L1
// kinks out of finite-difference probes).
template <typename T>
Tensor<T> random_tensor(Dims dims, Rng& rng, double lo = -1.0, double hi = 1.0,
                        double margin = 0.0, bool requires_grad = false) {
    std::vector<T> data(numel_of(dims));
    for (auto& v : data) {
        double x = rng.uniform(lo, hi);
        if (margin > 0.0) {
            while (std::abs(x) < margin) x = rng.uniform(lo, hi);
        }
        v = static_cast<T>(x);
    }
    return Tensor<T>::from_data(std::move(dims), std::move(data), requires_grad);
}

inline double max_abs_diff(std::span<const float> a, std::span<const double> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(static_cast<double>(a[i]) - b[i]));
    return m;
}

}  // namespace hysnet::testing
