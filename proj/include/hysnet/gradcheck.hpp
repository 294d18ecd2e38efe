#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hysnet/tensor.hpp"

namespace hysnet {

struct GradCheckReport {
    std::string name;
    bool pass = false;
    double max_rel_err = 0.0;
    std::size_t worst_coord = 0;
    double worst_ad = 0.0;   // tape gradient at the worst coordinate
    double worst_fd = 0.0;   // central difference at the worst coordinate
    std::size_t coords = 0;
    double tol = 0.0;
};

// Central-difference check of the tape gradient of f at x. f must be
// deterministic and return a rank-0 tensor; runs in f64 only (central
// differences need the headroom). The error measure is
// |ad - fd| / max(1, |ad|, |fd|): relative above unit scale, absolute below.
inline GradCheckReport finite_diff_check(std::string name,
                                         const std::function<TensorD(const TensorD&)>& f,
                                         const TensorD& x, double h = 1e-3, double tol = 1e-4) {
    TensorD leaf = TensorD::from_data(x.dims(), std::vector<double>(x.data().begin(), x.data().end()),
                                      /*requires_grad=*/true);
    TensorD y = f(leaf);
    if (y.rank() != 0)
        throw ContractError("finite_diff_check: f must return a scalar, got " + dims_str(y.dims()));
    backward(y);
    std::vector<double> ad(leaf.numel(), 0.0);
    if (leaf.has_grad()) {
        auto g = leaf.grad();
        ad.assign(g.begin(), g.end());
    }

    GradCheckReport report;
    report.name = std::move(name);
    report.coords = leaf.numel();
    report.tol = tol;

    std::vector<double> base(x.data().begin(), x.data().end());
    for (std::size_t i = 0; i < base.size(); ++i) {
        auto eval = [&](double v) {
            std::vector<double> nudged = base;
            nudged[i] = v;
            TensorD probe = TensorD::from_data(x.dims(), std::move(nudged));
            TensorD out = f(probe);
            const double r = out.item();
            if (!std::isfinite(r)) throw NumericError("finite_diff_check: non-finite evaluation");
            return r;
        };
        const double fd = (eval(base[i] + h) - eval(base[i] - h)) / (2.0 * h);
        const double denom = std::max({1.0, std::abs(ad[i]), std::abs(fd)});
        const double rel = std::abs(ad[i] - fd) / denom;
        if (rel > report.max_rel_err) {
            report.max_rel_err = rel;
            report.worst_coord = i;
            report.worst_ad = ad[i];
            report.worst_fd = fd;
        }
    }
    report.pass = report.max_rel_err < tol;
    return report;
}

}  // namespace hysnet
