#include "hysnet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "hysnet/errors.hpp"

namespace hysnet {

std::vector<double> average_ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        const double mean_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

namespace {

void check_args(std::span<const double> x, std::span<const double> y, const char* name) {
    if (x.size() != y.size())
        throw ContractError(std::string(name) + ": series lengths differ: " +
                            std::to_string(x.size()) + " vs " + std::to_string(y.size()));
    if (x.size() < 3)
        throw ContractError(std::string(name) + ": need at least 3 samples, got " +
                            std::to_string(x.size()));
}

double pearson(std::span<const double> x, std::span<const double> y, const char* name) {
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0)
        throw UndefinedMetricError(std::string(name) + ": undefined for constant input");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double plcc(std::span<const double> x, std::span<const double> y) {
    check_args(x, y, "plcc");
    return pearson(x, y, "plcc");
}

double srocc(std::span<const double> x, std::span<const double> y) {
    check_args(x, y, "srocc");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry, "srocc");
}

MetricReport metric_report(std::span<const double> predicted, std::span<const double> target) {
    MetricReport r;
    r.n = predicted.size();
    r.srocc = srocc(predicted, target);
    r.plcc = plcc(predicted, target);
    return r;
}

}  // namespace hysnet
