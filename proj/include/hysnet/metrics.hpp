#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace hysnet {

struct MetricReport {
    double srocc = 0.0;
    double plcc = 0.0;
    std::size_t n = 0;
};

// 1-based ranks; ties receive the mean of their rank range.
std::vector<double> average_ranks(std::span<const double> values);

// Pearson correlation with population moments.
double plcc(std::span<const double> x, std::span<const double> y);

// Spearman: Pearson correlation of average-ranked values. The rank-then-
// Pearson formulation stays correct under ties.
double srocc(std::span<const double> x, std::span<const double> y);

MetricReport metric_report(std::span<const double> predicted, std::span<const double> target);

}  // namespace hysnet
