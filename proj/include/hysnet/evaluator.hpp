#pragma once

#include <cstddef>
#include <vector>

#include "hysnet/manifest.hpp"
#include "hysnet/metrics.hpp"
#include "hysnet/model.hpp"
#include "hysnet/volume.hpp"

namespace hysnet {

// Volume-level score: arithmetic mean of the per-patch predictions over the
// full coverage grid, accumulated in patch-index order.
double evaluate_volume(const Volume& v, const ModelConfig& cfg, ModelParams<float>& params,
                       std::size_t patch, std::size_t stride, std::size_t max_batch = 32);

struct ManifestEval {
    std::vector<double> predicted;
    std::vector<double> target;
    MetricReport report;
};

ManifestEval evaluate_manifest(const Manifest& manifest, const ModelConfig& cfg,
                               ModelParams<float>& params, std::size_t patch, std::size_t stride);

}  // namespace hysnet
