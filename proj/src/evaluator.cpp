#include "hysnet/evaluator.hpp"

#include <algorithm>

#include "hysnet/patches.hpp"

namespace hysnet {

namespace {

// Parameters participate in no tape during inference.
struct InferenceGuard {
    std::vector<Tensor<float>>& params;
    explicit InferenceGuard(std::vector<Tensor<float>>& p) : params(p) {
        for (auto& t : params) t.set_requires_grad(false);
    }
    ~InferenceGuard() {
        for (auto& t : params) t.set_requires_grad(true);
    }
};

}  // namespace

double evaluate_volume(const Volume& v, const ModelConfig& cfg, ModelParams<float>& params,
                       std::size_t patch, std::size_t stride, std::size_t max_batch) {
    cfg.feature_extent(patch);  // architecture guard before any inference
    const Volume norm = normalize(v);
    const auto grid = make_patch_grid(norm.dims, patch, stride);
    const auto positions = grid_positions(grid);

    auto plist = param_list(params);
    InferenceGuard guard(plist);

    double acc = 0.0;
    for (std::size_t start = 0; start < positions.size(); start += max_batch) {
        const std::size_t end = std::min(positions.size(), start + max_batch);
        const std::vector<std::array<std::size_t, 3>> chunk(positions.begin() + start,
                                                            positions.begin() + end);
        auto batch = patches_to_tensor<float>(norm, chunk, patch);
        TensorF scores = hysnet_forward(batch, cfg, params);
        for (float s : scores.data()) acc += static_cast<double>(s);
    }
    return acc / static_cast<double>(positions.size());
}

ManifestEval evaluate_manifest(const Manifest& manifest, const ModelConfig& cfg,
                               ModelParams<float>& params, std::size_t patch, std::size_t stride) {
    if (manifest.records.empty()) throw ContractError("evaluate: manifest is empty");
    cfg.feature_extent(patch);
    ManifestEval eval;
    eval.predicted.reserve(manifest.records.size());
    eval.target.reserve(manifest.records.size());
    for (std::size_t i = 0; i < manifest.records.size(); ++i) {
        const Volume v = read_volume(manifest.resolved(i));
        eval.predicted.push_back(evaluate_volume(v, cfg, params, patch, stride));
        eval.target.push_back(manifest.records[i].score);
    }
    eval.report = metric_report(eval.predicted, eval.target);
    return eval;
}

}  // namespace hysnet
