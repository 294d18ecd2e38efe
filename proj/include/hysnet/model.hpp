#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hysnet/nn_ops.hpp"
#include "hysnet/rng.hpp"
#include "hysnet/tensor.hpp"

namespace hysnet {

enum class Mode { hyper, fixed };

inline const char* mode_name(Mode m) { return m == Mode::hyper ? "hyper" : "fixed"; }

struct StageSpec {
    std::size_t channels = 0;
    std::size_t blocks = 1;
    std::size_t stride = 1;
};

struct BackboneSpec {
    std::size_t stem_channels = 8;
    std::size_t stem_kernel = 3;  // odd; padded to preserve extent at stride 1
    std::size_t stem_stride = 1;
    std::vector<StageSpec> stages;
};

struct HyperBranchSpec {
    std::size_t reduction = 2;  // first 1x1x1 conv maps C -> C/reduction
    std::size_t hidden = 16;    // second 1x1x1 conv output width
};

struct ModelConfig {
    BackboneSpec backbone;
    NormMode norm_mode = NormMode::group;
    std::size_t norm_group_cap = 4;
    double norm_eps = 1e-5;
    std::vector<std::size_t> predictor_dims{32, 8, 4, 1};  // [d0, d1, d2, d3]
    HyperBranchSpec hyper_branch;
    Dtype dtype = Dtype::f32;
    std::uint64_t init_seed = 1;

    std::size_t feature_channels() const {
        return backbone.stages.empty() ? backbone.stem_channels : backbone.stages.back().channels;
    }

    static constexpr std::size_t kPredictorLayers = 3;

    std::size_t generated_size(std::size_t layer) const {  // d_{i+1} * (d_i + 1)
        return predictor_dims[layer + 1] * (predictor_dims[layer] + 1);
    }

    std::size_t generated_total() const {
        std::size_t total = 0;
        for (std::size_t i = 0; i < kPredictorLayers; ++i) total += generated_size(i);
        return total;
    }

    NormSettings norm_settings() const { return NormSettings{norm_mode, norm_group_cap, norm_eps}; }

    void validate() const {
        if (backbone.stem_channels == 0) throw ConfigError("config: stem channels must be positive");
        if (backbone.stem_kernel % 2 == 0 || backbone.stem_kernel == 0)
            throw ConfigError("config: stem kernel must be odd");
        if (backbone.stem_stride == 0) throw ConfigError("config: stem stride must be positive");
        if (backbone.stages.empty()) throw ConfigError("config: backbone needs at least one stage");
        for (const auto& s : backbone.stages)
            if (s.channels == 0 || s.blocks == 0 || s.stride == 0)
                throw ConfigError("config: stage channels/blocks/stride must be positive");
        if (predictor_dims.size() != kPredictorLayers + 1)
            throw ConfigError("config: predictor_dims must list exactly 4 widths (3 layers)");
        for (std::size_t d : predictor_dims)
            if (d == 0) throw ConfigError("config: predictor widths must be positive");
        if (predictor_dims.back() != 1)
            throw ConfigError("config: final predictor width must be 1 (scalar score)");
        if (predictor_dims.front() != feature_channels())
            throw ConfigError("config: predictor d0 = " + std::to_string(predictor_dims.front()) +
                              " must equal backbone output channels " +
                              std::to_string(feature_channels()));
        if (hyper_branch.reduction == 0 || hyper_branch.hidden == 0)
            throw ConfigError("config: hyper branch widths must be positive");
    }

    void validate_hyper() const {
        validate();
        if (feature_channels() % hyper_branch.reduction != 0)
            throw ConfigError("config: feature channels " + std::to_string(feature_channels()) +
                              " not divisible by hyper reduction " +
                              std::to_string(hyper_branch.reduction));
    }

    // Spatial extent of the feature map for a cubic patch of side p.
    std::array<std::size_t, 3> feature_extent(std::size_t p) const {
        if (p == 0) throw ConfigError("config: patch extent must be positive");
        std::array<std::size_t, 3> e{p, p, p};
        const std::size_t pad = (backbone.stem_kernel - 1) / 2;
        e = conv_spec(1, backbone.stem_channels, backbone.stem_kernel, backbone.stem_stride, pad)
                .out_extent(e);
        std::size_t ch = backbone.stem_channels;
        for (const auto& s : backbone.stages) {
            e = conv_spec(ch, s.channels, 3, s.stride, 1).out_extent(e);
            ch = s.channels;
        }
        return e;
    }
};

// Small configuration for CPU-scale experiments; the full-scale constants
// live in configs/full.json.
inline ModelConfig desk_model_config() {
    ModelConfig cfg;
    cfg.backbone.stem_channels = 8;
    cfg.backbone.stem_kernel = 3;
    cfg.backbone.stem_stride = 1;
    cfg.backbone.stages = {{8, 1, 1}, {16, 1, 2}, {32, 1, 2}};
    cfg.predictor_dims = {32, 8, 4, 1};
    cfg.hyper_branch = {2, 16};
    return cfg;
}

// ---------------------------------------------------------------------------
// parameter containers
// ---------------------------------------------------------------------------

template <typename T>
struct BackboneParams {
    LayerParams<T> stem;
    std::optional<LayerParams<T>> stem_norm;
    std::vector<std::vector<ResidualBlockParams<T>>> stages;
};

template <typename T>
struct HyperBranchParams {
    LayerParams<T> conv1, conv2, fc;
};

template <typename T>
struct HyperParams {
    std::array<HyperBranchParams<T>, ModelConfig::kPredictorLayers> branches;
};

template <typename T>
struct PredictorParams {  // the fixed-mode parameter set theta
    std::array<LayerParams<T>, ModelConfig::kPredictorLayers> layers;
};

template <typename T>
struct ModelParams {
    Mode mode = Mode::hyper;
    BackboneParams<T> backbone;
    std::optional<HyperParams<T>> hyper;
    std::optional<PredictorParams<T>> predictor;
};

namespace detail {

template <typename T>
Tensor<T> he_weight(Dims dims, std::size_t fan_in, Rng& rng, double gain = 1.0) {
    const double stddev = gain * std::sqrt(2.0 / static_cast<double>(fan_in));
    std::vector<T> data(numel_of(dims));
    for (auto& v : data) v = static_cast<T>(rng.normal(0.0, stddev));
    return Tensor<T>::from_data(std::move(dims), std::move(data), /*requires_grad=*/true);
}

template <typename T>
LayerParams<T> init_conv(std::size_t in_ch, std::size_t out_ch, std::size_t k, Rng& rng,
                         double gain = 1.0) {
    LayerParams<T> p;
    p.weight = he_weight<T>({out_ch, in_ch, k, k, k}, in_ch * k * k * k, rng, gain);
    p.bias = Tensor<T>::zeros({out_ch}, true);
    return p;
}

template <typename T>
LayerParams<T> init_fc(std::size_t in_f, std::size_t out_f, Rng& rng, double gain = 1.0) {
    LayerParams<T> p;
    p.weight = he_weight<T>({out_f, in_f}, in_f, rng, gain);
    p.bias = Tensor<T>::zeros({out_f}, true);
    return p;
}

template <typename T>
LayerParams<T> init_norm(std::size_t channels) {
    LayerParams<T> p;
    p.weight = Tensor<T>::full({channels}, T(1), true);
    p.bias = Tensor<T>::zeros({channels}, true);
    return p;
}

}  // namespace detail

template <typename T>
BackboneParams<T> init_backbone(const ModelConfig& cfg, Rng& rng) {
    BackboneParams<T> bp;
    const bool norm = cfg.norm_mode != NormMode::none;
    bp.stem = detail::init_conv<T>(1, cfg.backbone.stem_channels, cfg.backbone.stem_kernel, rng);
    if (norm) bp.stem_norm = detail::init_norm<T>(cfg.backbone.stem_channels);
    std::size_t in_ch = cfg.backbone.stem_channels;
    for (const auto& stage : cfg.backbone.stages) {
        std::vector<ResidualBlockParams<T>> blocks;
        for (std::size_t b = 0; b < stage.blocks; ++b) {
            const std::size_t stride = b == 0 ? stage.stride : 1;
            ResidualBlockParams<T> rb;
            rb.conv1 = detail::init_conv<T>(in_ch, stage.channels, 3, rng);
            rb.conv2 = detail::init_conv<T>(stage.channels, stage.channels, 3, rng);
            if (norm) {
                rb.norm1 = detail::init_norm<T>(stage.channels);
                rb.norm2 = detail::init_norm<T>(stage.channels);
            }
            if (stride != 1 || in_ch != stage.channels) {
                rb.proj = detail::init_conv<T>(in_ch, stage.channels, 1, rng);
                if (norm) rb.proj_norm = detail::init_norm<T>(stage.channels);
            }
            blocks.push_back(std::move(rb));
            in_ch = stage.channels;
        }
        bp.stages.push_back(std::move(blocks));
    }
    return bp;
}

template <typename T>
HyperParams<T> init_hyper(const ModelConfig& cfg, Rng& rng) {
    cfg.validate_hyper();
    HyperParams<T> hp;
    const std::size_t c = cfg.feature_channels();
    const std::size_t mid = c / cfg.hyper_branch.reduction;
    for (std::size_t i = 0; i < ModelConfig::kPredictorLayers; ++i) {
        hp.branches[i].conv1 = detail::init_conv<T>(c, mid, 1, rng);
        hp.branches[i].conv2 = detail::init_conv<T>(mid, cfg.hyper_branch.hidden, 1, rng);
        // Damped init keeps early generated parameters near zero.
        hp.branches[i].fc =
            detail::init_fc<T>(cfg.hyper_branch.hidden, cfg.generated_size(i), rng, 0.1);
    }
    return hp;
}

template <typename T>
PredictorParams<T> init_predictor(const ModelConfig& cfg, Rng& rng) {
    PredictorParams<T> pp;
    for (std::size_t i = 0; i < ModelConfig::kPredictorLayers; ++i)
        pp.layers[i] = detail::init_fc<T>(cfg.predictor_dims[i], cfg.predictor_dims[i + 1], rng);
    return pp;
}

template <typename T>
ModelParams<T> init_model_params(const ModelConfig& cfg, Mode mode) {
    if (mode == Mode::hyper)
        cfg.validate_hyper();
    else
        cfg.validate();
    Rng rng = Rng::substream(cfg.init_seed, "init");
    ModelParams<T> mp;
    mp.mode = mode;
    mp.backbone = init_backbone<T>(cfg, rng);
    if (mode == Mode::hyper)
        mp.hyper = init_hyper<T>(cfg, rng);
    else
        mp.predictor = init_predictor<T>(cfg, rng);
    return mp;
}

// Enumerates (name, tensor) pairs in a fixed traversal order; this order is
// the optimizer's order, and names are the checkpoint keys.
template <typename T, typename F>
void visit_params(BackboneParams<T>& bp, F&& fn) {
    auto layer = [&](const std::string& prefix, LayerParams<T>& lp, bool is_norm) {
        fn(prefix + (is_norm ? ".scale" : ".weight"), lp.weight);
        if (lp.bias) fn(prefix + (is_norm ? ".shift" : ".bias"), *lp.bias);
    };
    layer("backbone.stem.conv", bp.stem, false);
    if (bp.stem_norm) layer("backbone.stem.norm", *bp.stem_norm, true);
    for (std::size_t s = 0; s < bp.stages.size(); ++s) {
        for (std::size_t b = 0; b < bp.stages[s].size(); ++b) {
            const std::string p = "backbone.s" + std::to_string(s) + ".b" + std::to_string(b);
            auto& rb = bp.stages[s][b];
            layer(p + ".conv1", rb.conv1, false);
            if (rb.norm1) layer(p + ".norm1", *rb.norm1, true);
            layer(p + ".conv2", rb.conv2, false);
            if (rb.norm2) layer(p + ".norm2", *rb.norm2, true);
            if (rb.proj) layer(p + ".proj", *rb.proj, false);
            if (rb.proj_norm) layer(p + ".proj_norm", *rb.proj_norm, true);
        }
    }
}

template <typename T, typename F>
void visit_params(HyperParams<T>& hp, F&& fn) {
    for (std::size_t i = 0; i < hp.branches.size(); ++i) {
        const std::string p = "hyper.br" + std::to_string(i);
        auto& br = hp.branches[i];
        fn(p + ".conv1.weight", br.conv1.weight);
        fn(p + ".conv1.bias", *br.conv1.bias);
        fn(p + ".conv2.weight", br.conv2.weight);
        fn(p + ".conv2.bias", *br.conv2.bias);
        fn(p + ".fc.weight", br.fc.weight);
        fn(p + ".fc.bias", *br.fc.bias);
    }
}

template <typename T, typename F>
void visit_params(PredictorParams<T>& pp, F&& fn) {
    for (std::size_t i = 0; i < pp.layers.size(); ++i) {
        const std::string p = "predictor.fc" + std::to_string(i);
        fn(p + ".weight", pp.layers[i].weight);
        fn(p + ".bias", *pp.layers[i].bias);
    }
}

template <typename T, typename F>
void visit_params(ModelParams<T>& mp, F&& fn) {
    visit_params(mp.backbone, fn);
    if (mp.hyper) visit_params(*mp.hyper, fn);
    if (mp.predictor) visit_params(*mp.predictor, fn);
}

template <typename T>
std::vector<std::pair<std::string, Tensor<T>>> named_params(ModelParams<T>& mp) {
    std::vector<std::pair<std::string, Tensor<T>>> out;
    visit_params(mp, [&](const std::string& name, Tensor<T>& t) { out.emplace_back(name, t); });
    return out;
}

template <typename T>
std::vector<Tensor<T>> param_list(ModelParams<T>& mp) {
    std::vector<Tensor<T>> out;
    visit_params(mp, [&](const std::string&, Tensor<T>& t) { out.push_back(t); });
    return out;
}

// ---------------------------------------------------------------------------
// forward passes
// ---------------------------------------------------------------------------

template <typename T>
struct FeatureMap {
    Tensor<T> map;     // [N, C, D', H', W']
    Tensor<T> pooled;  // [N, C] global average of map
};

// Per-sample generated predictor parameters (theta_x).
template <typename T>
struct GeneratedParams {
    std::array<Tensor<T>, ModelConfig::kPredictorLayers> weight;  // [N, d_{i+1}, d_i]
    std::array<Tensor<T>, ModelConfig::kPredictorLayers> bias;    // [N, d_{i+1}]
    std::array<Tensor<T>, ModelConfig::kPredictorLayers> flat;    // [N, d_{i+1}*(d_i+1)]

    std::size_t batch() const { return flat[0].dims()[0]; }

    // Concatenation of the per-layer flats for one sample (weight entries
    // then bias, layer 0 to 2). layer = kPredictorLayers selects all layers.
    std::vector<double> flat_row(std::size_t n, std::size_t layer = ModelConfig::kPredictorLayers) const {
        std::vector<double> row;
        for (std::size_t i = 0; i < flat.size(); ++i) {
            if (layer != ModelConfig::kPredictorLayers && layer != i) continue;
            const std::size_t w = flat[i].dims()[1];
            const auto d = flat[i].data();
            for (std::size_t j = 0; j < w; ++j) row.push_back(static_cast<double>(d[n * w + j]));
        }
        return row;
    }
};

template <typename T>
FeatureMap<T> backbone_forward(const Tensor<T>& patch, const ModelConfig& cfg,
                               const BackboneParams<T>& bp) {
    if (patch.rank() != 5 || patch.dims()[1] != 1)
        throw DimError("backbone: patch must be [N,1,D,H,W], got " + dims_str(patch.dims()));
    const std::size_t pad = (cfg.backbone.stem_kernel - 1) / 2;
    const auto norm = cfg.norm_settings();
    Tensor<T> x = conv3d(patch,
                         conv_spec(1, cfg.backbone.stem_channels, cfg.backbone.stem_kernel,
                                   cfg.backbone.stem_stride, pad, bp.stem.bias.has_value()),
                         bp.stem);
    x = apply_norm(x, norm, bp.stem_norm);
    x = relu(x);
    std::size_t in_ch = cfg.backbone.stem_channels;
    for (std::size_t s = 0; s < cfg.backbone.stages.size(); ++s) {
        const auto& stage = cfg.backbone.stages[s];
        for (std::size_t b = 0; b < stage.blocks; ++b) {
            ResidualBlockConfig rc;
            rc.in_channels = in_ch;
            rc.out_channels = stage.channels;
            rc.stride = b == 0 ? stage.stride : 1;
            rc.norm = norm;
            x = residual_block(x, rc, bp.stages[s][b]);
            in_ch = stage.channels;
        }
    }
    return FeatureMap<T>{x, global_avg_pool(x)};
}

// Three branches over the unpooled feature map; each branch is
// conv1x1x1 -> relu -> conv1x1x1 -> global max pool -> fc -> reshape into
// one predictor layer's weight and bias.
template <typename T>
GeneratedParams<T> hyper_generate(const FeatureMap<T>& feature, const ModelConfig& cfg,
                                  const HyperParams<T>& hp) {
    const std::size_t c = cfg.feature_channels();
    if (feature.map.rank() != 5 || feature.map.dims()[1] != c)
        throw DimError("hyper: feature map channels " +
                       std::to_string(feature.map.rank() == 5 ? feature.map.dims()[1] : 0) +
                       " do not match config " + std::to_string(c));
    if (c % cfg.hyper_branch.reduction != 0)
        throw ConfigError("hyper: channels " + std::to_string(c) + " not divisible by reduction " +
                          std::to_string(cfg.hyper_branch.reduction));
    const std::size_t mid = c / cfg.hyper_branch.reduction;
    const std::size_t hidden = cfg.hyper_branch.hidden;
    const std::size_t n = feature.map.dims()[0];

    GeneratedParams<T> gen;
    for (std::size_t i = 0; i < ModelConfig::kPredictorLayers; ++i) {
        const std::size_t g = cfg.predictor_dims[i + 1];
        const std::size_t f = cfg.predictor_dims[i];
        const auto& br = hp.branches[i];
        Tensor<T> t = conv3d(feature.map, conv_spec(c, mid, 1, 1, 0, br.conv1.bias.has_value()),
                             br.conv1);
        t = relu(t);
        t = conv3d(t, conv_spec(mid, hidden, 1, 1, 0, br.conv2.bias.has_value()), br.conv2);
        Tensor<T> v = global_max_pool(t);      // [N, hidden]
        Tensor<T> flat = fc_apply(v, br.fc);   // [N, g*(f+1)]
        gen.flat[i] = flat;
        gen.weight[i] = reshape(slice_cols(flat, 0, g * f), {n, g, f});
        gen.bias[i] = slice_cols(flat, g * f, g);
    }
    return gen;
}

// relu(fc0) -> relu(fc1) -> fc2, each layer using its sample's generated
// parameters; returns one score per sample.
template <typename T>
Tensor<T> predictor_forward(const Tensor<T>& pooled, const GeneratedParams<T>& gen) {
    if (pooled.rank() != 2)
        throw DimError("predictor: pooled features must be [N,C], got " + dims_str(pooled.dims()));
    if (pooled.dims()[0] != gen.batch())
        throw ContractError("predictor: batch size " + std::to_string(pooled.dims()[0]) +
                            " does not match generated parameters for " +
                            std::to_string(gen.batch()) + " samples");
    Tensor<T> x = pooled;
    for (std::size_t i = 0; i < ModelConfig::kPredictorLayers; ++i) {
        x = batched_linear(x, gen.weight[i], gen.bias[i]);
        if (i + 1 < ModelConfig::kPredictorLayers) x = relu(x);
    }
    return reshape(x, {pooled.dims()[0]});
}

// Same layer chain with one shared parameter set (the ablation baseline).
template <typename T>
Tensor<T> fixed_predictor_forward(const Tensor<T>& pooled, const PredictorParams<T>& pp) {
    if (pooled.rank() != 2)
        throw DimError("predictor: pooled features must be [N,C], got " + dims_str(pooled.dims()));
    Tensor<T> x = pooled;
    for (std::size_t i = 0; i < ModelConfig::kPredictorLayers; ++i) {
        x = fc_apply(x, pp.layers[i]);
        if (i + 1 < ModelConfig::kPredictorLayers) x = relu(x);
    }
    return reshape(x, {pooled.dims()[0]});
}

// Full pipeline; one backbone pass feeds both the hyper-network and the
// predictor.
template <typename T>
Tensor<T> hysnet_forward(const Tensor<T>& patch, const ModelConfig& cfg, const ModelParams<T>& mp) {
    FeatureMap<T> feature = backbone_forward(patch, cfg, mp.backbone);
    if (mp.mode == Mode::hyper) {
        if (!mp.hyper) throw ContractError("hysnet_forward: hyper parameters missing");
        GeneratedParams<T> gen = hyper_generate(feature, cfg, *mp.hyper);
        return predictor_forward(feature.pooled, gen);
    }
    if (!mp.predictor) throw ContractError("hysnet_forward: fixed predictor parameters missing");
    return fixed_predictor_forward(feature.pooled, *mp.predictor);
}

}  // namespace hysnet
