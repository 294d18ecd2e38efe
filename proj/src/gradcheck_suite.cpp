#include "hysnet/gradcheck_suite.hpp"

#include "hysnet/model.hpp"
#include "hysnet/nn_ops.hpp"
#include "hysnet/optim.hpp"
#include "hysnet/rng.hpp"

namespace hysnet {

namespace {

TensorD rand_t(Dims dims, Rng& rng, double lo, double hi, double margin = 0.0) {
    std::vector<double> data(numel_of(dims));
    for (auto& v : data) {
        double x = rng.uniform(lo, hi);
        while (margin > 0.0 && std::abs(x) < margin) x = rng.uniform(lo, hi);
        v = x;
    }
    return TensorD::from_data(std::move(dims), std::move(data));
}

// Entries pairwise separated by at least 0.03 (a shuffled jittered ramp), so
// max reductions keep their argmax under +-h probes.
TensorD rand_distinct(Dims dims, Rng& rng) {
    std::vector<double> data(numel_of(dims));
    for (std::size_t i = 0; i < data.size(); ++i)
        data[i] = 0.05 * static_cast<double>(i) + rng.uniform(-0.01, 0.01);
    rng.shuffle(data);
    return TensorD::from_data(std::move(dims), std::move(data));
}

// Norm off for the end-to-end checks (the gradient-check mode); the norm op
// is checked directly and inside the residual block above.
ModelConfig gradcheck_config() {
    ModelConfig cfg;
    cfg.backbone.stem_channels = 2;
    cfg.backbone.stages = {{4, 1, 2}};
    cfg.predictor_dims = {4, 3, 2, 1};
    cfg.hyper_branch = {2, 4};
    cfg.norm_mode = NormMode::none;
    cfg.init_seed = 77;
    return cfg;
}

}  // namespace

std::vector<GradCheckReport> run_gradcheck_suite(std::uint64_t seed, double h, double tol) {
    std::vector<GradCheckReport> reports;
    Rng rng = Rng::substream(seed, "gradcheck");
    auto run = [&](std::string name, const std::function<TensorD(const TensorD&)>& f,
                   const TensorD& x) {
        reports.push_back(finite_diff_check(std::move(name), f, x, h, tol));
    };

    // elementwise
    {
        auto b = rand_t({3, 3}, rng, -1, 1);
        run("add", [&](const TensorD& t) { return sum_all(mul(add(t, b), add(t, b))); },
            rand_t({3, 3}, rng, -1, 1));
        run("sub", [&](const TensorD& t) { return sum_all(mul(sub(t, b), sub(t, b))); },
            rand_t({3, 3}, rng, -1, 1));
        run("mul", [&](const TensorD& t) { return sum_all(mul(t, b)); }, rand_t({3, 3}, rng, -1, 1));
        run("mul/rank0-broadcast", [&](const TensorD& t) { return sum_all(mul(b, reshape(slice_cols(t, 0, 1), {}))); },
            rand_t({1, 1}, rng, 0.2, 1.0));
    }

    // matmul
    {
        auto b = rand_t({4, 2}, rng, -1, 1);
        auto a = rand_t({3, 4}, rng, -1, 1);
        run("matmul/a", [&](const TensorD& t) { return sum_all(mul(matmul(t, b), matmul(t, b))); }, a);
        run("matmul/b", [&](const TensorD& t) { return sum_all(mul(matmul(a, t), matmul(a, t))); }, b);
    }

    // relu and reductions
    run("relu", [](const TensorD& t) { return sum_all(mul(relu(t), relu(t))); },
        rand_t({4, 4}, rng, -1, 1, 0.05));
    run("reduce/sum", [](const TensorD& t) { return sum_all(mul(reduce(t, ReduceKind::sum, {1}), reduce(t, ReduceKind::sum, {1}))); },
        rand_t({3, 4}, rng, -1, 1));
    run("reduce/mean", [](const TensorD& t) { return sum_all(mul(reduce(t, ReduceKind::mean, {0}), reduce(t, ReduceKind::mean, {0}))); },
        rand_t({3, 4}, rng, -1, 1));
    run("reduce/max", [](const TensorD& t) { return sum_all(mul(reduce(t, ReduceKind::max, {1}), reduce(t, ReduceKind::max, {1}))); },
        rand_distinct({3, 5}, rng));

    // conv3d
    {
        const auto spec = conv_spec(2, 2, 3, 2, 1);
        auto input = rand_t({1, 2, 4, 4, 4}, rng, -1, 1);
        LayerParams<double> p{rand_t({2, 2, 3, 3, 3}, rng, -0.5, 0.5), rand_t({2}, rng, -0.2, 0.2)};
        run("conv3d/input", [&](const TensorD& t) {
                auto y = conv3d(t, spec, p);
                return sum_all(mul(y, y));
            }, input);
        run("conv3d/weight", [&](const TensorD& t) {
                LayerParams<double> q{t, p.bias};
                auto y = conv3d(input, spec, q);
                return sum_all(mul(y, y));
            }, p.weight);
        run("conv3d/bias", [&](const TensorD& t) {
                LayerParams<double> q{p.weight, t};
                auto y = conv3d(input, spec, q);
                return sum_all(mul(y, y));
            }, *p.bias);
        const auto spec1 = conv_spec(2, 3, 1, 1, 0);
        LayerParams<double> p1{rand_t({3, 2, 1, 1, 1}, rng, -0.5, 0.5), rand_t({3}, rng, -0.2, 0.2)};
        run("conv3d/1x1x1", [&](const TensorD& t) {
                auto y = conv3d(t, spec1, p1);
                return sum_all(mul(y, y));
            }, input);
    }

    // pooling
    run("global_max_pool", [](const TensorD& t) {
            auto y = global_max_pool(t);
            return sum_all(mul(y, y));
        }, rand_distinct({2, 2, 2, 2, 2}, rng));
    run("global_avg_pool", [](const TensorD& t) {
            auto y = global_avg_pool(t);
            return sum_all(mul(y, y));
        }, rand_t({2, 2, 2, 2, 2}, rng, -1, 1));

    // group norm
    {
        auto input = rand_t({2, 4, 2, 2, 2}, rng, -1.5, 1.5);
        auto scale = rand_t({4}, rng, 0.5, 1.5);
        auto shift = rand_t({4}, rng, -0.5, 0.5);
        run("group_norm/input", [&](const TensorD& t) {
                LayerParams<double> p{scale, shift};
                auto y = group_norm(t, 2, p, 1e-3);
                return sum_all(mul(y, y));
            }, input);
        run("group_norm/scale", [&](const TensorD& t) {
                LayerParams<double> p{t, shift};
                auto y = group_norm(input, 2, p, 1e-3);
                return sum_all(mul(y, y));
            }, scale);
        run("group_norm/shift", [&](const TensorD& t) {
                LayerParams<double> p{scale, t};
                auto y = group_norm(input, 2, p, 1e-3);
                return sum_all(mul(y, y));
            }, shift);
    }

    // fully connected
    {
        auto input = rand_t({3, 4}, rng, -1, 1);
        auto w = rand_t({2, 4}, rng, -1, 1);
        auto b = rand_t({2}, rng, -0.5, 0.5);
        run("fc_apply/input", [&](const TensorD& t) {
                LayerParams<double> p{w, b};
                auto y = fc_apply(t, p);
                return sum_all(mul(y, y));
            }, input);
        run("fc_apply/weight", [&](const TensorD& t) {
                LayerParams<double> p{t, b};
                auto y = fc_apply(input, p);
                return sum_all(mul(y, y));
            }, w);
        run("fc_apply/bias", [&](const TensorD& t) {
                LayerParams<double> p{w, t};
                auto y = fc_apply(input, p);
                return sum_all(mul(y, y));
            }, b);
        // the hyper-network path: weights produced by an upstream function
        run("fc_apply/generated-weight", [&](const TensorD& t) {
                LayerParams<double> p{mul(t, t), b};
                auto y = fc_apply(input, p);
                return sum_all(mul(y, y));
            }, rand_t({2, 4}, rng, -1, 1, 0.05));
    }

    // batched linear
    {
        auto input = rand_t({2, 3}, rng, -1, 1);
        auto w = rand_t({2, 2, 3}, rng, -1, 1);
        auto b = rand_t({2, 2}, rng, -0.5, 0.5);
        run("batched_linear/input", [&](const TensorD& t) {
                auto y = batched_linear(t, w, b);
                return sum_all(mul(y, y));
            }, input);
        run("batched_linear/weight", [&](const TensorD& t) {
                auto y = batched_linear(input, t, b);
                return sum_all(mul(y, y));
            }, w);
        run("batched_linear/bias", [&](const TensorD& t) {
                auto y = batched_linear(input, w, t);
                return sum_all(mul(y, y));
            }, b);
    }

    // residual block. Norm is off here (the gradient-check mode): group
    // normalization centers pre-activations on the relu kink, so +-h probes
    // through norm+relu cross it and corrupt the central difference. The norm
    // op itself is checked directly above, and once more on the block's
    // scale/shift below with positive-margin inputs.
    {
        ResidualBlockConfig rc;
        rc.in_channels = 2;
        rc.out_channels = 2;
        rc.stride = 2;
        rc.norm = NormSettings{NormMode::none, 2, 1e-2};
        auto input = rand_t({1, 2, 4, 4, 4}, rng, 0.1, 1.0);
        ResidualBlockParams<double> p;
        p.conv1 = LayerParams<double>{rand_t({2, 2, 3, 3, 3}, rng, 0.05, 0.3), TensorD::full({2}, 0.1)};
        p.conv2 = LayerParams<double>{rand_t({2, 2, 3, 3, 3}, rng, 0.05, 0.3), TensorD::full({2}, 0.1)};
        p.proj = LayerParams<double>{rand_t({2, 2, 1, 1, 1}, rng, 0.05, 0.3), TensorD::full({2}, 0.1)};
        run("residual_block/conv1.weight", [&](const TensorD& t) {
                ResidualBlockParams<double> q = p;
                q.conv1.weight = t;
                auto y = residual_block(input, rc, q);
                return sum_all(mul(y, y));
            }, p.conv1.weight);
        run("residual_block/conv2.bias", [&](const TensorD& t) {
                ResidualBlockParams<double> q = p;
                q.conv2.bias = t;
                auto y = residual_block(input, rc, q);
                return sum_all(mul(y, y));
            }, *p.conv2.bias);
        run("residual_block/input", [&](const TensorD& t) {
                auto y = residual_block(t, rc, p);
                return sum_all(mul(y, y));
            }, input);

        // norm inside the block, probed on its affine parameters; the large
        // shift keeps every relu pre-activation clear of the kink under +-h
        ResidualBlockConfig rcn = rc;
        rcn.norm = NormSettings{NormMode::group, 2, 1e-2};
        ResidualBlockParams<double> pn = p;
        pn.norm1 = LayerParams<double>{TensorD::full({2}, 1.0), TensorD::full({2}, 5.0)};
        pn.norm2 = LayerParams<double>{TensorD::full({2}, 1.0), TensorD::full({2}, 5.0)};
        pn.proj_norm = LayerParams<double>{TensorD::full({2}, 1.0), TensorD::full({2}, 5.0)};
        run("residual_block/norm2.scale", [&](const TensorD& t) {
                ResidualBlockParams<double> q = pn;
                q.norm2->weight = t;
                auto y = residual_block(input, rcn, q);
                return sum_all(mul(y, y));
            }, pn.norm2->weight);
    }

    // hyper-network branch and predictor through the real model structs
    {
        const auto cfg = gradcheck_config();
        auto params = init_model_params<double>(cfg, Mode::hyper);
        // positive generated biases keep every predictor relu path alive, so
        // no branch gets a vacuous all-zero gradient
        for (auto& br : params.hyper->branches) {
            auto b = br.fc.bias->mutable_data();
            std::fill(b.begin(), b.end(), 0.2);
        }
        auto patch = rand_t({2, 1, 8, 8, 8}, rng, 0.05, 1.0);
        auto target = rand_t({2}, rng, 2.0, 8.0);
        auto loss_with = [&](ModelParams<double>& mp) {
            auto scores = hysnet_forward(patch, cfg, mp);
            return l1_loss(scores, target);
        };
        // conv weights sit before the branch's max pooling, so probe them on
        // a feature map with one dominant voxel per sample: the argmax cannot
        // flip under +-h and the kink stays out of the difference
        {
            const std::size_t C = cfg.feature_channels();
            std::vector<double> fm(2 * C * 8);
            for (std::size_t i = 0; i < fm.size(); ++i) fm[i] = 0.1 + 0.04 * ((i * 7) % 11);
            for (std::size_t n = 0; n < 2; ++n)
                for (std::size_t c = 0; c < C; ++c) fm[(n * C + c) * 8] = 3.0 + 0.2 * static_cast<double>(c);
            FeatureMap<double> feature;
            feature.map = TensorD::from_data({2, C, 2, 2, 2}, std::move(fm));
            feature.pooled = global_avg_pool(feature.map);
            HyperParams<double> hp = *params.hyper;
            for (auto& br : hp.branches) {
                auto fill_pos = [&](Tensor<double>& t, double lo, double hi) {
                    auto d = t.mutable_data();
                    for (auto& v : d) v = rng.uniform(lo, hi);
                };
                fill_pos(br.conv1.weight, 0.05, 0.4);
                fill_pos(*br.conv1.bias, 0.1, 0.2);
                fill_pos(br.conv2.weight, 0.05, 0.4);
                fill_pos(*br.conv2.bias, 0.1, 0.2);
                fill_pos(br.fc.weight, 0.02, 0.2);
                fill_pos(*br.fc.bias, 0.1, 0.2);
            }
            auto branch_loss = [&](const HyperParams<double>& h_params) {
                auto gen = hyper_generate(feature, cfg, h_params);
                return sum_all(predictor_forward(feature.pooled, gen));
            };
            run("hyper_branch/conv1.weight", [&](const TensorD& t) {
                    HyperParams<double> q = hp;
                    q.branches[0].conv1.weight = t;
                    return branch_loss(q);
                }, hp.branches[0].conv1.weight);
            run("hyper_branch/conv2.weight", [&](const TensorD& t) {
                    HyperParams<double> q = hp;
                    q.branches[1].conv2.weight = t;
                    return branch_loss(q);
                }, hp.branches[1].conv2.weight);
        }
        // fc parameters act after the pooling, so they are safe to probe
        // through the full pipeline
        run("hyper_branch/fc.weight", [&](const TensorD& t) {
                auto mp = params;
                mp.hyper->branches[1].fc.weight = t;
                return loss_with(mp);
            }, params.hyper->branches[1].fc.weight);
        run("hyper_branch/fc.bias", [&](const TensorD& t) {
                auto mp = params;
                mp.hyper->branches[2].fc.bias = t;
                return loss_with(mp);
            }, *params.hyper->branches[2].fc.bias);
        // Backbone gradients through the whole pipeline. Positive weights,
        // inputs, and biases keep every relu pre-activation above a margin no
        // +-h probe can erase, and the fixed-mode average pooling avoids
        // max-pool argmax flips; the full-depth chain rule is still exercised.
        auto fixed_params = init_model_params<double>(cfg, Mode::fixed);
        auto positive = [&](Tensor<double>& t, double lo, double hi) {
            auto d = t.mutable_data();
            for (auto& v : d) v = rng.uniform(lo, hi);
        };
        visit_params(fixed_params, [&](const std::string& name, Tensor<double>& t) {
            if (name.find("bias") != std::string::npos)
                positive(t, 0.1, 0.2);
            else
                positive(t, 0.01, 0.1);
        });
        run("hysnet/stem.weight", [&](const TensorD& t) {
                auto mp = fixed_params;
                mp.backbone.stem.weight = t;
                return loss_with(mp);
            }, fixed_params.backbone.stem.weight);

        // positive parameters: every relu stays in its linear region
        auto pooled = rand_t({2, 4}, rng, 0.1, 1.0);
        auto gen_w0 = rand_t({2, 3, 4}, rng, 0.1, 1.0);
        GeneratedParams<double> gen;
        gen.weight = {gen_w0, rand_t({2, 2, 3}, rng, 0.1, 1.0), rand_t({2, 1, 2}, rng, 0.1, 1.0)};
        gen.bias = {rand_t({2, 3}, rng, 0.1, 0.5), rand_t({2, 2}, rng, 0.1, 0.5),
                    rand_t({2, 1}, rng, 0.1, 0.5)};
        gen.flat = {TensorD::zeros({2, 1}), TensorD::zeros({2, 1}), TensorD::zeros({2, 1})};
        run("predictor/theta_x", [&](const TensorD& t) {
                GeneratedParams<double> g = gen;
                g.weight[0] = t;
                return sum_all(predictor_forward(pooled, g));
            }, gen_w0);
        run("predictor/pooled", [&](const TensorD& t) {
                return sum_all(predictor_forward(t, gen));
            }, pooled);

        PredictorParams<double> fixed_theta;
        for (std::size_t i = 0; i < ModelConfig::kPredictorLayers; ++i) {
            fixed_theta.layers[i].weight =
                rand_t({cfg.predictor_dims[i + 1], cfg.predictor_dims[i]}, rng, 0.1, 0.8);
            fixed_theta.layers[i].bias = rand_t({cfg.predictor_dims[i + 1]}, rng, 0.1, 0.3);
        }
        run("fixed_predictor/theta", [&](const TensorD& t) {
                PredictorParams<double> pp = fixed_theta;
                pp.layers[0].weight = t;
                return sum_all(fixed_predictor_forward(pooled, pp));
            }, fixed_theta.layers[0].weight);
    }

    // l1 loss, away from ties
    {
        auto target = rand_t({4}, rng, 0.0, 1.0);
        std::vector<double> shifted(target.data().begin(), target.data().end());
        for (auto& v : shifted) v += 0.5;
        run("l1_loss", [&](const TensorD& t) { return l1_loss(t, target); },
            TensorD::from_data({4}, std::move(shifted)));
    }

    return reports;
}

}  // namespace hysnet
