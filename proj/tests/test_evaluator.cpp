#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "hysnet/evaluator.hpp"
#include "hysnet/metrics.hpp"
#include "hysnet/patches.hpp"
#include "hysnet/pca.hpp"
#include "hysnet/rng.hpp"

using namespace hysnet;

namespace {

// Counting-based average ranks: rank_i = #less + (#equal + 1) / 2.
std::vector<double> rank_oracle(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t less = 0, equal = 0;
        for (double x : v) {
            if (x < v[i]) ++less;
            if (x == v[i]) ++equal;
        }
        r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
    }
    return r;
}

// Pearson through the expanded moments E[xy] - E[x]E[y].
double pearson_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    return cov / std::sqrt(vx * vy);
}

double srocc_oracle(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson_oracle(rank_oracle(x), rank_oracle(y));
}

std::vector<double> random_series(Rng& rng, std::size_t n, bool tie_heavy) {
    std::vector<double> v(n);
    for (auto& e : v)
        e = tie_heavy ? static_cast<double>(rng.uniform_index(std::max<std::size_t>(2, n / 3)))
                      : rng.uniform(-50.0, 50.0);
    return v;
}

}  // namespace

TEST_CASE("srocc: monotone, reversed, tied hand case") {
    CHECK(srocc(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(srocc(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) ==
          doctest::Approx(-1.0).epsilon(1e-12));
    // ranks of x: [1, 2.5, 2.5, 4] -> 4.5 / sqrt(4.5 * 5)
    CHECK(srocc(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}) ==
          doctest::Approx(0.9486832980505138).epsilon(1e-12));
    CHECK_THROWS_AS(srocc(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}),
                    UndefinedMetricError);
    CHECK_THROWS_AS(srocc(std::vector<double>{1, 2}, std::vector<double>{1, 2}), ContractError);
}

TEST_CASE("plcc: affine, reversed, hand case") {
    std::vector<double> x{1, 2, 3, 4};
    std::vector<double> y{3, 5, 7, 9};  // 2x + 1
    CHECK(plcc(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> neg{-1, -2, -3, -4};
    CHECK(plcc(x, neg) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(plcc(std::vector<double>{1, 2, 3, 4}, std::vector<double>{1, 3, 2, 4}) ==
          doctest::Approx(0.8).epsilon(1e-12));
    CHECK_THROWS_AS(plcc(std::vector<double>{2, 2, 2}, std::vector<double>{1, 2, 3}),
                    UndefinedMetricError);
}

TEST_CASE("metrics match independent oracles on random and tie-heavy data") {
    Rng rng(123);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 3 + rng.uniform_index(98);
        const bool ties = trial % 2 == 0;
        auto x = random_series(rng, n, ties);
        auto y = random_series(rng, n, ties);
        double sx = 0;
        for (double v : x) sx += v;
        bool const_x = std::all_of(x.begin(), x.end(), [&](double v) { return v == x[0]; });
        bool const_y = std::all_of(y.begin(), y.end(), [&](double v) { return v == y[0]; });
        if (const_x || const_y) continue;
        INFO("trial ", trial, " n ", n);
        CHECK(std::abs(srocc(x, y) - srocc_oracle(x, y)) < 1e-12);
        CHECK(std::abs(plcc(x, y) - pearson_oracle(x, y)) < 1e-12);
    }
}

TEST_CASE("srocc is invariant under strictly increasing transforms") {
    Rng rng(7);
    auto x = random_series(rng, 40, true);
    auto y = random_series(rng, 40, false);
    const double base = srocc(x, y);
    auto ex = x;
    for (double& v : ex) v = std::exp(v * 0.1);
    auto cy = y;
    for (double& v : cy) v = v * v * v;
    CHECK(std::abs(srocc(ex, y) - base) < 1e-12);
    CHECK(std::abs(srocc(x, cy) - base) < 1e-12);
}

TEST_CASE("plcc is invariant under positive affine transforms") {
    Rng rng(8);
    auto x = random_series(rng, 40, false);
    auto y = random_series(rng, 40, false);
    const double base = plcc(x, y);
    auto ax = x;
    for (double& v : ax) v = 3.5 * v + 11.0;
    auto by = y;
    for (double& v : by) v = 0.25 * v - 2.0;
    CHECK(std::abs(plcc(ax, y) - base) < 1e-12);
    CHECK(std::abs(plcc(x, by) - base) < 1e-12);
}

TEST_CASE("pca: collinear points explained by one component") {
    std::vector<std::vector<double>> rows{{1, 2}, {2, 4}, {3, 6}};
    auto res = pca_project(rows, 2);
    CHECK(res.explained_ratio[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(res.explained_ratio[1] == doctest::Approx(0.0).epsilon(1e-9));
    // direction proportional to (1, 2) / sqrt(5)
    CHECK(res.components[0][0] == doctest::Approx(1.0 / std::sqrt(5.0)).epsilon(1e-9));
    CHECK(res.components[0][1] == doctest::Approx(2.0 / std::sqrt(5.0)).epsilon(1e-9));
}

TEST_CASE("pca: isotropic unit square splits variance evenly") {
    std::vector<std::vector<double>> rows{{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    auto res = pca_project(rows, 2);
    CHECK(res.explained_ratio[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(res.explained_ratio[1] == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("pca projection is invariant to a constant shift of all rows") {
    Rng rng(9);
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 12; ++i)
        rows.push_back({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    auto shifted = rows;
    for (auto& r : shifted)
        for (std::size_t j = 0; j < r.size(); ++j) r[j] += 100.0 + static_cast<double>(j);
    auto a = pca_project(rows, 2);
    auto b = pca_project(shifted, 2);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(a.projection[i][c] == doctest::Approx(b.projection[i][c]).epsilon(1e-6));
}

TEST_CASE("pca reconstruction from all components reproduces centered rows") {
    Rng rng(10);
    const std::size_t d = 4;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 15; ++i) {
        std::vector<double> r(d);
        for (auto& v : r) v = rng.uniform(-2, 2);
        rows.push_back(std::move(r));
    }
    auto res = pca_project(rows, d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double rec = res.mean[j];
            for (std::size_t c = 0; c < d; ++c)
                rec += res.projection[i][c] * res.components[c][j];
            CHECK(std::abs(rec - rows[i][j]) < 1e-8);
        }
}

TEST_CASE("pca input contracts") {
    CHECK_THROWS_AS(pca_project({{1, 2}}, 1), ContractError);
    CHECK_THROWS_AS(pca_project({{1}, {2}}, 1), ContractError);
    CHECK_THROWS_AS(pca_project({{1, 2}, {3, 4}}, 3), ContractError);
}

TEST_CASE("cluster separation: point clusters and indistinguishable labels") {
    std::vector<std::vector<double>> rows{{0, 0}, {0, 0}, {10, 0}, {10, 0}};
    std::vector<std::string> labels{"a", "a", "b", "b"};
    auto stats = cluster_separation(rows, labels);
    CHECK(stats.within == 0.0);
    CHECK(stats.between == doctest::Approx(10.0).epsilon(1e-12));

    // identical clouds per label: within == between
    std::vector<std::vector<double>> same{{0, 0}, {1, 0}, {0, 0}, {1, 0}};
    auto s2 = cluster_separation(same, labels);
    CHECK(s2.within == doctest::Approx(s2.between).epsilon(1e-12));

    CHECK_THROWS_AS(cluster_separation(rows, {"a", "a", "a", "a"}), ContractError);
    CHECK_THROWS_AS(cluster_separation(rows, {"a", "b", "b", "b"}), ContractError);
}

TEST_CASE("evaluate_volume: constant model and singleton grid") {
    // zeroed hyper-network makes the model output exactly 0 for any patch
    ModelConfig cfg;
    cfg.backbone.stem_channels = 4;
    cfg.backbone.stages = {{8, 1, 2}};
    cfg.predictor_dims = {8, 4, 2, 1};
    cfg.hyper_branch = {2, 4};
    cfg.init_seed = 12;
    auto params = init_model_params<float>(cfg, Mode::hyper);
    for (auto& br : params.hyper->branches) {
        auto w = br.fc.weight.mutable_data();
        std::fill(w.begin(), w.end(), 0.0f);
        auto b = br.fc.bias->mutable_data();
        std::fill(b.begin(), b.end(), 0.0f);
    }
    Volume v;
    v.dims = {8, 8, 8};
    v.voxels.assign(512, 0.5f);
    Rng rng(3);
    for (auto& x : v.voxels) x = static_cast<float>(rng.uniform(0.1, 1.0));
    CHECK(evaluate_volume(v, cfg, params, 8, 8) == 0.0);

    // singleton grid equals the single-patch prediction
    auto params2 = init_model_params<float>(cfg, Mode::hyper);
    const double volume_score = evaluate_volume(v, cfg, params2, 8, 8);
    auto patch = patches_to_tensor<float>(normalize(v), {{0, 0, 0}}, 8);
    auto plist = param_list(params2);
    for (auto& t : plist) t.set_requires_grad(false);
    auto single = hysnet_forward(patch, cfg, params2);
    CHECK(volume_score == doctest::Approx(static_cast<double>(single.data()[0])).epsilon(1e-9));
}

TEST_CASE("evaluate_volume equals the hand-computed patch mean") {
    ModelConfig cfg;
    cfg.backbone.stem_channels = 4;
    cfg.backbone.stages = {{8, 1, 2}};
    cfg.predictor_dims = {8, 4, 2, 1};
    cfg.hyper_branch = {2, 4};
    cfg.init_seed = 13;
    auto params = init_model_params<float>(cfg, Mode::hyper);

    Volume v;
    v.dims = {12, 12, 12};
    v.voxels.resize(12 * 12 * 12);
    Rng rng(4);
    for (auto& x : v.voxels) x = static_cast<float>(rng.uniform(0.1, 1.0));

    const auto norm = normalize(v);
    const auto grid = make_patch_grid(norm.dims, 8, 4);
    const auto positions = grid_positions(grid);
    auto plist = param_list(params);
    for (auto& t : plist) t.set_requires_grad(false);
    double mean = 0.0;
    for (const auto& pos : positions) {
        auto patch = patches_to_tensor<float>(norm, {pos}, 8);
        mean += static_cast<double>(hysnet_forward(patch, cfg, params).data()[0]);
    }
    mean /= static_cast<double>(positions.size());
    for (auto& t : plist) t.set_requires_grad(true);

    const double got = evaluate_volume(v, cfg, params, 8, 4, 5 /* odd chunk size */);
    CHECK(got == doctest::Approx(mean).epsilon(1e-9));

    // order invariance: a permuted enumeration yields the same mean
    auto shuffled = positions;
    Rng perm(9);
    perm.shuffle(shuffled);
    for (auto& t : plist) t.set_requires_grad(false);
    double mean_shuffled = 0.0;
    for (const auto& pos : shuffled) {
        auto patch = patches_to_tensor<float>(norm, {pos}, 8);
        mean_shuffled += static_cast<double>(hysnet_forward(patch, cfg, params).data()[0]);
    }
    mean_shuffled /= static_cast<double>(shuffled.size());
    for (auto& t : plist) t.set_requires_grad(true);
    CHECK(got == doctest::Approx(mean_shuffled).epsilon(1e-9));
}
