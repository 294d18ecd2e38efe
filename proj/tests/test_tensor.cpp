#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "hysnet/gradcheck.hpp"
#include "hysnet/tensor.hpp"
#include "test_util.hpp"

using namespace hysnet;
using hysnet::testing::random_tensor;

namespace {

// Independent triple-loop matmul, accumulating in double.
std::vector<double> matmul_oracle(std::span<const float> a, std::span<const float> b, std::size_t m,
                                  std::size_t k, std::size_t n) {
    std::vector<double> out(m * n, 0.0);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t p = 0; p < k; ++p)
                out[i * n + j] += static_cast<double>(a[i * k + p]) * static_cast<double>(b[p * n + j]);
    return out;
}

}  // namespace

TEST_CASE("elementwise add/sub/mul") {
    auto a = TensorF::from_data({2}, {1, 2});
    auto b = TensorF::from_data({2}, {3, 4});
    auto s = add(a, b);
    CHECK(s.data()[0] == 4.0f);
    CHECK(s.data()[1] == 6.0f);
    auto d = sub(a, b);
    CHECK(d.data()[0] == -2.0f);
    CHECK(d.data()[1] == -2.0f);

    auto scaled = mul(a, TensorF::scalar(0.0f));
    CHECK(scaled.dims() == Dims{2});
    CHECK(scaled.data()[0] == 0.0f);
    CHECK(scaled.data()[1] == 0.0f);

    CHECK_THROWS_AS(add(a, TensorF::from_data({3}, {1, 2, 3})), DimError);
}

TEST_CASE("mul backward distributes the product rule") {
    auto a = TensorD::from_data({2}, {1, 2}, true);
    auto b = TensorD::from_data({2}, {3, 5});
    auto prod = mul(a, b);
    backward(sum_all(prod));  // upstream all-ones
    REQUIRE(a.has_grad());
    CHECK(a.grad()[0] == 3.0);
    CHECK(a.grad()[1] == 5.0);
}

TEST_CASE("matmul identity and hand case") {
    auto eye = TensorF::from_data({2, 2}, {1, 0, 0, 1});
    auto m = TensorF::from_data({2, 2}, {1, 2, 3, 4});
    auto p = matmul(eye, m);
    CHECK(std::vector<float>(p.data().begin(), p.data().end()) == std::vector<float>{1, 2, 3, 4});

    auto row = TensorF::from_data({1, 2}, {1, 2});
    auto col = TensorF::from_data({2, 1}, {3, 4});
    CHECK(matmul(row, col).data()[0] == 11.0f);

    CHECK_THROWS_AS(matmul(row, row), DimError);
}

TEST_CASE("matmul matches the triple-loop oracle") {
    Rng rng(42);
    auto a = random_tensor<float>({3, 4}, rng);
    auto b = random_tensor<float>({4, 2}, rng);
    auto p = matmul(a, b);
    const auto expect = matmul_oracle(a.data(), b.data(), 3, 4, 2);
    CHECK(hysnet::testing::max_abs_diff(p.data(), expect) < 1e-6);
}

TEST_CASE("relu forward and backward") {
    auto r = relu(TensorF::from_data({3}, {-1, 0, 2}));
    CHECK(std::vector<float>(r.data().begin(), r.data().end()) == std::vector<float>{0, 0, 2});

    auto x = TensorD::from_data({2}, {-1, 2}, true);
    auto f = mul(relu(x), TensorD::scalar(5.0));
    backward(sum_all(f));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 5.0);

    auto neg = TensorD::from_data({3}, {-3, -2, -1}, true);
    auto g = sum_all(relu(neg));
    CHECK(g.item() == 0.0);
    backward(g);
    for (double v : neg.grad()) CHECK(v == 0.0);
}

TEST_CASE("reduce sum/mean/max") {
    CHECK(sum_all(TensorF::from_data({3}, {1, 2, 3})).item() == 6.0f);
    CHECK(max_all(TensorF::from_data({2, 2}, {1, 5, 3, 2})).item() == 5.0f);

    auto x = TensorD::from_data({4}, {1, 2, 3, 4}, true);
    backward(mean_all(x));
    for (double v : x.grad()) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

    auto m = TensorD::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    auto rows = reduce(m, ReduceKind::sum, {1});
    CHECK(rows.dims() == Dims{2});
    CHECK(rows.data()[0] == 6.0);
    CHECK(rows.data()[1] == 15.0);
    auto cols = reduce(m, ReduceKind::max, {0});
    CHECK(cols.dims() == Dims{3});
    CHECK(cols.data()[2] == 6.0);

    CHECK_THROWS_AS(reduce(m, ReduceKind::sum, {2}), DimError);
    CHECK_THROWS_AS(reduce(m, ReduceKind::sum, {0, 0}), DimError);
}

TEST_CASE("max backward routes to the first argmax on ties") {
    auto x = TensorD::from_data({4}, {2, 7, 7, 1}, true);
    backward(max_all(x));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 1.0);
    CHECK(x.grad()[2] == 0.0);
    CHECK(x.grad()[3] == 0.0);
}

TEST_CASE("backward on analytic cases") {
    auto x = TensorD::from_data({2}, {1, 2}, true);
    backward(sum_all(mul(x, x)));
    CHECK(x.grad()[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(x.grad()[1] == doctest::Approx(4.0).epsilon(1e-12));

    auto y = TensorD::from_data({}, {3}, true);
    backward(add(y, y));
    CHECK(y.grad()[0] == 2.0);  // fan-out accumulates

    CHECK_THROWS_AS(backward(TensorD::from_data({2}, {1, 2}, true)), ContractError);
}

TEST_CASE("accumulation linearity: grad of a+a is twice grad of a") {
    Rng rng(7);
    auto base = random_tensor<double>({3}, rng, -2.0, 2.0, 0.1);
    auto downstream = [](const TensorD& t) { return sum_all(mul(t, mul(t, t))); };

    auto a1 = TensorD::from_data({3}, std::vector<double>(base.data().begin(), base.data().end()), true);
    backward(downstream(add(a1, a1)));
    auto a2 = TensorD::from_data({3}, std::vector<double>(base.data().begin(), base.data().end()), true);
    // d/da f(2a) = 2 f'(2a): compare against the doubled input's direct grad
    auto doubled = TensorD::from_data({3}, [&] {
        std::vector<double> v(base.data().begin(), base.data().end());
        for (auto& e : v) e *= 2.0;
        return v;
    }(), true);
    backward(downstream(doubled));
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(a1.grad()[i] == doctest::Approx(2.0 * doubled.grad()[i]).epsilon(1e-12));
}

TEST_CASE("determinism: identical graphs give bit-identical buffers") {
    auto run = [] {
        Rng rng(11);
        auto x = random_tensor<double>({4, 4}, rng, -1, 1, 0.0, true);
        auto w = random_tensor<double>({4, 4}, rng);
        auto y = sum_all(relu(matmul(x, w)));
        backward(y);
        return std::vector<double>(x.grad().begin(), x.grad().end());
    };
    CHECK(run() == run());
}

TEST_CASE("non-finite results raise instead of propagating") {
    auto big = TensorF::from_data({1}, {3e38f});
    CHECK_THROWS_AS(mul(big, big), NumericError);
    CHECK_THROWS_AS(TensorF::from_data({1}, {std::numeric_limits<float>::quiet_NaN()}), NumericError);
}

TEST_CASE("finite_diff_check: linear, relu away from kink, quadratic") {
    Rng rng(3);
    auto x = random_tensor<double>({4}, rng, -1, 1, 0.1);
    auto lin = finite_diff_check("sum", [](const TensorD& t) { return sum_all(t); }, x);
    CHECK(lin.pass);
    CHECK(lin.max_rel_err < 1e-10);

    auto rel = finite_diff_check("sum-relu", [](const TensorD& t) { return sum_all(relu(t)); }, x,
                                 1e-3, 1e-4);
    CHECK(rel.pass);

    auto quad = finite_diff_check("sum-square",
                                  [](const TensorD& t) { return sum_all(mul(t, t)); },
                                  TensorD::from_data({2}, {1, 2}), 1e-3, 1e-6);
    CHECK(quad.pass);
}

TEST_CASE("finite_diff_check flags a corrupted backward rule") {
    // A deliberately wrong gradient: forward is x*x but backward claims 3x.
    auto corrupt_square = [](const TensorD& t) {
        std::vector<double> out(t.numel());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = t.data()[i] * t.data()[i];
        auto broken = detail::make_result<double>(
            "corrupt-square", t.dims(), std::move(out), {t},
            [=](std::shared_ptr<Node<double>> self) -> std::function<void()> {
                auto tn = t.node();
                Node<double>* sp = self.get();
                return [=]() {
                    tn->ensure_grad();
                    for (std::size_t i = 0; i < sp->value.size(); ++i)
                        tn->grad[i] += 3.0 * tn->value[i] * sp->grad[i];
                };
            });
        return sum_all(broken);
    };
    auto report = finite_diff_check("corrupt-square", corrupt_square,
                                    TensorD::from_data({3}, {1, -2, 0.5}));
    CHECK_FALSE(report.pass);
    CHECK(report.name == "corrupt-square");
    CHECK(report.max_rel_err > 0.1);
}

TEST_CASE("gradcheck property: random composite graphs in f64") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(900 + seed);
        auto x = random_tensor<double>({3, 3}, rng, -1.5, 1.5, 0.05);
        auto w = random_tensor<double>({3, 3}, rng, -1.0, 1.0, 0.05);
        auto f = [&w](const TensorD& t) {
            auto h = relu(matmul(t, w));
            auto g = add(h, mul(t, t));
            return mean_all(mul(g, g));
        };
        auto report = finite_diff_check("composite", f, x);
        INFO("seed ", seed, " err ", report.max_rel_err);
        CHECK(report.pass);
    }
}

TEST_CASE("reshape and slice_cols round gradients through") {
    auto x = TensorD::from_data({2, 3}, {1, 2, 3, 4, 5, 6}, true);
    auto r = reshape(x, {3, 2});
    CHECK(r.dims() == Dims{3, 2});
    auto s = slice_cols(x, 1, 2);
    CHECK(s.dims() == Dims{2, 2});
    CHECK(s.data()[0] == 2.0);
    CHECK(s.data()[3] == 6.0);
    backward(sum_all(s));
    CHECK(x.grad()[0] == 0.0);
    CHECK(x.grad()[1] == 1.0);
    CHECK(x.grad()[5] == 1.0);
    CHECK_THROWS_AS(reshape(x, {5}), DimError);
    CHECK_THROWS_AS(slice_cols(x, 2, 2), DimError);
}
