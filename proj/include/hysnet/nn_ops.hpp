#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "hysnet/parallel.hpp"
#include "hysnet/tensor.hpp"

namespace hysnet {

// Weight plus optional bias of one layer. For normalization layers the pair
// is reused as (scale, shift).
template <typename T>
struct LayerParams {
    Tensor<T> weight;
    std::optional<Tensor<T>> bias;
};

enum class NormMode { none, group };

struct NormSettings {
    NormMode mode = NormMode::group;
    std::size_t group_cap = 4;  // groups = largest divisor of C that is <= cap
    double eps = 1e-5;
};

// Largest group count <= cap that divides the channel count.
inline std::size_t norm_groups_for(std::size_t channels, std::size_t cap) {
    std::size_t g = std::min(cap, channels);
    while (g > 1 && channels % g != 0) --g;
    return std::max<std::size_t>(g, 1);
}

struct Conv3dSpec {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::array<std::size_t, 3> kernel{1, 1, 1};
    std::array<std::size_t, 3> stride{1, 1, 1};
    std::array<std::size_t, 3> padding{0, 0, 0};
    bool has_bias = true;

    std::array<std::size_t, 3> out_extent(const std::array<std::size_t, 3>& in) const {
        std::array<std::size_t, 3> out{};
        for (int i = 0; i < 3; ++i) {
            if (kernel[i] == 0 || stride[i] == 0)
                throw ConfigError("conv3d: kernel and stride extents must be positive");
            if (in[i] + 2 * padding[i] < kernel[i])
                throw DimError("conv3d: extent " + std::to_string(in[i]) + " with padding " +
                               std::to_string(padding[i]) + " is smaller than kernel " +
                               std::to_string(kernel[i]));
            out[i] = (in[i] + 2 * padding[i] - kernel[i]) / stride[i] + 1;
        }
        return out;
    }
};

inline Conv3dSpec conv_spec(std::size_t in_ch, std::size_t out_ch, std::size_t k, std::size_t s,
                            std::size_t p, bool bias = true) {
    return Conv3dSpec{in_ch, out_ch, {k, k, k}, {s, s, s}, {p, p, p}, bias};
}

namespace detail {

// Dot product with four independent accumulator chains. The fixed partial-sum
// order is part of the program, so the compiler may vectorize it without
// reassociation and results stay bit-deterministic.
template <typename T>
inline double dot4(const T* a, const T* b, std::size_t n) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        a0 += static_cast<double>(a[t]) * static_cast<double>(b[t]);
        a1 += static_cast<double>(a[t + 1]) * static_cast<double>(b[t + 1]);
        a2 += static_cast<double>(a[t + 2]) * static_cast<double>(b[t + 2]);
        a3 += static_cast<double>(a[t + 3]) * static_cast<double>(b[t + 3]);
    }
    double r = (a0 + a1) + (a2 + a3);
    for (; t < n; ++t) r += static_cast<double>(a[t]) * static_cast<double>(b[t]);
    return r;
}

// dot4 with a stride on the first operand.
template <typename T>
inline double dot4_strided(const T* a, std::size_t stride, const T* b, std::size_t n) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        a0 += static_cast<double>(a[t * stride]) * static_cast<double>(b[t]);
        a1 += static_cast<double>(a[(t + 1) * stride]) * static_cast<double>(b[t + 1]);
        a2 += static_cast<double>(a[(t + 2) * stride]) * static_cast<double>(b[t + 2]);
        a3 += static_cast<double>(a[(t + 3) * stride]) * static_cast<double>(b[t + 3]);
    }
    double r = (a0 + a1) + (a2 + a3);
    for (; t < n; ++t) r += static_cast<double>(a[t * stride]) * static_cast<double>(b[t]);
    return r;
}

template <typename T>
inline double sum4(const T* a, std::size_t n) {
    double a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        a0 += static_cast<double>(a[t]);
        a1 += static_cast<double>(a[t + 1]);
        a2 += static_cast<double>(a[t + 2]);
        a3 += static_cast<double>(a[t + 3]);
    }
    double r = (a0 + a1) + (a2 + a3);
    for (; t < n; ++t) r += static_cast<double>(a[t]);
    return r;
}

// dot4/sum4 with accumulation in T itself: used on gradient paths, where
// f32 accumulation is fine and twice as wide.
template <typename T>
inline T dot4_fast(const T* a, const T* b, std::size_t n) {
    T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        a0 += a[t] * b[t];
        a1 += a[t + 1] * b[t + 1];
        a2 += a[t + 2] * b[t + 2];
        a3 += a[t + 3] * b[t + 3];
    }
    T r = (a0 + a1) + (a2 + a3);
    for (; t < n; ++t) r += a[t] * b[t];
    return r;
}

template <typename T>
inline T dot4_fast_strided(const T* a, std::size_t stride, const T* b, std::size_t n) {
    T a0 = 0, a1 = 0, a2 = 0, a3 = 0;
    std::size_t t = 0;
    for (; t + 4 <= n; t += 4) {
        a0 += a[t * stride] * b[t];
        a1 += a[(t + 1) * stride] * b[t + 1];
        a2 += a[(t + 2) * stride] * b[t + 2];
        a3 += a[(t + 3) * stride] * b[t + 3];
    }
    T r = (a0 + a1) + (a2 + a3);
    for (; t < n; ++t) r += a[t * stride] * b[t];
    return r;
}

// Valid output-coordinate range [lo, hi] for one axis and one kernel tap:
// in = out*stride - pad + tap must land inside [0, extent).
struct TapRange {
    std::ptrdiff_t lo = 0;
    std::ptrdiff_t hi = -1;
    bool empty() const { return hi < lo; }
};

inline TapRange tap_range(std::size_t extent, std::size_t out_extent, std::size_t stride,
                          std::size_t pad, std::size_t tap) {
    const auto s = static_cast<std::ptrdiff_t>(stride);
    const auto shift = static_cast<std::ptrdiff_t>(pad) - static_cast<std::ptrdiff_t>(tap);
    TapRange r;
    r.lo = shift > 0 ? (shift + s - 1) / s : 0;
    const std::ptrdiff_t top = static_cast<std::ptrdiff_t>(extent) - 1 + shift;
    r.hi = top < 0 ? -1 : top / s;
    r.hi = std::min<std::ptrdiff_t>(r.hi, static_cast<std::ptrdiff_t>(out_extent) - 1);
    return r;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv3d: zero-padded cross-correlation on [N, C, D, H, W]
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv3d(const Tensor<T>& input, const Conv3dSpec& spec, const LayerParams<T>& params) {
    if (input.rank() != 5)
        throw DimError("conv3d: input must be [N,C,D,H,W], got " + dims_str(input.dims()));
    const std::size_t N = input.dims()[0], C = input.dims()[1];
    const std::array<std::size_t, 3> in_ext{input.dims()[2], input.dims()[3], input.dims()[4]};
    if (C != spec.in_channels)
        throw DimError("conv3d: input has " + std::to_string(C) + " channels, spec expects " +
                       std::to_string(spec.in_channels));
    const Dims want_w{spec.out_channels, spec.in_channels, spec.kernel[0], spec.kernel[1], spec.kernel[2]};
    if (params.weight.dims() != want_w)
        throw DimError("conv3d: weight dims " + dims_str(params.weight.dims()) + ", expected " +
                       dims_str(want_w));
    if (spec.has_bias != params.bias.has_value())
        throw DimError("conv3d: bias presence does not match spec");
    if (params.bias && params.bias->dims() != Dims{spec.out_channels})
        throw DimError("conv3d: bias dims " + dims_str(params.bias->dims()) + ", expected [" +
                       std::to_string(spec.out_channels) + "]");

    const auto out_ext = spec.out_extent(in_ext);
    const std::size_t OC = spec.out_channels;
    const std::size_t D = in_ext[0], H = in_ext[1], W = in_ext[2];
    const std::size_t OD = out_ext[0], OH = out_ext[1], OW = out_ext[2];
    const std::size_t s_in = D * H * W, s_out = OD * OH * OW;
    const std::size_t KD = spec.kernel[0], KH = spec.kernel[1], KW = spec.kernel[2];
    const std::size_t k3 = KD * KH * KW;
    const auto sd = spec.stride[0], sh = spec.stride[1], sw = spec.stride[2];
    const auto pd = spec.padding[0], ph = spec.padding[1], pw = spec.padding[2];

    const T* in_ptr = input.data().data();
    const T* w_ptr = params.weight.data().data();
    const T* b_ptr = params.bias ? params.bias->data().data() : nullptr;

    std::vector<T> out(N * OC * s_out);
    // Accumulate in f64 so results do not depend on summation order details
    // beyond the fixed tap order, and stay well inside oracle tolerances.
    parallel_for(N * OC, [&](std::size_t j0, std::size_t j1) {
        std::vector<double> acc(s_out);
        for (std::size_t j = j0; j < j1; ++j) {
            const std::size_t n = j / OC, oc = j % OC;
            std::fill(acc.begin(), acc.end(), b_ptr ? static_cast<double>(b_ptr[oc]) : 0.0);
            for (std::size_t ic = 0; ic < C; ++ic) {
                const T* in_base = in_ptr + (n * C + ic) * s_in;
                const T* w_base = w_ptr + (oc * C + ic) * k3;
                for (std::size_t kd = 0; kd < KD; ++kd) {
                    const auto rd = detail::tap_range(D, OD, sd, pd, kd);
                    if (rd.empty()) continue;
                    for (std::size_t kh = 0; kh < KH; ++kh) {
                        const auto rh = detail::tap_range(H, OH, sh, ph, kh);
                        if (rh.empty()) continue;
                        for (std::size_t kw = 0; kw < KW; ++kw) {
                            const auto rw = detail::tap_range(W, OW, sw, pw, kw);
                            if (rw.empty()) continue;
                            const double wv = static_cast<double>(w_base[(kd * KH + kh) * KW + kw]);
                            const std::size_t own = static_cast<std::size_t>(rw.hi - rw.lo) + 1;
                            for (auto od = rd.lo; od <= rd.hi; ++od) {
                                const std::size_t id = static_cast<std::size_t>(od) * sd - pd + kd;
                                for (auto oh = rh.lo; oh <= rh.hi; ++oh) {
                                    const std::size_t ih = static_cast<std::size_t>(oh) * sh - ph + kh;
                                    const std::size_t iw0 = static_cast<std::size_t>(rw.lo) * sw - pw + kw;
                                    const T* in_row = in_base + (id * H + ih) * W + iw0;
                                    double* out_row = acc.data() + (static_cast<std::size_t>(od) * OH +
                                                                    static_cast<std::size_t>(oh)) * OW + rw.lo;
                                    if (sw == 1) {
                                        for (std::size_t t = 0; t < own; ++t)
                                            out_row[t] += wv * static_cast<double>(in_row[t]);
                                    } else {
                                        for (std::size_t t = 0; t < own; ++t)
                                            out_row[t] += wv * static_cast<double>(in_row[t * sw]);
                                    }
                                }
                            }
                        }
                    }
                }
            }
            T* dst = out.data() + j * s_out;
            for (std::size_t t = 0; t < s_out; ++t) dst[t] = static_cast<T>(acc[t]);
        }
    });

    std::vector<Tensor<T>> inputs{input, params.weight};
    if (params.bias) inputs.push_back(*params.bias);
    return detail::make_result<T>(
        "conv3d", Dims{N, OC, OD, OH, OW}, std::move(out), std::move(inputs),
        [=, weight = params.weight, bias = params.bias](std::shared_ptr<Node<T>> self)
            -> std::function<void()> {
            auto in_node = input.node();
            auto w_node = weight.node();
            auto b_node = bias ? bias->node() : nullptr;
            Node<T>* sp = self.get();
            return [=]() {
                const T* gout = sp->grad.data();
                if (in_node->requires_grad) {
                    in_node->ensure_grad();
                    T* gin = in_node->grad.data();
                    const T* w = w_node->value.data();
                    parallel_for(N * C, [&](std::size_t j0, std::size_t j1) {
                        std::vector<T> acc(s_in);
                        for (std::size_t j = j0; j < j1; ++j) {
                            const std::size_t n = j / C, ic = j % C;
                            std::fill(acc.begin(), acc.end(), T(0));
                            for (std::size_t oc = 0; oc < OC; ++oc) {
                                const T* g_base = gout + (n * OC + oc) * s_out;
                                const T* w_base = w + (oc * C + ic) * k3;
                                for (std::size_t kd = 0; kd < KD; ++kd) {
                                    const auto rd = detail::tap_range(D, OD, sd, pd, kd);
                                    if (rd.empty()) continue;
                                    for (std::size_t kh = 0; kh < KH; ++kh) {
                                        const auto rh = detail::tap_range(H, OH, sh, ph, kh);
                                        if (rh.empty()) continue;
                                        for (std::size_t kw = 0; kw < KW; ++kw) {
                                            const auto rw = detail::tap_range(W, OW, sw, pw, kw);
                                            if (rw.empty()) continue;
                                            const T wv = w_base[(kd * KH + kh) * KW + kw];
                                            const std::size_t own =
                                                static_cast<std::size_t>(rw.hi - rw.lo) + 1;
                                            for (auto od = rd.lo; od <= rd.hi; ++od) {
                                                const std::size_t id =
                                                    static_cast<std::size_t>(od) * sd - pd + kd;
                                                for (auto oh = rh.lo; oh <= rh.hi; ++oh) {
                                                    const std::size_t ih =
                                                        static_cast<std::size_t>(oh) * sh - ph + kh;
                                                    const std::size_t iw0 =
                                                        static_cast<std::size_t>(rw.lo) * sw - pw + kw;
                                                    T* a_row = acc.data() + (id * H + ih) * W + iw0;
                                                    const T* g_row =
                                                        g_base + (static_cast<std::size_t>(od) * OH +
                                                                  static_cast<std::size_t>(oh)) * OW + rw.lo;
                                                    if (sw == 1) {
                                                        for (std::size_t t = 0; t < own; ++t)
                                                            a_row[t] += wv * g_row[t];
                                                    } else {
                                                        for (std::size_t t = 0; t < own; ++t)
                                                            a_row[t * sw] += wv * g_row[t];
                                                    }
                                                }
                                            }
                                        }
                                    }
                                }
                            }
                            T* dst = gin + j * s_in;
                            for (std::size_t t = 0; t < s_in; ++t) dst[t] += acc[t];
                        }
                    });
                }
                if (w_node->requires_grad) {
                    w_node->ensure_grad();
                    T* gw = w_node->grad.data();
                    const T* in = in_node->value.data();
                    parallel_for(OC, [&](std::size_t oc0, std::size_t oc1) {
                        for (std::size_t oc = oc0; oc < oc1; ++oc) {
                            for (std::size_t ic = 0; ic < C; ++ic) {
                                for (std::size_t kd = 0; kd < KD; ++kd) {
                                    const auto rd = detail::tap_range(D, OD, sd, pd, kd);
                                    if (rd.empty()) continue;
                                    for (std::size_t kh = 0; kh < KH; ++kh) {
                                        const auto rh = detail::tap_range(H, OH, sh, ph, kh);
                                        if (rh.empty()) continue;
                                        for (std::size_t kw = 0; kw < KW; ++kw) {
                                            const auto rw = detail::tap_range(W, OW, sw, pw, kw);
                                            if (rw.empty()) continue;
                                            const std::size_t own =
                                                static_cast<std::size_t>(rw.hi - rw.lo) + 1;
                                            double acc = 0.0;
                                            for (std::size_t n = 0; n < N; ++n) {
                                                const T* g_base = gout + (n * OC + oc) * s_out;
                                                const T* in_base = in + (n * C + ic) * s_in;
                                                for (auto od = rd.lo; od <= rd.hi; ++od) {
                                                    const std::size_t id =
                                                        static_cast<std::size_t>(od) * sd - pd + kd;
                                                    for (auto oh = rh.lo; oh <= rh.hi; ++oh) {
                                                        const std::size_t ih =
                                                            static_cast<std::size_t>(oh) * sh - ph + kh;
                                                        const std::size_t iw0 =
                                                            static_cast<std::size_t>(rw.lo) * sw - pw + kw;
                                                        const T* g_row =
                                                            g_base + (static_cast<std::size_t>(od) * OH +
                                                                      static_cast<std::size_t>(oh)) * OW + rw.lo;
                                                        const T* in_row = in_base + (id * H + ih) * W + iw0;
                                                        acc += sw == 1
                                                                   ? static_cast<double>(detail::dot4_fast(in_row, g_row, own))
                                                                   : static_cast<double>(detail::dot4_fast_strided(in_row, sw, g_row, own));
                                                    }
                                                }
                                            }
                                            gw[(oc * C + ic) * k3 + (kd * KH + kh) * KW + kw] +=
                                                static_cast<T>(acc);
                                        }
                                    }
                                }
                            }
                        }
                    });
                }
                if (b_node && b_node->requires_grad) {
                    b_node->ensure_grad();
                    T* gb = b_node->grad.data();
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t oc = 0; oc < OC; ++oc)
                            gb[oc] += static_cast<T>(detail::sum4(gout + (n * OC + oc) * s_out, s_out));
                }
            };
        });
}

// ---------------------------------------------------------------------------
// global pooling over the spatial axes of [N, C, D, H, W]
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> global_max_pool(const Tensor<T>& input) {
    if (input.rank() != 5)
        throw DimError("global_max_pool: input must be [N,C,D,H,W], got " + dims_str(input.dims()));
    const std::size_t N = input.dims()[0], C = input.dims()[1];
    const std::size_t S = input.dims()[2] * input.dims()[3] * input.dims()[4];
    const auto in = input.data();
    std::vector<T> out(N * C);
    std::vector<std::size_t> argmax(N * C);
    for (std::size_t j = 0; j < N * C; ++j) {
        const T* base = in.data() + j * S;
        std::size_t best = 0;
        for (std::size_t t = 1; t < S; ++t)
            if (base[t] > base[best]) best = t;  // first maximiser wins ties
        out[j] = base[best];
        argmax[j] = j * S + best;
    }
    return detail::make_result<T>(
        "global_max_pool", Dims{N, C}, std::move(out), {input},
        [=, argmax = std::move(argmax)](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto in_node = input.node();
            Node<T>* sp = self.get();
            return [=]() {
                in_node->ensure_grad();
                for (std::size_t j = 0; j < sp->value.size(); ++j)
                    in_node->grad[argmax[j]] += sp->grad[j];
            };
        });
}

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input) {
    if (input.rank() != 5)
        throw DimError("global_avg_pool: input must be [N,C,D,H,W], got " + dims_str(input.dims()));
    const std::size_t N = input.dims()[0], C = input.dims()[1];
    const std::size_t S = input.dims()[2] * input.dims()[3] * input.dims()[4];
    const auto in = input.data();
    std::vector<T> out(N * C);
    for (std::size_t j = 0; j < N * C; ++j) {
        out[j] = static_cast<T>(detail::sum4(in.data() + j * S, S) / static_cast<double>(S));
    }
    return detail::make_result<T>(
        "global_avg_pool", Dims{N, C}, std::move(out), {input},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto in_node = input.node();
            Node<T>* sp = self.get();
            return [=]() {
                in_node->ensure_grad();
                const T inv = T(1) / static_cast<T>(S);
                for (std::size_t j = 0; j < sp->value.size(); ++j) {
                    const T g = sp->grad[j] * inv;
                    T* dst = in_node->grad.data() + j * S;
                    for (std::size_t t = 0; t < S; ++t) dst[t] += g;
                }
            };
        });
}

// ---------------------------------------------------------------------------
// group normalization: per-sample, per-group standardization + channel affine
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> group_norm(const Tensor<T>& input, std::size_t groups, const LayerParams<T>& params,
                     double eps = 1e-5) {
    if (input.rank() != 5)
        throw DimError("group_norm: input must be [N,C,D,H,W], got " + dims_str(input.dims()));
    const std::size_t N = input.dims()[0], C = input.dims()[1];
    const std::size_t S = input.dims()[2] * input.dims()[3] * input.dims()[4];
    if (groups == 0 || C % groups != 0)
        throw ConfigError("group_norm: " + std::to_string(C) + " channels not divisible by " +
                          std::to_string(groups) + " groups");
    if (params.weight.dims() != Dims{C} || !params.bias || params.bias->dims() != Dims{C})
        throw DimError("group_norm: scale/shift must both have dims [" + std::to_string(C) + "]");
    const std::size_t cpg = C / groups;
    const std::size_t m = cpg * S;  // elements standardized together

    const auto in = input.data();
    const auto scale = params.weight.data();
    const auto shift = params.bias->data();
    std::vector<T> out(in.size());
    auto xhat = std::make_shared<std::vector<T>>(in.size());
    auto inv_std = std::make_shared<std::vector<T>>(N * groups);
    for (std::size_t n = 0; n < N; ++n) {
        for (std::size_t g = 0; g < groups; ++g) {
            const std::size_t base = (n * C + g * cpg) * S;
            double mean = 0.0;
            for (std::size_t t = 0; t < m; ++t) mean += static_cast<double>(in[base + t]);
            mean /= static_cast<double>(m);
            double var = 0.0;
            for (std::size_t t = 0; t < m; ++t) {
                const double d = static_cast<double>(in[base + t]) - mean;
                var += d * d;
            }
            var /= static_cast<double>(m);
            const double inv = 1.0 / std::sqrt(var + eps);
            (*inv_std)[n * groups + g] = static_cast<T>(inv);
            for (std::size_t c = 0; c < cpg; ++c) {
                const std::size_t ch = g * cpg + c;
                const T* src = in.data() + base + c * S;
                T* xh = xhat->data() + base + c * S;
                T* dst = out.data() + base + c * S;
                for (std::size_t t = 0; t < S; ++t) {
                    xh[t] = static_cast<T>((static_cast<double>(src[t]) - mean) * inv);
                    dst[t] = scale[ch] * xh[t] + shift[ch];
                }
            }
        }
    }
    return detail::make_result<T>(
        "group_norm", input.dims(), std::move(out),
        {input, params.weight, *params.bias},
        [=, scale_t = params.weight, shift_t = *params.bias](std::shared_ptr<Node<T>> self)
            -> std::function<void()> {
            auto in_node = input.node();
            auto sc_node = scale_t.node();
            auto sh_node = shift_t.node();
            Node<T>* sp = self.get();
            return [=]() {
                const T* gout = sp->grad.data();
                const T* xh = xhat->data();
                if (in_node->requires_grad) {
                    in_node->ensure_grad();
                    T* gin = in_node->grad.data();
                    const T* sc = sc_node->value.data();
                    for (std::size_t n = 0; n < N; ++n) {
                        for (std::size_t g = 0; g < groups; ++g) {
                            const std::size_t base = (n * C + g * cpg) * S;
                            const double inv = static_cast<double>((*inv_std)[n * groups + g]);
                            double s1 = 0.0, s2 = 0.0;
                            for (std::size_t c = 0; c < cpg; ++c) {
                                const double w = static_cast<double>(sc[g * cpg + c]);
                                const T* g_row = gout + base + c * S;
                                const T* x_row = xh + base + c * S;
                                for (std::size_t t = 0; t < S; ++t) {
                                    const double dxh = w * static_cast<double>(g_row[t]);
                                    s1 += dxh;
                                    s2 += dxh * static_cast<double>(x_row[t]);
                                }
                            }
                            s1 /= static_cast<double>(m);
                            s2 /= static_cast<double>(m);
                            for (std::size_t c = 0; c < cpg; ++c) {
                                const double w = static_cast<double>(sc[g * cpg + c]);
                                const T* g_row = gout + base + c * S;
                                const T* x_row = xh + base + c * S;
                                T* d_row = gin + base + c * S;
                                for (std::size_t t = 0; t < S; ++t) {
                                    const double dxh = w * static_cast<double>(g_row[t]);
                                    d_row[t] += static_cast<T>(
                                        inv * (dxh - s1 - static_cast<double>(x_row[t]) * s2));
                                }
                            }
                        }
                    }
                }
                if (sc_node->requires_grad) {
                    sc_node->ensure_grad();
                    for (std::size_t c = 0; c < C; ++c) {
                        double acc = 0.0;
                        for (std::size_t n = 0; n < N; ++n) {
                            const std::size_t base = (n * C + c) * S;
                            for (std::size_t t = 0; t < S; ++t)
                                acc += static_cast<double>(gout[base + t]) *
                                       static_cast<double>(xh[base + t]);
                        }
                        sc_node->grad[c] += static_cast<T>(acc);
                    }
                }
                if (sh_node->requires_grad) {
                    sh_node->ensure_grad();
                    for (std::size_t c = 0; c < C; ++c) {
                        double acc = 0.0;
                        for (std::size_t n = 0; n < N; ++n) {
                            const std::size_t base = (n * C + c) * S;
                            for (std::size_t t = 0; t < S; ++t)
                                acc += static_cast<double>(gout[base + t]);
                        }
                        sh_node->grad[c] += static_cast<T>(acc);
                    }
                }
            };
        });
}

// ---------------------------------------------------------------------------
// fully-connected application: input[N,F] . weight[G,F]^T + bias[G]
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> fc_apply(const Tensor<T>& input, const LayerParams<T>& params) {
    if (input.rank() != 2)
        throw DimError("fc_apply: input must be [N,F], got " + dims_str(input.dims()));
    if (params.weight.rank() != 2)
        throw DimError("fc_apply: weight must be [G,F], got " + dims_str(params.weight.dims()));
    const std::size_t N = input.dims()[0], F = input.dims()[1];
    const std::size_t G = params.weight.dims()[0];
    if (params.weight.dims()[1] != F)
        throw DimError("fc_apply: weight expects " + std::to_string(params.weight.dims()[1]) +
                       " input features, input has " + std::to_string(F));
    if (!params.bias || params.bias->dims() != Dims{G})
        throw DimError("fc_apply: bias must have dims [" + std::to_string(G) + "]");

    const auto in = input.data();
    const auto w = params.weight.data();
    const auto b = params.bias->data();
    std::vector<T> out(N * G);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t g = 0; g < G; ++g) {
            const T* in_row = in.data() + n * F;
            const T* w_row = w.data() + g * F;
            out[n * G + g] = static_cast<T>(static_cast<double>(b[g]) + detail::dot4(in_row, w_row, F));
        }
    return detail::make_result<T>(
        "fc_apply", Dims{N, G}, std::move(out), {input, params.weight, *params.bias},
        [=, weight = params.weight, bias = *params.bias](std::shared_ptr<Node<T>> self)
            -> std::function<void()> {
            auto in_node = input.node();
            auto w_node = weight.node();
            auto b_node = bias.node();
            Node<T>* sp = self.get();
            return [=]() {
                const T* gout = sp->grad.data();
                if (in_node->requires_grad) {
                    in_node->ensure_grad();
                    const T* w = w_node->value.data();
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t f = 0; f < F; ++f) {
                            double acc = 0.0;
                            for (std::size_t g = 0; g < G; ++g)
                                acc += static_cast<double>(gout[n * G + g]) *
                                       static_cast<double>(w[g * F + f]);
                            in_node->grad[n * F + f] += static_cast<T>(acc);
                        }
                }
                if (w_node->requires_grad) {
                    w_node->ensure_grad();
                    const T* in = in_node->value.data();
                    for (std::size_t g = 0; g < G; ++g)
                        for (std::size_t f = 0; f < F; ++f) {
                            double acc = 0.0;
                            for (std::size_t n = 0; n < N; ++n)
                                acc += static_cast<double>(gout[n * G + g]) *
                                       static_cast<double>(in[n * F + f]);
                            w_node->grad[g * F + f] += static_cast<T>(acc);
                        }
                }
                if (b_node->requires_grad) {
                    b_node->ensure_grad();
                    for (std::size_t g = 0; g < G; ++g) {
                        double acc = 0.0;
                        for (std::size_t n = 0; n < N; ++n)
                            acc += static_cast<double>(gout[n * G + g]);
                        b_node->grad[g] += static_cast<T>(acc);
                    }
                }
            };
        });
}

// ---------------------------------------------------------------------------
// per-sample linear layer: each sample applies its own weight and bias
// (the consumer of hyper-network-generated parameters)
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> batched_linear(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
    if (input.rank() != 2 || weight.rank() != 3 || bias.rank() != 2)
        throw DimError("batched_linear: expects input [N,F], weight [N,G,F], bias [N,G]");
    const std::size_t N = input.dims()[0], F = input.dims()[1];
    const std::size_t G = weight.dims()[1];
    if (weight.dims()[0] != N || bias.dims()[0] != N)
        throw ContractError("batched_linear: batch sizes disagree: input " + std::to_string(N) +
                            ", weight " + std::to_string(weight.dims()[0]) + ", bias " +
                            std::to_string(bias.dims()[0]));
    if (weight.dims()[2] != F || bias.dims()[1] != G)
        throw DimError("batched_linear: weight " + dims_str(weight.dims()) + " / bias " +
                       dims_str(bias.dims()) + " do not match input " + dims_str(input.dims()));

    const auto in = input.data();
    const auto w = weight.data();
    const auto b = bias.data();
    std::vector<T> out(N * G);
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t g = 0; g < G; ++g) {
            const T* in_row = in.data() + n * F;
            const T* w_row = w.data() + (n * G + g) * F;
            out[n * G + g] =
                static_cast<T>(static_cast<double>(b[n * G + g]) + detail::dot4(in_row, w_row, F));
        }
    return detail::make_result<T>(
        "batched_linear", Dims{N, G}, std::move(out), {input, weight, bias},
        [=](std::shared_ptr<Node<T>> self) -> std::function<void()> {
            auto in_node = input.node();
            auto w_node = weight.node();
            auto b_node = bias.node();
            Node<T>* sp = self.get();
            return [=]() {
                const T* gout = sp->grad.data();
                if (in_node->requires_grad) {
                    in_node->ensure_grad();
                    const T* w = w_node->value.data();
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t f = 0; f < F; ++f) {
                            double acc = 0.0;
                            for (std::size_t g = 0; g < G; ++g)
                                acc += static_cast<double>(gout[n * G + g]) *
                                       static_cast<double>(w[(n * G + g) * F + f]);
                            in_node->grad[n * F + f] += static_cast<T>(acc);
                        }
                }
                if (w_node->requires_grad) {
                    w_node->ensure_grad();
                    const T* in = in_node->value.data();
                    for (std::size_t n = 0; n < N; ++n)
                        for (std::size_t g = 0; g < G; ++g) {
                            const T gv = gout[n * G + g];
                            T* dst = w_node->grad.data() + (n * G + g) * F;
                            const T* in_row = in + n * F;
                            for (std::size_t f = 0; f < F; ++f) dst[f] += gv * in_row[f];
                        }
                }
                if (b_node->requires_grad) {
                    b_node->ensure_grad();
                    for (std::size_t j = 0; j < N * G; ++j) b_node->grad[j] += gout[j];
                }
            };
        });
}

// ---------------------------------------------------------------------------
// residual block (basic-block style)
// ---------------------------------------------------------------------------

struct ResidualBlockConfig {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t stride = 1;
    NormSettings norm;

    bool needs_projection() const { return stride != 1 || in_channels != out_channels; }
};

template <typename T>
struct ResidualBlockParams {
    LayerParams<T> conv1, conv2;
    std::optional<LayerParams<T>> norm1, norm2;
    std::optional<LayerParams<T>> proj, proj_norm;
};

template <typename T>
Tensor<T> apply_norm(const Tensor<T>& t, const NormSettings& norm,
                     const std::optional<LayerParams<T>>& params) {
    if (norm.mode == NormMode::none) return t;
    if (!params) throw ConfigError("norm: parameters missing for group mode");
    const std::size_t c = t.dims()[1];
    return group_norm(t, norm_groups_for(c, norm.group_cap), *params, norm.eps);
}

// main path conv3x3x3(stride) -> norm -> relu -> conv3x3x3 -> norm, plus an
// identity or projected skip; relu after the join.
template <typename T>
Tensor<T> residual_block(const Tensor<T>& input, const ResidualBlockConfig& cfg,
                         const ResidualBlockParams<T>& params) {
    const auto spec1 = conv_spec(cfg.in_channels, cfg.out_channels, 3, cfg.stride, 1,
                                 params.conv1.bias.has_value());
    const auto spec2 =
        conv_spec(cfg.out_channels, cfg.out_channels, 3, 1, 1, params.conv2.bias.has_value());
    Tensor<T> main = conv3d(input, spec1, params.conv1);
    main = apply_norm(main, cfg.norm, params.norm1);
    main = relu(main);
    main = conv3d(main, spec2, params.conv2);
    main = apply_norm(main, cfg.norm, params.norm2);

    Tensor<T> skip = input;
    if (cfg.needs_projection()) {
        if (!params.proj)
            throw ConfigError("residual_block: projection required for stride " +
                              std::to_string(cfg.stride) + ", channels " +
                              std::to_string(cfg.in_channels) + "->" +
                              std::to_string(cfg.out_channels));
        const auto pspec = conv_spec(cfg.in_channels, cfg.out_channels, 1, cfg.stride, 0,
                                     params.proj->bias.has_value());
        skip = conv3d(input, pspec, *params.proj);
        skip = apply_norm(skip, cfg.norm, params.proj_norm);
    }
    return relu(add(main, skip));
}

}  // namespace hysnet
