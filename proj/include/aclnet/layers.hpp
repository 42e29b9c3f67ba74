#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "aclnet/errors.hpp"
#include "aclnet/parallel.hpp"
#include "aclnet/rng.hpp"
#include "aclnet/tensor.hpp"

// Layer primitives. Every forward/backward is a pure function of
// (spec, weights, input) plus an explicit per-call context object, so a loaded
// model can be shared read-only across threads.
//
// All kernels run on rank-4 (N,C,H,W) tensors. The 1-D front-end convolutions
// are the same kernel with kh == 1; time is the W axis.
//
// Convolution means cross-correlation (no kernel flip).

namespace aclnet::nn {

struct ConvSpec {
    int in_ch = 0, out_ch = 0;
    int kh = 1, kw = 1;
    int sh = 1, sw = 1;
    int pad_top = 0, pad_bottom = 0, pad_left = 0, pad_right = 0;
    int groups = 1;
    bool has_bias = false;

    int64_t out_h(int64_t h) const { return (h + pad_top + pad_bottom - kh) / sh + 1; }
    int64_t out_w(int64_t w) const { return (w + pad_left + pad_right - kw) / sw + 1; }

    // weight shape: (out_ch, in_ch/groups, kh, kw)
    Shape weight_shape() const { return Shape{out_ch, in_ch / groups, kh, kw}; }
};

// Same-style padding for a 1-D conv along W: total pad = kernel-1, split
// (k-1)/2 left (rounded down), remainder right. Output length is exactly
// ceil(W/stride), i.e. W/stride for divisible inputs.
inline ConvSpec conv1d_spec(int in_ch, int out_ch, int kernel, int stride, int groups = 1) {
    ConvSpec s;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    s.kh = 1;
    s.kw = kernel;
    s.sh = 1;
    s.sw = stride;
    s.pad_left = (kernel - 1) / 2;
    s.pad_right = (kernel - 1) - s.pad_left;
    s.groups = groups;
    return s;
}

inline ConvSpec conv2d_spec(int in_ch, int out_ch, int kernel, int stride, int padding,
                            int groups = 1, bool bias = false) {
    ConvSpec s;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    s.kh = s.kw = kernel;
    s.sh = s.sw = stride;
    s.pad_top = s.pad_bottom = s.pad_left = s.pad_right = padding;
    s.groups = groups;
    s.has_bias = bias;
    return s;
}

template <typename T>
void check_conv_input(const ConvSpec& spec, const Tensor<T>& x, const Tensor<T>& w,
                      const Tensor<T>& bias) {
    if (x.shape.rank() != 4)
        throw shape_error("conv expects rank-4 (N,C,H,W) input, got " + x.shape.str());
    if (x.shape[1] != spec.in_ch)
        throw shape_error("conv input channels " + std::to_string(x.shape[1]) +
                          " do not match spec in_ch " + std::to_string(spec.in_ch));
    if (w.shape != spec.weight_shape())
        throw shape_error("conv weight shape " + w.shape.str() + " does not match spec " +
                          spec.weight_shape().str());
    if (spec.has_bias && bias.count() != spec.out_ch)
        throw shape_error("conv bias length " + std::to_string(bias.count()) +
                          " does not match out_ch " + std::to_string(spec.out_ch));
    if (x.shape[2] + spec.pad_top + spec.pad_bottom < spec.kh ||
        x.shape[3] + spec.pad_left + spec.pad_right < spec.kw)
        throw shape_error("conv input " + x.shape.str() + " smaller than kernel");
}

template <typename T>
Tensor<T> conv_forward(const ConvSpec& spec, const Tensor<T>& x, const Tensor<T>& w,
                       const Tensor<T>& bias = {}, int threads = 1) {
    check_conv_input(spec, x, w, bias);
    const int64_t N = x.shape[0], H = x.shape[2], W = x.shape[3];
    const int64_t OH = spec.out_h(H), OW = spec.out_w(W);
    const int64_t ic_per_g = spec.in_ch / spec.groups;
    const int64_t oc_per_g = spec.out_ch / spec.groups;
    Tensor<T> y = Tensor<T>::zeros(Shape{N, spec.out_ch, OH, OW});

    // Accumulate in double regardless of T; the float path keeps full
    // gradient-check accuracy that way.
    parallel_for(N * spec.out_ch, threads, [&](int64_t begin, int64_t end) {
        for (int64_t job = begin; job < end; ++job) {
            const int64_t n = job / spec.out_ch;
            const int64_t oc = job % spec.out_ch;
            const int64_t g = oc / oc_per_g;
            const double b = spec.has_bias ? static_cast<double>(bias.data[static_cast<size_t>(oc)]) : 0.0;
            for (int64_t oh = 0; oh < OH; ++oh) {
                const int64_t ih0 = oh * spec.sh - spec.pad_top;
                for (int64_t ow = 0; ow < OW; ++ow) {
                    const int64_t iw0 = ow * spec.sw - spec.pad_left;
                    double acc = b;
                    for (int64_t icg = 0; icg < ic_per_g; ++icg) {
                        const int64_t ic = g * ic_per_g + icg;
                        const T* xrow = &x.data[static_cast<size_t>(((n * spec.in_ch + ic) * H) * W)];
                        const T* wrow =
                            &w.data[static_cast<size_t>(((oc * ic_per_g + icg) * spec.kh) * spec.kw)];
                        for (int64_t i = 0; i < spec.kh; ++i) {
                            const int64_t ih = ih0 + i;
                            if (ih < 0 || ih >= H) continue;
                            const int64_t j0 = std::max<int64_t>(0, -iw0);
                            const int64_t j1 = std::min<int64_t>(spec.kw, W - iw0);
                            const T* xr = xrow + ih * W + iw0;
                            const T* wr = wrow + i * spec.kw;
                            for (int64_t j = j0; j < j1; ++j)
                                acc += static_cast<double>(xr[j]) * static_cast<double>(wr[j]);
                        }
                    }
                    y.at4(n, oc, oh, ow) = static_cast<T>(acc);
                }
            }
        }
    });
    return y;
}

template <typename T>
struct ConvGrads {
    Tensor<T> dx;
    Tensor<T> dw;
    Tensor<T> dbias;  // empty when spec has no bias
};

template <typename T>
ConvGrads<T> conv_backward(const ConvSpec& spec, const Tensor<T>& x, const Tensor<T>& w,
                           const Tensor<T>& dy, int threads = 1) {
    const int64_t N = x.shape[0], H = x.shape[2], W = x.shape[3];
    const int64_t OH = spec.out_h(H), OW = spec.out_w(W);
    if (dy.shape != Shape{N, spec.out_ch, OH, OW})
        throw shape_error("conv_backward: upstream shape " + dy.shape.str() + " does not match");
    const int64_t ic_per_g = spec.in_ch / spec.groups;
    const int64_t oc_per_g = spec.out_ch / spec.groups;

    ConvGrads<T> g;
    g.dx = Tensor<T>::zeros(x.shape);
    g.dw = Tensor<T>::zeros(w.shape);
    if (spec.has_bias) g.dbias = Tensor<T>::zeros(Shape{spec.out_ch});

    // dw (and dbias): each output channel owns its slice. Accumulation runs
    // in a double scratch buffer so the float path keeps gradient-check
    // accuracy through the long cancellation-heavy sums.
    parallel_for(spec.out_ch, threads, [&](int64_t begin, int64_t end) {
        std::vector<double> wacc(static_cast<size_t>(ic_per_g * spec.kh * spec.kw));
        for (int64_t oc = begin; oc < end; ++oc) {
            const int64_t grp = oc / oc_per_g;
            std::fill(wacc.begin(), wacc.end(), 0.0);
            double bacc = 0;
            for (int64_t n = 0; n < N; ++n) {
                for (int64_t oh = 0; oh < OH; ++oh) {
                    const int64_t ih0 = oh * spec.sh - spec.pad_top;
                    for (int64_t ow = 0; ow < OW; ++ow) {
                        const int64_t iw0 = ow * spec.sw - spec.pad_left;
                        const double up = static_cast<double>(dy.at4(n, oc, oh, ow));
                        if (up == 0.0) continue;
                        bacc += up;
                        for (int64_t icg = 0; icg < ic_per_g; ++icg) {
                            const int64_t ic = grp * ic_per_g + icg;
                            for (int64_t i = 0; i < spec.kh; ++i) {
                                const int64_t ih = ih0 + i;
                                if (ih < 0 || ih >= H) continue;
                                const int64_t j0 = std::max<int64_t>(0, -iw0);
                                const int64_t j1 = std::min<int64_t>(spec.kw, W - iw0);
                                const T* xr =
                                    &x.data[static_cast<size_t>(((n * spec.in_ch + ic) * H + ih) * W + iw0)];
                                double* wr = &wacc[static_cast<size_t>((icg * spec.kh + i) * spec.kw)];
                                for (int64_t j = j0; j < j1; ++j) wr[j] += up * static_cast<double>(xr[j]);
                            }
                        }
                    }
                }
            }
            T* wout = &g.dw.data[static_cast<size_t>(oc * ic_per_g * spec.kh * spec.kw)];
            for (size_t i = 0; i < wacc.size(); ++i) wout[i] = static_cast<T>(wacc[i]);
            if (spec.has_bias) g.dbias.data[static_cast<size_t>(oc)] = static_cast<T>(bacc);
        }
    });

    // dx: each example owns its slice, again accumulated in double.
    parallel_for(N, threads, [&](int64_t begin, int64_t end) {
        std::vector<double> xacc(static_cast<size_t>(spec.in_ch * H * W));
        for (int64_t n = begin; n < end; ++n) {
            std::fill(xacc.begin(), xacc.end(), 0.0);
            for (int64_t oc = 0; oc < spec.out_ch; ++oc) {
                const int64_t grp = oc / oc_per_g;
                for (int64_t oh = 0; oh < OH; ++oh) {
                    const int64_t ih0 = oh * spec.sh - spec.pad_top;
                    for (int64_t ow = 0; ow < OW; ++ow) {
                        const int64_t iw0 = ow * spec.sw - spec.pad_left;
                        const double up = static_cast<double>(dy.at4(n, oc, oh, ow));
                        if (up == 0.0) continue;
                        for (int64_t icg = 0; icg < ic_per_g; ++icg) {
                            const int64_t ic = grp * ic_per_g + icg;
                            for (int64_t i = 0; i < spec.kh; ++i) {
                                const int64_t ih = ih0 + i;
                                if (ih < 0 || ih >= H) continue;
                                const int64_t j0 = std::max<int64_t>(0, -iw0);
                                const int64_t j1 = std::min<int64_t>(spec.kw, W - iw0);
                                double* xr = &xacc[static_cast<size_t>((ic * H + ih) * W + iw0)];
                                const T* wr = &w.data[static_cast<size_t>(
                                    ((oc * ic_per_g + icg) * spec.kh + i) * spec.kw)];
                                for (int64_t j = j0; j < j1; ++j) xr[j] += up * static_cast<double>(wr[j]);
                            }
                        }
                    }
                }
            }
            T* xout = &g.dx.data[static_cast<size_t>(n * spec.in_ch * H * W)];
            for (size_t i = 0; i < xacc.size(); ++i) xout[i] = static_cast<T>(xacc[i]);
        }
    });
    return g;
}

enum class Mode { Train, Infer };

template <typename T>
struct BatchNormCtx {
    bool valid = false;
    Tensor<T> xhat;
    std::vector<T> invstd;  // per channel
};

// Batch normalization over (N,H,W) per channel. Train mode normalizes by
// batch statistics (biased variance) and updates the running stats; infer
// mode uses the running stats.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                            Tensor<T>& running_mean, Tensor<T>& running_var, Mode mode,
                            T eps = T(1e-5), T momentum = T(0.1),
                            BatchNormCtx<T>* ctx = nullptr, int threads = 1) {
    if (x.shape.rank() != 4) throw shape_error("batchnorm expects rank-4 input");
    const int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    if (gamma.count() != C || beta.count() != C || running_mean.count() != C ||
        running_var.count() != C)
        throw shape_error("batchnorm parameter length does not match channel count " +
                          std::to_string(C));
    Tensor<T> y = Tensor<T>::zeros(x.shape);
    if (ctx && mode == Mode::Train) {
        ctx->valid = true;
        ctx->xhat = Tensor<T>::zeros(x.shape);
        ctx->invstd.assign(static_cast<size_t>(C), T(0));
    }
    const int64_t m = N * H * W;

    parallel_for(C, threads, [&](int64_t begin, int64_t end) {
        for (int64_t c = begin; c < end; ++c) {
            T mean, invstd;
            if (mode == Mode::Train) {
                double sum = 0;
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t h = 0; h < H; ++h)
                        for (int64_t w = 0; w < W; ++w) sum += static_cast<double>(x.at4(n, c, h, w));
                mean = static_cast<T>(sum / static_cast<double>(m));
                double var = 0;
                for (int64_t n = 0; n < N; ++n)
                    for (int64_t h = 0; h < H; ++h)
                        for (int64_t w = 0; w < W; ++w) {
                            double d = static_cast<double>(x.at4(n, c, h, w)) - static_cast<double>(mean);
                            var += d * d;
                        }
                var /= static_cast<double>(m);
                invstd = static_cast<T>(1.0 / std::sqrt(var + static_cast<double>(eps)));
                // Running stats: mean as-is, variance unbiased when possible.
                double var_unbiased =
                    m > 1 ? var * static_cast<double>(m) / static_cast<double>(m - 1) : var;
                running_mean.data[static_cast<size_t>(c)] =
                    (T(1) - momentum) * running_mean.data[static_cast<size_t>(c)] + momentum * mean;
                running_var.data[static_cast<size_t>(c)] =
                    (T(1) - momentum) * running_var.data[static_cast<size_t>(c)] +
                    momentum * static_cast<T>(var_unbiased);
            } else {
                mean = running_mean.data[static_cast<size_t>(c)];
                invstd = T(1) / std::sqrt(running_var.data[static_cast<size_t>(c)] + eps);
            }
            const T gc = gamma.data[static_cast<size_t>(c)];
            const T bc = beta.data[static_cast<size_t>(c)];
            for (int64_t n = 0; n < N; ++n)
                for (int64_t h = 0; h < H; ++h)
                    for (int64_t w = 0; w < W; ++w) {
                        T xh = (x.at4(n, c, h, w) - mean) * invstd;
                        if (ctx && mode == Mode::Train) {
                            ctx->xhat.at4(n, c, h, w) = xh;
                        }
                        y.at4(n, c, h, w) = gc * xh + bc;
                    }
            if (ctx && mode == Mode::Train) ctx->invstd[static_cast<size_t>(c)] = invstd;
        }
    });
    return y;
}

template <typename T>
struct BatchNormGrads {
    Tensor<T> dx;
    Tensor<T> dgamma;
    Tensor<T> dbeta;
};

template <typename T>
BatchNormGrads<T> batchnorm_backward(const BatchNormCtx<T>& ctx, const Tensor<T>& gamma,
                                     const Tensor<T>& dy, int threads = 1) {
    if (!ctx.valid) throw state_error("batchnorm_backward called without a train-mode forward");
    const int64_t N = dy.shape[0], C = dy.shape[1], H = dy.shape[2], W = dy.shape[3];
    if (ctx.xhat.shape != dy.shape)
        throw shape_error("batchnorm_backward: upstream shape mismatch");
    BatchNormGrads<T> g;
    g.dx = Tensor<T>::zeros(dy.shape);
    g.dgamma = Tensor<T>::zeros(Shape{C});
    g.dbeta = Tensor<T>::zeros(Shape{C});
    const T m = static_cast<T>(N * H * W);

    parallel_for(C, threads, [&](int64_t begin, int64_t end) {
        for (int64_t c = begin; c < end; ++c) {
            double sum_dy = 0, sum_dy_xhat = 0;
            for (int64_t n = 0; n < N; ++n)
                for (int64_t h = 0; h < H; ++h)
                    for (int64_t w = 0; w < W; ++w) {
                        double u = static_cast<double>(dy.at4(n, c, h, w));
                        sum_dy += u;
                        sum_dy_xhat += u * static_cast<double>(ctx.xhat.at4(n, c, h, w));
                    }
            g.dbeta.data[static_cast<size_t>(c)] = static_cast<T>(sum_dy);
            g.dgamma.data[static_cast<size_t>(c)] = static_cast<T>(sum_dy_xhat);
            const double gc = static_cast<double>(gamma.data[static_cast<size_t>(c)]);
            const double istd = static_cast<double>(ctx.invstd[static_cast<size_t>(c)]);
            const double k = gc * istd / static_cast<double>(m);
            for (int64_t n = 0; n < N; ++n)
                for (int64_t h = 0; h < H; ++h)
                    for (int64_t w = 0; w < W; ++w) {
                        double u = static_cast<double>(dy.at4(n, c, h, w));
                        double xh = static_cast<double>(ctx.xhat.at4(n, c, h, w));
                        g.dx.at4(n, c, h, w) =
                            static_cast<T>(k * (static_cast<double>(m) * u - sum_dy - xh * sum_dy_xhat));
                    }
        }
    });
    return g;
}

template <typename T>
struct ReluCtx {
    bool valid = false;
    std::vector<uint8_t> mask;
};

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x, ReluCtx<T>* ctx = nullptr) {
    Tensor<T> y = x;
    if (ctx) {
        ctx->valid = true;
        ctx->mask.assign(x.data.size(), 0);
    }
    for (size_t i = 0; i < y.data.size(); ++i) {
        if (y.data[i] > T(0)) {
            if (ctx) ctx->mask[i] = 1;
        } else {
            y.data[i] = T(0);
        }
    }
    return y;
}

template <typename T>
Tensor<T> relu_backward(const ReluCtx<T>& ctx, const Tensor<T>& dy) {
    if (!ctx.valid) throw state_error("relu_backward called without forward context");
    if (ctx.mask.size() != dy.data.size()) throw shape_error("relu_backward: shape mismatch");
    Tensor<T> dx = dy;
    for (size_t i = 0; i < dx.data.size(); ++i)
        if (!ctx.mask[i]) dx.data[i] = T(0);
    return dx;
}

struct PoolSpec {
    int kh = 2, kw = 2;
    int sh = 2, sw = 2;  // non-overlapping: stride == kernel
};

template <typename T>
struct MaxPoolCtx {
    bool valid = false;
    Shape in_shape;
    std::vector<int64_t> argmax;  // flat (h*W + w) per output element
};

// Floor semantics: tail positions that do not fill a full window are dropped.
// An extent smaller than the kernel still yields one window, truncated at the
// boundary, so the network accepts any input length down to a single frame.
template <typename T>
Tensor<T> maxpool_forward(const PoolSpec& p, const Tensor<T>& x, MaxPoolCtx<T>* ctx = nullptr) {
    if (x.shape.rank() != 4) throw shape_error("maxpool expects rank-4 input");
    const int64_t N = x.shape[0], C = x.shape[1], H = x.shape[2], W = x.shape[3];
    const int64_t OH = H >= p.kh ? (H - p.kh) / p.sh + 1 : 1;
    const int64_t OW = W >= p.kw ? (W - p.kw) / p.sw + 1 : 1;
    Tensor<T> y = Tensor<T>::zeros(Shape{N, C, OH, OW});
    if (ctx) {
        ctx->valid = true;
        ctx->in_shape = x.shape;
        ctx->argmax.assign(static_cast<size_t>(N * C * OH * OW), 0);
    }
    int64_t out_idx = 0;
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c)
            for (int64_t oh = 0; oh < OH; ++oh)
                for (int64_t ow = 0; ow < OW; ++ow, ++out_idx) {
                    const int64_t h0 = oh * p.sh;
                    const int64_t w0 = ow * p.sw;
                    const int64_t h1 = std::min<int64_t>(h0 + p.kh, H);
                    const int64_t w1 = std::min<int64_t>(w0 + p.kw, W);
                    T best = x.at4(n, c, h0, w0);
                    int64_t best_pos = h0 * W + w0;
                    for (int64_t h = h0; h < h1; ++h)
                        for (int64_t w = w0; w < w1; ++w) {
                            T v = x.at4(n, c, h, w);
                            if (v > best) {
                                best = v;
                                best_pos = h * W + w;
                            }
                        }
                    y.data[static_cast<size_t>(out_idx)] = best;
                    if (ctx) ctx->argmax[static_cast<size_t>(out_idx)] = best_pos;
                }
    return y;
}

template <typename T>
Tensor<T> maxpool_backward(const MaxPoolCtx<T>& ctx, const Tensor<T>& dy) {
    if (!ctx.valid) throw state_error("maxpool_backward called without forward context");
    if (ctx.argmax.size() != dy.data.size()) throw shape_error("maxpool_backward: shape mismatch");
    Tensor<T> dx = Tensor<T>::zeros(ctx.in_shape);
    const int64_t C = ctx.in_shape[1], H = ctx.in_shape[2], W = ctx.in_shape[3];
    const int64_t OHW = dy.shape[2] * dy.shape[3];
    for (size_t i = 0; i < dy.data.size(); ++i) {
        const int64_t nc = static_cast<int64_t>(i) / OHW;
        const int64_t n = nc / C, c = nc % C;
        dx.data[static_cast<size_t>(((n * C + c) * H) * W + ctx.argmax[i])] += dy.data[i];
    }
    return dx;
}

// Per-channel mean over all spatial positions, whatever their count. This is
// what lets one trained model consume arbitrary-length inputs.
template <typename T>
Tensor<T> global_avgpool_forward(const Tensor<T>& x) {
    if (x.shape.rank() != 4) throw shape_error("global_avgpool expects rank-4 input");
    const int64_t N = x.shape[0], C = x.shape[1], HW = x.shape[2] * x.shape[3];
    Tensor<T> y = Tensor<T>::zeros(Shape{N, C});
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            double sum = 0;
            const T* p = &x.data[static_cast<size_t>((n * C + c) * HW)];
            for (int64_t i = 0; i < HW; ++i) sum += static_cast<double>(p[i]);
            y.data[static_cast<size_t>(n * C + c)] = static_cast<T>(sum / static_cast<double>(HW));
        }
    return y;
}

template <typename T>
Tensor<T> global_avgpool_backward(const Shape& in_shape, const Tensor<T>& dy) {
    const int64_t N = in_shape[0], C = in_shape[1], HW = in_shape[2] * in_shape[3];
    if (dy.shape != Shape{N, C}) throw shape_error("global_avgpool_backward: shape mismatch");
    Tensor<T> dx = Tensor<T>::zeros(in_shape);
    for (int64_t n = 0; n < N; ++n)
        for (int64_t c = 0; c < C; ++c) {
            const T g = dy.data[static_cast<size_t>(n * C + c)] / static_cast<T>(HW);
            T* p = &dx.data[static_cast<size_t>((n * C + c) * HW)];
            for (int64_t i = 0; i < HW; ++i) p[i] = g;
        }
    return dx;
}

template <typename T>
struct DropoutCtx {
    bool valid = false;
    std::vector<T> mult;  // empty means identity (p == 0 or infer mode)
};

// Inverted scaling: kept activations are divided by (1-p) so inference is the
// identity with no rescaling.
template <typename T>
Tensor<T> dropout_forward(T p, const Tensor<T>& x, Mode mode, Rng* rng,
                          DropoutCtx<T>* ctx = nullptr) {
    if (ctx) {
        ctx->valid = true;
        ctx->mult.clear();
    }
    if (mode == Mode::Infer || p <= T(0)) return x;
    if (!rng) throw state_error("dropout in train mode requires an rng");
    Tensor<T> y = x;
    const T keep_scale = T(1) / (T(1) - p);
    if (ctx) ctx->mult.assign(x.data.size(), T(0));
    for (size_t i = 0; i < y.data.size(); ++i) {
        if (rng->uniform() < static_cast<double>(p)) {
            y.data[i] = T(0);
        } else {
            y.data[i] *= keep_scale;
            if (ctx) ctx->mult[i] = keep_scale;
        }
    }
    return y;
}

template <typename T>
Tensor<T> dropout_backward(const DropoutCtx<T>& ctx, const Tensor<T>& dy) {
    if (!ctx.valid) throw state_error("dropout_backward called without forward context");
    if (ctx.mult.empty()) return dy;  // identity pass
    if (ctx.mult.size() != dy.data.size()) throw shape_error("dropout_backward: shape mismatch");
    Tensor<T> dx = dy;
    for (size_t i = 0; i < dx.data.size(); ++i) dx.data[i] *= ctx.mult[i];
    return dx;
}

// Row softmax over (N,K), max-subtracted for stability.
template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& x) {
    if (x.shape.rank() != 2) throw shape_error("softmax expects rank-2 (N,K) input");
    const int64_t N = x.shape[0], K = x.shape[1];
    Tensor<T> p = x;
    for (int64_t n = 0; n < N; ++n) {
        T* row = &p.data[static_cast<size_t>(n * K)];
        T mx = row[0];
        for (int64_t k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        T sum = 0;
        for (int64_t k = 0; k < K; ++k) {
            row[k] = std::exp(row[k] - mx);
            sum += row[k];
        }
        for (int64_t k = 0; k < K; ++k) row[k] /= sum;
    }
    return p;
}

// Single-vector convenience used by the inference path.
template <typename T>
std::vector<T> softmax(const std::vector<T>& x) {
    Tensor<T> t(Shape{1, static_cast<int64_t>(x.size())}, x);
    return softmax_rows(t).data;
}

template <typename T>
Tensor<T> softmax_backward(const Tensor<T>& probs, const Tensor<T>& dy) {
    if (probs.shape != dy.shape) throw shape_error("softmax_backward: shape mismatch");
    const int64_t N = probs.shape[0], K = probs.shape[1];
    Tensor<T> dx = Tensor<T>::zeros(probs.shape);
    for (int64_t n = 0; n < N; ++n) {
        const T* p = &probs.data[static_cast<size_t>(n * K)];
        const T* u = &dy.data[static_cast<size_t>(n * K)];
        T dot = 0;
        for (int64_t k = 0; k < K; ++k) dot += u[k] * p[k];
        T* d = &dx.data[static_cast<size_t>(n * K)];
        for (int64_t k = 0; k < K; ++k) d[k] = p[k] * (u[k] - dot);
    }
    return dx;
}

}  // namespace aclnet::nn
