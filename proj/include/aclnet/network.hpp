#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "aclnet/graph.hpp"
#include "aclnet/layers.hpp"
#include "aclnet/rng.hpp"
#include "aclnet/tensor.hpp"

namespace aclnet {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.1;

// Parameters and running stats for one conv block. Standard blocks use the
// first group of fields; depthwise separable blocks also use the pw_* set.
template <typename T>
struct ConvBlockParams {
    Tensor<T> w;
    Tensor<T> bias;  // class head only
    Tensor<T> bn_gamma, bn_beta, bn_mean, bn_var;
    Tensor<T> pw_w;
    Tensor<T> pw_bn_gamma, pw_bn_beta, pw_bn_mean, pw_bn_var;
};

template <typename T>
struct ModelState {
    std::vector<ConvBlockParams<T>> blocks;  // parallel to graph.layers
};

enum class ParamKind { ConvWeight, ConvBias, BnGamma, BnBeta };

// Visit every learnable tensor in canonical graph order.
// fn(name, tensor, kind). Weight decay applies only to ConvWeight.
template <typename State, typename F>
void for_each_param(const LayerGraph& graph, State& state, F&& fn) {
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const GraphLayer& l = graph.layers[i];
        if (l.kind != LayerKind::Conv) continue;
        auto& b = state.blocks[i];
        if (l.form == ConvForm::Standard) {
            fn(l.name + ".weight", b.w, ParamKind::ConvWeight);
            if (l.conv.has_bias) fn(l.name + ".bias", b.bias, ParamKind::ConvBias);
            if (l.bn_relu) {
                fn(l.name + ".bn.gamma", b.bn_gamma, ParamKind::BnGamma);
                fn(l.name + ".bn.beta", b.bn_beta, ParamKind::BnBeta);
            }
        } else {
            fn(l.name + ".dw.weight", b.w, ParamKind::ConvWeight);
            fn(l.name + ".dw.bn.gamma", b.bn_gamma, ParamKind::BnGamma);
            fn(l.name + ".dw.bn.beta", b.bn_beta, ParamKind::BnBeta);
            fn(l.name + ".pw.weight", b.pw_w, ParamKind::ConvWeight);
            fn(l.name + ".pw.bn.gamma", b.pw_bn_gamma, ParamKind::BnGamma);
            fn(l.name + ".pw.bn.beta", b.pw_bn_beta, ParamKind::BnBeta);
        }
    }
}

// Visit every BN running-stat tensor in canonical graph order.
template <typename State, typename F>
void for_each_stat(const LayerGraph& graph, State& state, F&& fn) {
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const GraphLayer& l = graph.layers[i];
        if (l.kind != LayerKind::Conv || !l.bn_relu) continue;
        auto& b = state.blocks[i];
        if (l.form == ConvForm::Standard) {
            fn(l.name + ".bn.running_mean", b.bn_mean);
            fn(l.name + ".bn.running_var", b.bn_var);
        } else {
            fn(l.name + ".dw.bn.running_mean", b.bn_mean);
            fn(l.name + ".dw.bn.running_var", b.bn_var);
            fn(l.name + ".pw.bn.running_mean", b.pw_bn_mean);
            fn(l.name + ".pw.bn.running_var", b.pw_bn_var);
        }
    }
}

template <typename T>
int64_t param_count(const LayerGraph& graph, const ModelState<T>& state) {
    int64_t n = 0;
    for_each_param(graph, state, [&](const std::string&, const Tensor<T>& t, ParamKind) {
        n += t.count();
    });
    return n;
}

// Kaiming-style fan-in scaled uniform init for convs (variance 2/fan_in),
// BN gamma 1 / beta 0, running stats (0,1), biases 0. Deterministic per seed.
template <typename T>
ModelState<T> init_weights(const LayerGraph& graph, uint64_t seed) {
    ModelState<T> state;
    state.blocks.resize(graph.layers.size());
    Rng rng = Rng(seed).derive({stream::kInit});

    auto init_conv = [&](const nn::ConvSpec& spec, Tensor<T>& w) {
        w = Tensor<T>::zeros(spec.weight_shape());
        const double fan_in = static_cast<double>(spec.in_ch / spec.groups) * spec.kh * spec.kw;
        const double bound = std::sqrt(6.0 / fan_in);
        for (T& v : w.data) v = static_cast<T>(rng.uniform(-bound, bound));
    };
    auto init_bn = [&](int ch, Tensor<T>& g, Tensor<T>& b, Tensor<T>& m, Tensor<T>& v) {
        g = Tensor<T>::full(Shape{ch}, T(1));
        b = Tensor<T>::zeros(Shape{ch});
        m = Tensor<T>::zeros(Shape{ch});
        v = Tensor<T>::full(Shape{ch}, T(1));
    };

    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const GraphLayer& l = graph.layers[i];
        if (l.kind != LayerKind::Conv) continue;
        auto& b = state.blocks[i];
        init_conv(l.conv, b.w);
        if (l.conv.has_bias) b.bias = Tensor<T>::zeros(Shape{l.conv.out_ch});
        if (l.bn_relu) init_bn(l.conv.out_ch, b.bn_gamma, b.bn_beta, b.bn_mean, b.bn_var);
        if (l.form == ConvForm::DwSeparable) {
            init_conv(l.pointwise, b.pw_w);
            init_bn(l.pointwise.out_ch, b.pw_bn_gamma, b.pw_bn_beta, b.pw_bn_mean, b.pw_bn_var);
        }
    }
    return state;
}

template <typename T>
ModelState<T> zeros_like(const ModelState<T>& src) {
    ModelState<T> out;
    out.blocks.resize(src.blocks.size());
    for (size_t i = 0; i < src.blocks.size(); ++i) {
        const auto& b = src.blocks[i];
        auto& o = out.blocks[i];
        auto z = [](const Tensor<T>& t) {
            return t.count() ? Tensor<T>::zeros(t.shape) : Tensor<T>{};
        };
        o.w = z(b.w); o.bias = z(b.bias);
        o.bn_gamma = z(b.bn_gamma); o.bn_beta = z(b.bn_beta);
        o.bn_mean = z(b.bn_mean); o.bn_var = z(b.bn_var);
        o.pw_w = z(b.pw_w);
        o.pw_bn_gamma = z(b.pw_bn_gamma); o.pw_bn_beta = z(b.pw_bn_beta);
        o.pw_bn_mean = z(b.pw_bn_mean); o.pw_bn_var = z(b.pw_bn_var);
    }
    return out;
}

template <typename T>
struct LayerCache {
    Tensor<T> input;            // block input as seen by forward
    Tensor<T> mid;              // dwsc: input of the pointwise half
    nn::BatchNormCtx<T> bn1, bn2;
    nn::ReluCtx<T> relu1, relu2;
    nn::MaxPoolCtx<T> pool;
    nn::DropoutCtx<T> dropout;
    Shape out_shape;
};

template <typename T>
struct ForwardCache {
    std::vector<LayerCache<T>> layers;
    Tensor<T> logits;  // (N,K), the global average pool output
    Tensor<T> probs;   // (N,K)
};

// Run the network on a waveform batch (N,1,1,T). Returns softmax probabilities
// (N,num_classes). Train mode updates BN running stats and applies dropout;
// a cache is required to run backward afterwards.
template <typename T>
Tensor<T> forward(const LayerGraph& graph, ModelState<T>& state, const Tensor<T>& input,
                  nn::Mode mode, Rng* dropout_rng = nullptr, ForwardCache<T>* cache = nullptr,
                  int threads = 1) {
    if (input.shape.rank() != 4 || input.shape[1] != 1 || input.shape[2] != 1)
        throw shape_error("network input must be (N,1,1,T), got " + input.shape.str());
    if (input.shape[3] < graph.min_input_len)
        throw shape_error("input length " + std::to_string(input.shape[3]) +
                          " is below the minimum of " + std::to_string(graph.min_input_len) +
                          " samples (one frame)");
    if (cache) cache->layers.assign(graph.layers.size(), LayerCache<T>{});

    const T eps = static_cast<T>(kBnEps);
    const T mom = static_cast<T>(kBnMomentum);
    Tensor<T> x = input;
    for (size_t i = 0; i < graph.layers.size(); ++i) {
        const GraphLayer& l = graph.layers[i];
        LayerCache<T>* lc = cache ? &cache->layers[i] : nullptr;
        switch (l.kind) {
            case LayerKind::Conv: {
                auto& b = state.blocks[i];
                if (lc) lc->input = x;
                x = nn::conv_forward(l.conv, x, b.w, b.bias, threads);
                if (l.bn_relu) {
                    x = nn::batchnorm_forward(x, b.bn_gamma, b.bn_beta, b.bn_mean, b.bn_var, mode,
                                              eps, mom, lc ? &lc->bn1 : nullptr, threads);
                    x = nn::relu_forward(x, lc ? &lc->relu1 : nullptr);
                }
                if (l.form == ConvForm::DwSeparable) {
                    if (lc) lc->mid = x;
                    x = nn::conv_forward(l.pointwise, x, b.pw_w, {}, threads);
                    x = nn::batchnorm_forward(x, b.pw_bn_gamma, b.pw_bn_beta, b.pw_bn_mean,
                                              b.pw_bn_var, mode, eps, mom,
                                              lc ? &lc->bn2 : nullptr, threads);
                    x = nn::relu_forward(x, lc ? &lc->relu2 : nullptr);
                }
                break;
            }
            case LayerKind::MaxPool:
                x = nn::maxpool_forward(l.pool, x, lc ? &lc->pool : nullptr);
                break;
            case LayerKind::Transpose:
                // (N,C,1,T) -> (N,1,C,T): row-major layout is unchanged.
                if (lc) lc->input.shape = x.shape;
                x = Tensor<T>(Shape{x.shape[0], 1, x.shape[1], x.shape[3]}, std::move(x.data));
                break;
            case LayerKind::Dropout:
                x = nn::dropout_forward(static_cast<T>(l.dropout_p), x,
                                        mode, dropout_rng, lc ? &lc->dropout : nullptr);
                break;
            case LayerKind::GlobalAvgPool:
                if (lc) lc->input.shape = x.shape;
                x = nn::global_avgpool_forward(x);
                if (cache) cache->logits = x;
                break;
            case LayerKind::Softmax:
                x = nn::softmax_rows(x);
                if (cache) cache->probs = x;
                break;
        }
        if (lc) lc->out_shape = x.shape;
    }
    return x;
}

// Convenience for inference without mutating anything.
template <typename T>
Tensor<T> forward_infer(const LayerGraph& graph, const ModelState<T>& state,
                        const Tensor<T>& input, int threads = 1) {
    return forward<T>(graph, const_cast<ModelState<T>&>(state), input, nn::Mode::Infer, nullptr,
                      nullptr, threads);
}

// Backward from the gradient at the logits (the global-average-pool output).
// Softmax is folded into the loss, so callers pass d(loss)/d(logits).
template <typename T>
ModelState<T> backward(const LayerGraph& graph, const ModelState<T>& state,
                       const ForwardCache<T>& cache, const Tensor<T>& dlogits,
                       Tensor<T>* dinput = nullptr, int threads = 1) {
    if (cache.layers.size() != graph.layers.size())
        throw state_error("backward called without a matching forward cache");
    ModelState<T> grads = zeros_like(state);
    Tensor<T> d = dlogits;

    for (size_t ii = graph.layers.size(); ii-- > 0;) {
        const GraphLayer& l = graph.layers[ii];
        const LayerCache<T>& lc = cache.layers[ii];
        switch (l.kind) {
            case LayerKind::Softmax:
                break;  // folded into the loss gradient
            case LayerKind::GlobalAvgPool:
                d = nn::global_avgpool_backward(lc.input.shape, d);
                break;
            case LayerKind::Dropout:
                d = nn::dropout_backward(lc.dropout, d);
                break;
            case LayerKind::Transpose:
                d = Tensor<T>(lc.input.shape, std::move(d.data));
                break;
            case LayerKind::MaxPool:
                d = nn::maxpool_backward(lc.pool, d);
                break;
            case LayerKind::Conv: {
                const auto& b = state.blocks[ii];
                auto& gb = grads.blocks[ii];
                if (l.form == ConvForm::DwSeparable) {
                    d = nn::relu_backward(lc.relu2, d);
                    auto bg = nn::batchnorm_backward(lc.bn2, b.pw_bn_gamma, d, threads);
                    gb.pw_bn_gamma = std::move(bg.dgamma);
                    gb.pw_bn_beta = std::move(bg.dbeta);
                    auto cg = nn::conv_backward(l.pointwise, lc.mid, b.pw_w, bg.dx, threads);
                    gb.pw_w = std::move(cg.dw);
                    d = std::move(cg.dx);
                }
                if (l.bn_relu) {
                    d = nn::relu_backward(lc.relu1, d);
                    auto bg = nn::batchnorm_backward(lc.bn1, b.bn_gamma, d, threads);
                    gb.bn_gamma = std::move(bg.dgamma);
                    gb.bn_beta = std::move(bg.dbeta);
                    d = std::move(bg.dx);
                }
                auto cg = nn::conv_backward(l.conv, lc.input, b.w, d, threads);
                gb.w = std::move(cg.dw);
                if (l.conv.has_bias) gb.bias = std::move(cg.dbias);
                d = std::move(cg.dx);
                break;
            }
        }
    }
    if (dinput) *dinput = std::move(d);
    return grads;
}

// Name of the first layer whose output contains a non-finite value, for the
// NaN-abort diagnostic. Empty string when everything is finite.
template <typename T>
std::string first_nonfinite_layer(const LayerGraph& graph, const ForwardCache<T>& cache) {
    for (size_t i = 0; i + 1 < cache.layers.size(); ++i) {
        // The output of layer i is the input of layer i+1 (when saved).
        const Tensor<T>& next_in = cache.layers[i + 1].input;
        if (next_in.count() && !next_in.all_finite()) return graph.layers[i].name;
    }
    if (cache.logits.count() && !cache.logits.all_finite()) return "Avgpool1";
    if (cache.probs.count() && !cache.probs.all_finite()) return "Softmax";
    return "";
}

}  // namespace aclnet
