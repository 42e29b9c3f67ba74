#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "aclnet/layers.hpp"
#include "aclnet/tensor.hpp"

namespace aclnet {

enum class ConvType { Standard, DwSeparable };

const char* conv_type_name(ConvType t);
ConvType parse_conv_type(const std::string& s);

// Every architecture knob. The width multiplier is kept as an exact rational
// so it round-trips through the model file without float drift.
struct NetworkConfig {
    int sample_rate = 16000;
    ConvType conv_type = ConvType::DwSeparable;
    int64_t wm_num = 1;
    int64_t wm_den = 1;
    int c1 = 16, s1 = 2, s2 = 4;
    int llf_kernel1 = 9, llf_kernel2 = 5;  // 16 kHz reference kernel sizes
    int num_classes = 50;
    float dropout_p = 0.2f;

    double width_multiplier() const { return static_cast<double>(wm_num) / static_cast<double>(wm_den); }
    void set_width_multiplier(double wm);

    // Best settings per conv type: (c1,s1,s2) = (8,2,2) for standard,
    // (16,2,4) for depthwise separable.
    static NetworkConfig defaults(ConvType type, int sample_rate);

    void validate() const;  // throws config_error naming the violated invariant
    std::string describe() const;
};

// round(base * wm), never below 1.
int apply_width_multiplier(int base_channels, double wm);

// Front-end geometry after sample-rate scaling. Kernel sizes scale linearly
// with the rate (floor), strides stay fixed and the maxpool kernel absorbs the
// remainder so the output frame rate stays at 10 ms.
struct LlfParams {
    int kernel1 = 9, kernel2 = 5;
    int stride1 = 2, stride2 = 4;
    int maxpool_kernel = 20;
    int samples_per_frame = 160;  // stride1 * stride2 * maxpool_kernel
};

LlfParams scale_llf_for_rate(const NetworkConfig& config);

enum class LayerKind { Conv, MaxPool, Transpose, Dropout, GlobalAvgPool, Softmax };

enum class ConvForm { Standard, DwSeparable };

// One named block of the architecture. A Conv block covers the whole
// conv(+BN+ReLU) unit; depthwise separable blocks expand to
// depthwise-BN-ReLU-pointwise-BN-ReLU at execution time.
struct GraphLayer {
    std::string name;
    LayerKind kind = LayerKind::Conv;

    ConvForm form = ConvForm::Standard;
    nn::ConvSpec conv;      // standard/head conv, or the depthwise half
    nn::ConvSpec pointwise; // second half of a depthwise separable block
    bool bn_relu = false;   // conv blocks other than the class head

    nn::PoolSpec pool;
    double dropout_p = 0.0;

    Shape in_shape, out_shape;  // single example (C,H,W) at the reference input length
};

struct LayerGraph {
    NetworkConfig config;
    LlfParams llf;
    std::vector<GraphLayer> layers;
    int64_t reference_input_len = 0;
    int64_t min_input_len = 0;

    const GraphLayer* find(const std::string& name) const;
};

// Resolve the full architecture for the given input length. input_len must be
// at least one frame of samples (s1*s2*maxpool_kernel).
LayerGraph build(const NetworkConfig& config, int64_t input_len);

// Number of HLF time frames a given input length produces.
int64_t frames_for_input(const NetworkConfig& config, int64_t input_len);

}  // namespace aclnet
