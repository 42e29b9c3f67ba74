#include "aclnet/graph.hpp"

#include <cmath>
#include <sstream>

#include "aclnet/errors.hpp"

namespace aclnet {

const char* conv_type_name(ConvType t) {
    return t == ConvType::Standard ? "sc" : "dwsc";
}

ConvType parse_conv_type(const std::string& s) {
    if (s == "sc" || s == "SC" || s == "standard") return ConvType::Standard;
    if (s == "dwsc" || s == "DWSC" || s == "depthwise-separable") return ConvType::DwSeparable;
    throw config_error("unknown conv type '" + s + "' (expected sc or dwsc)");
}

void NetworkConfig::set_width_multiplier(double wm) {
    if (!(wm > 0.0)) throw config_error("width multiplier must be > 0, got " + std::to_string(wm));
    // Finite doubles are dyadic rationals; expand until integral.
    int64_t den = 1;
    double num = wm;
    while (num != std::floor(num) && den < (int64_t{1} << 40)) {
        num *= 2.0;
        den *= 2;
    }
    if (num != std::floor(num))
        throw config_error("width multiplier " + std::to_string(wm) + " is not exactly representable");
    wm_num = static_cast<int64_t>(num);
    wm_den = den;
    // Reduce.
    int64_t a = wm_num, b = wm_den;
    while (b) { int64_t t = a % b; a = b; b = t; }
    wm_num /= a;
    wm_den /= a;
}

NetworkConfig NetworkConfig::defaults(ConvType type, int sample_rate) {
    NetworkConfig c;
    c.sample_rate = sample_rate;
    c.conv_type = type;
    if (type == ConvType::Standard) {
        c.c1 = 8; c.s1 = 2; c.s2 = 2;
    } else {
        c.c1 = 16; c.s1 = 2; c.s2 = 4;
    }
    c.validate();
    return c;
}

void NetworkConfig::validate() const {
    if (sample_rate != 16000 && sample_rate != 44100)
        throw config_error("sample_rate must be 16000 or 44100, got " + std::to_string(sample_rate));
    if (wm_num <= 0 || wm_den <= 0)
        throw config_error("width multiplier must be > 0");
    if (c1 < 1 || s1 < 1 || s2 < 1)
        throw config_error("c1, s1, s2 must be positive");
    if (160 % (s1 * s2) != 0)
        throw config_error("s1*s2 = " + std::to_string(s1 * s2) +
                           " must divide 160 so the 16 kHz maxpool kernel is an integer");
    if (llf_kernel1 < 1 || llf_kernel2 < 1)
        throw config_error("front-end kernel sizes must be positive");
    if (num_classes < 1)
        throw config_error("num_classes must be positive");
    if (!(dropout_p >= 0.0f && dropout_p < 1.0f))
        throw config_error("dropout_p must be in [0,1), got " + std::to_string(dropout_p));
}

std::string NetworkConfig::describe() const {
    std::ostringstream os;
    os << (sample_rate == 44100 ? "44.1k" : "16k") << "-" << conv_type_name(conv_type)
       << " wm=" << width_multiplier();
    return os.str();
}

int apply_width_multiplier(int base_channels, double wm) {
    if (!(wm > 0.0)) throw config_error("width multiplier must be > 0");
    int scaled = static_cast<int>(std::floor(static_cast<double>(base_channels) * wm + 0.5));
    return scaled < 1 ? 1 : scaled;
}

LlfParams scale_llf_for_rate(const NetworkConfig& config) {
    config.validate();
    LlfParams p;
    p.stride1 = config.s1;
    p.stride2 = config.s2;
    if (config.sample_rate == 16000) {
        p.kernel1 = config.llf_kernel1;
        p.kernel2 = config.llf_kernel2;
        p.samples_per_frame = 160;
    } else {
        const double factor = 44100.0 / 16000.0;
        p.kernel1 = static_cast<int>(std::floor(config.llf_kernel1 * factor));
        p.kernel2 = static_cast<int>(std::floor(config.llf_kernel2 * factor));
        p.samples_per_frame = 441;
    }
    p.maxpool_kernel = p.samples_per_frame / (p.stride1 * p.stride2);
    if (p.maxpool_kernel < 1)
        throw config_error("decimation s1*s2 exceeds one 10 ms frame");
    return p;
}

namespace {

int64_t conv_out_len(int64_t len, int stride) {
    // Same-style padding: ceil(len/stride).
    return (len - 1) / stride + 1;
}

int64_t pool_out(int64_t len, int kernel, int stride) {
    return len >= kernel ? (len - kernel) / stride + 1 : 1;
}

GraphLayer conv_block(const std::string& name, ConvForm form, int in_ch, int out_ch,
                      const nn::ConvSpec& base, bool bn_relu) {
    GraphLayer l;
    l.name = name;
    l.kind = LayerKind::Conv;
    l.form = form;
    l.bn_relu = bn_relu;
    if (form == ConvForm::Standard) {
        l.conv = base;
        l.conv.in_ch = in_ch;
        l.conv.out_ch = out_ch;
    } else {
        l.conv = base;  // depthwise half
        l.conv.in_ch = in_ch;
        l.conv.out_ch = in_ch;
        l.conv.groups = in_ch;
        l.pointwise = nn::conv2d_spec(in_ch, out_ch, 1, 1, 0);
    }
    return l;
}

}  // namespace

const GraphLayer* LayerGraph::find(const std::string& name) const {
    for (const auto& l : layers)
        if (l.name == name) return &l;
    return nullptr;
}

int64_t frames_for_input(const NetworkConfig& config, int64_t input_len) {
    LlfParams llf = scale_llf_for_rate(config);
    int64_t t = conv_out_len(conv_out_len(input_len, llf.stride1), llf.stride2);
    return t / llf.maxpool_kernel;
}

LayerGraph build(const NetworkConfig& config, int64_t input_len) {
    config.validate();
    LayerGraph g;
    g.config = config;
    g.llf = scale_llf_for_rate(config);
    g.reference_input_len = input_len;
    g.min_input_len = static_cast<int64_t>(g.llf.stride1) * g.llf.stride2 * g.llf.maxpool_kernel;
    if (input_len < g.min_input_len)
        throw config_error("input length " + std::to_string(input_len) +
                           " is below one frame of samples (" + std::to_string(g.min_input_len) + ")");

    const double wm = config.width_multiplier();
    const ConvForm form =
        config.conv_type == ConvType::Standard ? ConvForm::Standard : ConvForm::DwSeparable;

    // Low-level features on (C,1,T).
    int64_t t = input_len;
    {
        GraphLayer l = conv_block("Conv1", ConvForm::Standard, 1, config.c1,
                                  nn::conv1d_spec(1, config.c1, g.llf.kernel1, g.llf.stride1), true);
        l.in_shape = Shape{1, 1, t};
        t = conv_out_len(t, g.llf.stride1);
        l.out_shape = Shape{config.c1, 1, t};
        g.layers.push_back(l);
    }
    {
        GraphLayer l = conv_block("Conv2", form, config.c1, 64,
                                  nn::conv1d_spec(config.c1, 64, g.llf.kernel2, g.llf.stride2), true);
        l.in_shape = Shape{config.c1, 1, t};
        t = conv_out_len(t, g.llf.stride2);
        l.out_shape = Shape{64, 1, t};
        g.layers.push_back(l);
    }
    {
        GraphLayer l;
        l.name = "Maxpool1";
        l.kind = LayerKind::MaxPool;
        l.pool = nn::PoolSpec{1, g.llf.maxpool_kernel, 1, g.llf.maxpool_kernel};
        l.in_shape = Shape{64, 1, t};
        t = pool_out(t, g.llf.maxpool_kernel, g.llf.maxpool_kernel);
        l.out_shape = Shape{64, 1, t};
        g.layers.push_back(l);
    }
    {
        GraphLayer l;
        l.name = "Transpose";
        l.kind = LayerKind::Transpose;
        l.in_shape = Shape{64, 1, t};
        l.out_shape = Shape{1, 64, t};
        g.layers.push_back(l);
    }

    // High-level features on (C,H,W) with H starting at 64 and W the frames.
    int64_t h = 64, w = t;
    const int ch3 = apply_width_multiplier(32, wm);
    const int ch45 = apply_width_multiplier(64, wm);
    const int ch67 = apply_width_multiplier(128, wm);
    const int ch89 = apply_width_multiplier(256, wm);
    const int ch1011 = apply_width_multiplier(512, wm);

    auto push_conv = [&](const std::string& name, ConvForm f, int in_ch, int out_ch) {
        GraphLayer l = conv_block(name, f, in_ch, out_ch, nn::conv2d_spec(in_ch, out_ch, 3, 1, 1), true);
        l.in_shape = Shape{in_ch, h, w};
        l.out_shape = Shape{out_ch, h, w};
        g.layers.push_back(l);
    };
    auto push_pool = [&](const std::string& name) {
        GraphLayer l;
        l.name = name;
        l.kind = LayerKind::MaxPool;
        l.pool = nn::PoolSpec{2, 2, 2, 2};
        int in_ch = static_cast<int>(g.layers.back().out_shape[0]);
        l.in_shape = Shape{in_ch, h, w};
        h = pool_out(h, 2, 2);
        w = pool_out(w, 2, 2);
        l.out_shape = Shape{in_ch, h, w};
        g.layers.push_back(l);
    };

    push_conv("Conv3", ConvForm::Standard, 1, ch3);  // first HLF conv is always standard
    push_pool("Maxpool2");
    push_conv("Conv4", form, ch3, ch45);
    push_conv("Conv5", form, ch45, ch45);
    push_pool("Maxpool3");
    push_conv("Conv6", form, ch45, ch67);
    push_conv("Conv7", form, ch67, ch67);
    push_pool("Maxpool4");
    push_conv("Conv8", form, ch67, ch89);
    push_conv("Conv9", form, ch89, ch89);
    push_pool("Maxpool5");
    push_conv("Conv10", form, ch89, ch1011);
    push_conv("Conv11", form, ch1011, ch1011);
    push_pool("Maxpool6");

    {
        GraphLayer l;
        l.name = "Dropout";
        l.kind = LayerKind::Dropout;
        l.dropout_p = config.dropout_p;
        l.in_shape = Shape{ch1011, h, w};
        l.out_shape = l.in_shape;
        g.layers.push_back(l);
    }
    {
        // 1x1 class head: bias, no BN/ReLU, channel count never scales with WM.
        GraphLayer l = conv_block("Conv12", ConvForm::Standard, ch1011, config.num_classes,
                                  nn::conv2d_spec(ch1011, config.num_classes, 1, 1, 0), false);
        l.conv.has_bias = true;
        l.in_shape = Shape{ch1011, h, w};
        l.out_shape = Shape{config.num_classes, h, w};
        g.layers.push_back(l);
    }
    {
        GraphLayer l;
        l.name = "Avgpool1";
        l.kind = LayerKind::GlobalAvgPool;
        l.in_shape = Shape{config.num_classes, h, w};
        l.out_shape = Shape{config.num_classes};
        g.layers.push_back(l);
    }
    {
        GraphLayer l;
        l.name = "Softmax";
        l.kind = LayerKind::Softmax;
        l.in_shape = Shape{config.num_classes};
        l.out_shape = Shape{config.num_classes};
        g.layers.push_back(l);
    }
    return g;
}

}  // namespace aclnet
