#include "aclnet/complexity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "aclnet/errors.hpp"

namespace aclnet {

namespace {

int64_t conv_params(const nn::ConvSpec& s) {
    int64_t p = static_cast<int64_t>(s.out_ch) * (s.in_ch / s.groups) * s.kh * s.kw;
    if (s.has_bias) p += s.out_ch;
    return p;
}

int64_t conv_macs(const nn::ConvSpec& s, int64_t out_positions) {
    return out_positions * static_cast<int64_t>(s.out_ch) * (s.in_ch / s.groups) * s.kh * s.kw;
}

}  // namespace

int64_t count_params(const GraphLayer& layer) {
    if (layer.kind != LayerKind::Conv) return 0;
    int64_t p = conv_params(layer.conv);
    if (layer.bn_relu) p += 2 * static_cast<int64_t>(layer.conv.out_ch);
    if (layer.form == ConvForm::DwSeparable) {
        p += conv_params(layer.pointwise);
        p += 2 * static_cast<int64_t>(layer.pointwise.out_ch);
    }
    return p;
}

int64_t count_params(const LayerGraph& graph) {
    int64_t total = 0;
    for (const auto& l : graph.layers) total += count_params(l);
    return total;
}

int64_t count_macs(const GraphLayer& layer, const NetworkConfig& config, int64_t input_len) {
    if (layer.kind != LayerKind::Conv) return 0;
    // Resolve shapes at the requested length and find this layer by name.
    LayerGraph g = build(config, input_len);
    const GraphLayer* resolved = g.find(layer.name);
    if (!resolved) throw config_error("layer " + layer.name + " not present in graph");
    int64_t out_positions = resolved->out_shape[1] * resolved->out_shape[2];
    int64_t macs = conv_macs(resolved->conv, out_positions);
    if (resolved->form == ConvForm::DwSeparable)
        macs += conv_macs(resolved->pointwise, out_positions);
    return macs;
}

int64_t count_macs(const LayerGraph& graph, int64_t input_len) {
    LayerGraph g = graph.reference_input_len == input_len ? graph : build(graph.config, input_len);
    int64_t total = 0;
    for (const auto& l : g.layers) {
        if (l.kind != LayerKind::Conv) continue;
        int64_t out_positions = l.out_shape[1] * l.out_shape[2];
        total += conv_macs(l.conv, out_positions);
        if (l.form == ConvForm::DwSeparable) total += conv_macs(l.pointwise, out_positions);
    }
    return total;
}

ComplexityReport analyze_graph(const LayerGraph& graph) {
    ComplexityReport r;
    r.window_seconds = static_cast<double>(graph.reference_input_len) / graph.config.sample_rate;
    bool in_hlf = false;
    for (const auto& l : graph.layers) {
        if (l.kind == LayerKind::Transpose) {
            in_hlf = true;
            continue;
        }
        LayerComplexity row;
        row.name = l.name;
        row.params = count_params(l);
        if (l.kind == LayerKind::Conv) {
            int64_t out_positions = l.out_shape[1] * l.out_shape[2];
            row.macs = conv_macs(l.conv, out_positions);
            if (l.form == ConvForm::DwSeparable) row.macs += conv_macs(l.pointwise, out_positions);
        }
        r.rows.push_back(row);
        if (in_hlf) {
            r.hlf_params += row.params;
            r.hlf_macs += row.macs;
        } else {
            r.llf_params += row.params;
            r.llf_macs += row.macs;
        }
    }
    r.total_params = r.llf_params + r.hlf_params;
    r.total_macs = r.llf_macs + r.hlf_macs;
    return r;
}

std::vector<SweepRow> sweep(const std::vector<NetworkConfig>& configs, double window_seconds) {
    std::vector<SweepRow> rows;
    for (const auto& c : configs) {
        SweepRow row;
        row.config = c;
        int64_t input_len = static_cast<int64_t>(std::llround(window_seconds * c.sample_rate));
        row.report = analyze_graph(build(c, input_len));
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<NetworkConfig> sweep_grid_configs() {
    const double wms[] = {1.0 / 32, 1.0 / 16, 0.125, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0};
    std::vector<NetworkConfig> out;
    auto add = [&](ConvType type, int rate) {
        for (double wm : wms) {
            NetworkConfig c = NetworkConfig::defaults(type, rate);
            c.set_width_multiplier(wm);
            out.push_back(c);
        }
    };
    add(ConvType::DwSeparable, 16000);
    add(ConvType::DwSeparable, 44100);
    add(ConvType::Standard, 44100);
    return out;
}

const std::vector<PublishedRow>& published_reference() {
    static const std::vector<PublishedRow> rows = {
        {16000, ConvType::DwSeparable, 0.125, "1.44", "13.91", "15.35", 4.35, 2.93, 7.28},
        {16000, ConvType::DwSeparable, 0.5, "1.44", "153.43", "154.87", 4.35, 31.07, 35.42},
        {16000, ConvType::DwSeparable, 1.0, "1.44", "567.92", "569.4", 4.35, 113.7, 118.1},
        {44100, ConvType::DwSeparable, 0.125, "1.81", "13.91", "15.72", 17.98, 2.96, 20.94},
        {44100, ConvType::DwSeparable, 0.5, "1.81", "153.43", "155.23", 17.98, 31.33, 49.31},
        {44100, ConvType::DwSeparable, 1.0, "1.81", "567.92", "569.73", 17.98, 114.6, 132.59},
        {44100, ConvType::Standard, 0.125, "6.99", "77.21", "84.21", 80.9, 8.88, 131.17},
        {44100, ConvType::Standard, 0.5, "6.99", "1190.0", "1197.0", 80.9, 132.72, 255.01},
        {44100, ConvType::Standard, 1.0, "6.99", "4730.0", "4737.0", 80.9, 524.67, 646.97},
        {44100, ConvType::Standard, 1.5, "6.99", "10620", "10627", 80.9, 786.56, 867.45},
    };
    return rows;
}

std::vector<NetworkConfig> paper_grid_configs() {
    std::vector<NetworkConfig> out;
    for (const auto& row : published_reference()) {
        NetworkConfig c = NetworkConfig::defaults(row.conv_type, row.sample_rate);
        c.set_width_multiplier(row.wm);
        out.push_back(c);
    }
    return out;
}

std::string format_like(double x, const std::string& printed) {
    auto dot = printed.find('.');
    int decimals = dot == std::string::npos ? 0 : static_cast<int>(printed.size() - dot - 1);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, x);
    return buf;
}

std::optional<PublishedRow> find_published(const NetworkConfig& config) {
    for (const auto& row : published_reference()) {
        if (row.sample_rate == config.sample_rate && row.conv_type == config.conv_type &&
            std::abs(row.wm - config.width_multiplier()) < 1e-12)
            return row;
    }
    return std::nullopt;
}

std::vector<Deviation> deviations(const SweepRow& row, const PublishedRow& pub) {
    auto ratio = [](double ours, double published) {
        return ours > published ? ours / published : published / ours;
    };
    std::vector<Deviation> out;
    auto add = [&](const std::string& cell, double ours, double published) {
        Deviation d{cell, ours, published, ratio(ours, published), false};
        d.flagged = d.ratio > 2.0;
        out.push_back(d);
    };
    add("llf_mmacs", row.report.llf_mmacs(), pub.llf_mmacs);
    add("hlf_mmacs", row.report.hlf_mmacs(), pub.hlf_mmacs);
    add("total_mmacs", row.report.total_mmacs(), pub.total_mmacs);
    return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "config,llf_params,llf_mmacs,hlf_params,hlf_mmacs,total_params,total_mmacs,"
          "width_multiplier\n";
    for (const auto& r : rows) {
        char mm[3][32];
        std::snprintf(mm[0], sizeof(mm[0]), "%.2f", r.report.llf_mmacs());
        std::snprintf(mm[1], sizeof(mm[1]), "%.2f", r.report.hlf_mmacs());
        std::snprintf(mm[2], sizeof(mm[2]), "%.2f", r.report.total_mmacs());
        os << (r.config.sample_rate == 44100 ? "44.1k" : "16k") << "-"
           << conv_type_name(r.config.conv_type) << "," << r.report.llf_params << "," << mm[0]
           << "," << r.report.hlf_params << "," << mm[1] << "," << r.report.total_params << ","
           << mm[2] << ",";
        char wm[32];
        std::snprintf(wm, sizeof(wm), "%g", r.config.width_multiplier());
        os << wm << "\n";
    }
    return os.str();
}

std::string sweep_table(const std::vector<SweepRow>& rows) {
    std::ostringstream os;
    os << "# MAC convention: 1 MAC = 1 multiply-accumulate, convolutions only\n"
          "# (batch norm folded, pooling/activations free); window = 1.28 s.\n"
          "# mmacs columns are per window, mmacs/s is the same figure per second.\n"
          "# published columns show the reference table where the row matches one;\n"
          "# ratio = max(ours/published, published/ours) for total MMACS, '*' if > 2.\n";
    char line[256];
    std::snprintf(line, sizeof(line), "%-12s %6s %12s %10s %12s %10s %12s %12s %10s %14s %8s\n",
                  "config", "wm", "llf_params", "llf_mmacs", "hlf_params", "hlf_mmacs",
                  "total_params", "total_mmacs", "mmacs/s", "published", "ratio");
    os << line;
    for (const auto& r : rows) {
        std::string cfg = std::string(r.config.sample_rate == 44100 ? "44.1k" : "16k") + "-" +
                          conv_type_name(r.config.conv_type);
        char wm[32];
        std::snprintf(wm, sizeof(wm), "%g", r.config.width_multiplier());
        auto pub = find_published(r.config);
        std::string published = "-";
        std::string ratio = "-";
        if (pub) {
            published = pub->total_params_k + "k/" + format_like(pub->total_mmacs, "0.00");
            double ours = r.report.total_mmacs();
            double rr = ours > pub->total_mmacs ? ours / pub->total_mmacs : pub->total_mmacs / ours;
            char rb[32];
            std::snprintf(rb, sizeof(rb), "%.2f%s", rr, rr > 2.0 ? "*" : "");
            ratio = rb;
        }
        std::snprintf(line, sizeof(line),
                      "%-12s %6s %12lld %10.2f %12lld %10.2f %12lld %12.2f %10.2f %14s %8s\n",
                      cfg.c_str(), wm, static_cast<long long>(r.report.llf_params),
                      r.report.llf_mmacs(), static_cast<long long>(r.report.hlf_params),
                      r.report.hlf_mmacs(), static_cast<long long>(r.report.total_params),
                      r.report.total_mmacs(), r.report.total_mmacs_per_second(), published.c_str(),
                      ratio.c_str());
        os << line;
    }
    return os.str();
}

}  // namespace aclnet
