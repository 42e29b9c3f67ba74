#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "aclnet/graph.hpp"

namespace aclnet {

// Parameter and multiply-add accounting.
//
// Counting convention: one MAC per multiply-accumulate inside a convolution
// kernel (out_positions * kh * kw * in_ch/groups per output channel). Batch
// norm is folded into the convolutions at zero cost; pooling, activations,
// dropout and softmax are free. MACs are reported per reference window
// (1.28 s) and per second.

constexpr double kReferenceWindowSeconds = 1.28;

struct LayerComplexity {
    std::string name;
    int64_t params = 0;
    int64_t macs = 0;  // per reference window
};

struct ComplexityReport {
    std::vector<LayerComplexity> rows;
    int64_t llf_params = 0, hlf_params = 0, total_params = 0;
    int64_t llf_macs = 0, hlf_macs = 0, total_macs = 0;
    double window_seconds = kReferenceWindowSeconds;

    double llf_mmacs() const { return static_cast<double>(llf_macs) / 1e6; }
    double hlf_mmacs() const { return static_cast<double>(hlf_macs) / 1e6; }
    double total_mmacs() const { return static_cast<double>(total_macs) / 1e6; }
    double total_mmacs_per_second() const { return total_mmacs() / window_seconds; }
};

// Learnable parameter count per block: conv = in*out*kh*kw (/groups for the
// depthwise half) + bias if present, BN = 2 per channel, everything else 0.
int64_t count_params(const GraphLayer& layer);
int64_t count_params(const LayerGraph& graph);

// MACs per window for the given input length (params are length-independent,
// MACs are linear in it).
int64_t count_macs(const GraphLayer& layer, const NetworkConfig& config, int64_t input_len);
int64_t count_macs(const LayerGraph& graph, int64_t input_len);

// Full per-layer report at the graph's reference input length.
ComplexityReport analyze_graph(const LayerGraph& graph);

struct SweepRow {
    NetworkConfig config;
    ComplexityReport report;
};

std::vector<SweepRow> sweep(const std::vector<NetworkConfig>& configs, double window_seconds);

// The default sweep grid: WM in {1/32, 1/16, 1/8, 1/4, 1/2, 3/4, 1, 3/2, 2}
// for 16k DWSC, 44.1k DWSC and 44.1k SC.
std::vector<NetworkConfig> sweep_grid_configs();

// The ten rows of the published complexity/accuracy table.
struct PublishedRow {
    int sample_rate;
    ConvType conv_type;
    double wm;
    // Values exactly as printed, so comparisons honor the table's precision.
    std::string llf_params_k, hlf_params_k, total_params_k;
    double llf_mmacs, hlf_mmacs, total_mmacs;
};

const std::vector<PublishedRow>& published_reference();
std::vector<NetworkConfig> paper_grid_configs();  // the ten published rows

// Round x to the number of decimals the printed string carries and render it
// the same way, e.g. published "569.4" -> one decimal.
std::string format_like(double x, const std::string& printed);

// CSV with the fixed header
// config,llf_params,llf_mmacs,hlf_params,hlf_mmacs,total_params,total_mmacs,width_multiplier
// (params as unrounded integers, MMACS with 2 decimals).
std::string sweep_csv(const std::vector<SweepRow>& rows);

// Aligned text table. Rows matching a published configuration get the
// published values and the mine/published deviation ratio; ratios outside
// [0.5, 2] are flagged with '*'.
std::string sweep_table(const std::vector<SweepRow>& rows);

struct Deviation {
    std::string cell;  // e.g. "llf_mmacs"
    double ours, published, ratio;
    bool flagged;  // outside [0.5, 2]
};

// Per-cell deviations against one published row.
std::vector<Deviation> deviations(const SweepRow& row, const PublishedRow& pub);

// The published row matching a config, if any.
std::optional<PublishedRow> find_published(const NetworkConfig& config);

}  // namespace aclnet
