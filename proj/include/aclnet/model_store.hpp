#pragma once

#include <string>
#include <utility>

#include "aclnet/errors.hpp"
#include "aclnet/graph.hpp"
#include "aclnet/network.hpp"

namespace aclnet {

// Deterministic binary model format, little-endian throughout:
//
//   magic "ACLN" | u16 version
//   config: u32 sample_rate | u8 conv_type | i64 wm_num | i64 wm_den |
//           u32 c1,s1,s2 | u32 kernel1,kernel2 | u32 num_classes | f32 dropout_p
//   u32 tensor_count
//   per tensor: u16 name_len | name | u8 rank | u32 dims[rank] | u64 elem_count
//   payload: f32 values in directory order
//
// Tensors are the learnable parameters followed by the BN running stats, in
// canonical graph order. save -> load -> save is byte-identical.

struct load_error : data_error {
    explicit load_error(const std::string& m) : data_error(m) {}
};
struct magic_error : load_error {
    explicit magic_error(const std::string& m) : load_error(m) {}
};
struct version_error : load_error {
    explicit version_error(const std::string& m) : load_error(m) {}
};
struct payload_error : load_error {
    explicit payload_error(const std::string& m) : load_error(m) {}
};
struct shape_mismatch_error : load_error {
    explicit shape_mismatch_error(const std::string& m) : load_error(m) {}
};

// Atomic write (temp file + rename).
void save_model(const NetworkConfig& config, const LayerGraph& graph,
                const ModelState<float>& state, const std::string& path);

std::pair<NetworkConfig, ModelState<float>> load_model(const std::string& path);

}  // namespace aclnet
