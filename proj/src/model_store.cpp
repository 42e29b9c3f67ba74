#include "aclnet/model_store.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>
#include <vector>

namespace aclnet {

namespace {

constexpr char kMagic[4] = {'A', 'C', 'L', 'N'};
constexpr uint16_t kVersion = 1;

struct Writer {
    std::vector<uint8_t> bytes;
    void raw(const void* p, size_t n) {
        const uint8_t* b = static_cast<const uint8_t*>(p);
        bytes.insert(bytes.end(), b, b + n);
    }
    void u8(uint8_t v) { bytes.push_back(v); }
    void u16(uint16_t v) { for (int i = 0; i < 2; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i))); }
    void u32(uint32_t v) { for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i))); }
    void u64(uint64_t v) { for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<uint8_t>(v >> (8 * i))); }
    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }
    void f32(float v) {
        uint32_t bits;
        std::memcpy(&bits, &v, 4);
        u32(bits);
    }
};

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;
    explicit Reader(const std::vector<uint8_t>& b) : bytes(b) {}

    void need(size_t n, const char* what) {
        if (pos + n > bytes.size())
            throw payload_error(std::string("model file payload short by ") +
                                std::to_string(pos + n - bytes.size()) + " bytes reading " + what);
    }
    uint8_t u8(const char* what) { need(1, what); return bytes[pos++]; }
    uint16_t u16(const char* what) {
        need(2, what);
        uint16_t v = static_cast<uint16_t>(bytes[pos] | (bytes[pos + 1] << 8));
        pos += 2;
        return v;
    }
    uint32_t u32(const char* what) {
        need(4, what);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(bytes[pos + i]) << (8 * i);
        pos += 4;
        return v;
    }
    uint64_t u64(const char* what) {
        need(8, what);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(bytes[pos + i]) << (8 * i);
        pos += 8;
        return v;
    }
    int64_t i64(const char* what) { return static_cast<int64_t>(u64(what)); }
    float f32(const char* what) {
        uint32_t bits = u32(what);
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }
    std::string str(size_t n, const char* what) {
        need(n, what);
        std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
        pos += n;
        return s;
    }
};

struct TensorRef {
    std::string name;
    const Tensor<float>* tensor;
};

std::vector<TensorRef> enumerate(const LayerGraph& graph, const ModelState<float>& state) {
    std::vector<TensorRef> refs;
    for_each_param(graph, const_cast<ModelState<float>&>(state),
                   [&](const std::string& name, Tensor<float>& t, ParamKind) {
                       refs.push_back({name, &t});
                   });
    for_each_stat(graph, const_cast<ModelState<float>&>(state),
                  [&](const std::string& name, Tensor<float>& t) { refs.push_back({name, &t}); });
    return refs;
}

}  // namespace

void save_model(const NetworkConfig& config, const LayerGraph& graph,
                const ModelState<float>& state, const std::string& path) {
    Writer w;
    w.raw(kMagic, 4);
    w.u16(kVersion);
    w.u32(static_cast<uint32_t>(config.sample_rate));
    w.u8(config.conv_type == ConvType::Standard ? 0 : 1);
    w.i64(config.wm_num);
    w.i64(config.wm_den);
    w.u32(static_cast<uint32_t>(config.c1));
    w.u32(static_cast<uint32_t>(config.s1));
    w.u32(static_cast<uint32_t>(config.s2));
    w.u32(static_cast<uint32_t>(config.llf_kernel1));
    w.u32(static_cast<uint32_t>(config.llf_kernel2));
    w.u32(static_cast<uint32_t>(config.num_classes));
    w.f32(config.dropout_p);

    auto refs = enumerate(graph, state);
    w.u32(static_cast<uint32_t>(refs.size()));
    for (const auto& r : refs) {
        w.u16(static_cast<uint16_t>(r.name.size()));
        w.raw(r.name.data(), r.name.size());
        w.u8(static_cast<uint8_t>(r.tensor->shape.rank()));
        for (int64_t d : r.tensor->shape.dims) w.u32(static_cast<uint32_t>(d));
        w.u64(static_cast<uint64_t>(r.tensor->count()));
    }
    for (const auto& r : refs)
        for (float v : r.tensor->data) w.f32(v);

    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw data_error("cannot open for writing: " + tmp.string());
        f.write(reinterpret_cast<const char*>(w.bytes.data()),
                static_cast<std::streamsize>(w.bytes.size()));
        if (!f) throw data_error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw data_error("rename failed for " + path + ": " + ec.message());
}

std::pair<NetworkConfig, ModelState<float>> load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw data_error("cannot open model file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    // Magic and version come first so a foreign file is rejected before any
    // allocation proportional to its claimed sizes.
    if (bytes.size() < 6 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw magic_error(path + ": not a model file (bad magic)");
    Reader r(bytes);
    r.pos = 4;
    uint16_t version = r.u16("version");
    if (version != kVersion)
        throw version_error(path + ": unknown format version " + std::to_string(version));

    NetworkConfig config;
    config.sample_rate = static_cast<int>(r.u32("sample_rate"));
    config.conv_type = r.u8("conv_type") == 0 ? ConvType::Standard : ConvType::DwSeparable;
    config.wm_num = r.i64("wm_num");
    config.wm_den = r.i64("wm_den");
    config.c1 = static_cast<int>(r.u32("c1"));
    config.s1 = static_cast<int>(r.u32("s1"));
    config.s2 = static_cast<int>(r.u32("s2"));
    config.llf_kernel1 = static_cast<int>(r.u32("kernel1"));
    config.llf_kernel2 = static_cast<int>(r.u32("kernel2"));
    config.num_classes = static_cast<int>(r.u32("num_classes"));
    config.dropout_p = r.f32("dropout_p");
    try {
        config.validate();
    } catch (const config_error& e) {
        throw shape_mismatch_error(path + ": stored config invalid: " + e.what());
    }

    // Rebuild the graph and check the directory against it.
    LayerGraph graph = build(config, static_cast<int64_t>(
                                         std::max<int64_t>(1, config.sample_rate)) * 128 / 100);
    ModelState<float> state = init_weights<float>(graph, 0);
    auto refs = enumerate(graph, state);

    uint32_t tensor_count = r.u32("tensor_count");
    if (tensor_count != refs.size())
        throw shape_mismatch_error(path + ": directory has " + std::to_string(tensor_count) +
                                   " tensors, config implies " + std::to_string(refs.size()));

    uint64_t payload_total = 0;
    std::vector<uint64_t> counts(refs.size());
    for (size_t i = 0; i < refs.size(); ++i) {
        uint16_t name_len = r.u16("tensor name length");
        std::string name = r.str(name_len, "tensor name");
        uint8_t rank = r.u8("tensor rank");
        Shape shape;
        for (uint8_t d = 0; d < rank; ++d)
            shape.dims.push_back(static_cast<int64_t>(r.u32("tensor dim")));
        uint64_t count = r.u64("tensor element count");
        if (name != refs[i].name)
            throw shape_mismatch_error(path + ": tensor " + std::to_string(i) + " is '" + name +
                                       "', expected '" + refs[i].name + "'");
        if (shape != refs[i].tensor->shape)
            throw shape_mismatch_error(path + ": tensor '" + name + "' has shape " + shape.str() +
                                       ", config implies " + refs[i].tensor->shape.str());
        if (count != static_cast<uint64_t>(refs[i].tensor->count()))
            throw shape_mismatch_error(path + ": tensor '" + name + "' element count mismatch");
        counts[i] = count;
        payload_total += count;
    }

    if (r.pos + payload_total * 4 > bytes.size())
        throw payload_error(path + ": payload short by " +
                            std::to_string(r.pos + payload_total * 4 - bytes.size()) + " bytes");

    for (size_t i = 0; i < refs.size(); ++i) {
        Tensor<float>* t = const_cast<Tensor<float>*>(refs[i].tensor);
        for (uint64_t j = 0; j < counts[i]; ++j) t->data[j] = r.f32("payload");
    }
    if (r.pos != bytes.size())
        throw payload_error(path + ": " + std::to_string(bytes.size() - r.pos) +
                            " trailing bytes after payload");
    return {config, std::move(state)};
}

}  // namespace aclnet
